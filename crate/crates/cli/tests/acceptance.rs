//! Acceptance suite: one line per criterion on stderr, then a single verdict.
//!
//! Run with `cargo test -p cwtori-cli --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use cwtori::closure::{
    build_curve, continue_column, continue_family, homogeneous_member, member_at_area, monodromy_derivative,
    mu_homogeneous, rho_infinity, solve_member, solve_rho, ClosureTarget, FamilyGrid, FamilyPoint,
};
use cwtori::elastica::{
    integrate_profile_ode, quartic_real_roots, solve_x0, ElasticParams, KappaClosedForm, OrbitClass,
};
use cwtori::equivariant::{
    family_12, lagrange_estimates, lift_12, normal_variation, solve_member_12, willmore_12, Member12,
};
use cwtori::hopf::{class_from_area_length, conformal_hopf_differential, willmore_energy, HomogeneousTorus};
use cwtori::mesh::{Mesh3, DEFAULT_POLE};
use cwtori::ode::OdeOptions;
use cwtori::stability::{alpha_crit, beta_homogeneous, BISECTION_RTOL};
use cwtori::weierstrass::{degenerate_family, DegenerateLattice, Lattice, Weierstrass};
use cwtori::C64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() <= limit, || format!("runtime {:.2?} over {:?}", t.elapsed(), limit))
}

fn c1_alpha_one() -> Outcome {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_cwtori")).args(["stability", "--b", "1"]).output().map_err(err)?;
    let elapsed = t.elapsed();
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(err)?;
    let a = v["report"]["alpha_crit"].as_f64().ok_or("no alpha_crit")?;
    let rel = (a / (10.0 * PI * PI) - 1.0).abs();
    ensure(rel < 1e-9, || format!("alpha {a}, rel err {rel:e}"))?;
    let kernel = v["report"]["kernel"].as_array().ok_or("no kernel")?;
    ensure(kernel.len() == 4, || format!("{} kernel modes", kernel.len()))?;
    // each mode must be one of sin/cos(√2(kx + ly)) for (k, l) ∈ {(1, 2), (2, 1)}, all four present
    let mut seen = Vec::new();
    for m in kernel {
        let (k, l) = (m["k"].as_f64().unwrap(), m["l"].as_f64().unwrap());
        let cf: Vec<f64> = m["coeffs"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
        let eval = |x: f64, y: f64| {
            let (sx, cx) = (2f64.sqrt() * k * x).sin_cos();
            let (sy, cy) = (2f64.sqrt() * l * y).sin_cos();
            cf[0] * sx * cy + cf[1] * cx * sy + cf[2] * cx * cy + cf[3] * sx * sy
        };
        let phase = |x: f64, y: f64| 2f64.sqrt() * (k * x + l * y);
        let pts = [(0.37, 1.21), (2.0, -0.4), (-1.3, 0.9), (3.1, 2.7)];
        let is_sin = pts.iter().all(|&(x, y)| (eval(x, y) - phase(x, y).sin()).abs() < 1e-12);
        let is_cos = pts.iter().all(|&(x, y)| (eval(x, y) - phase(x, y).cos()).abs() < 1e-12);
        ensure(is_sin || is_cos, || format!("mode ({k},{l}) {cf:?} is not a pure kernel wave"))?;
        seen.push((k as u32, l as u32, is_sin));
    }
    seen.sort();
    seen.dedup();
    ensure(seen.len() == 4 && seen.iter().all(|&(k, l, _)| (k, l) == (1, 2) || (k, l) == (2, 1)), || {
        format!("kernel {seen:?}")
    })?;
    ensure(elapsed <= Duration::from_secs(1), || format!("runtime {elapsed:.2?}"))?;
    Ok(format!("alpha = {a:.12} (rel {rel:.1e}), kernel sin/cos(√2(x+2y)), sin/cos(√2(2x+y)), {elapsed:.2?}"))
}

fn c2_clifford_energy() -> Outcome {
    let t = Instant::now();
    let w = willmore_energy(&HomogeneousTorus::from_b(1.0).map_err(err)?.mesh(1024, 1024));
    let rel = (w.value / (2.0 * PI * PI) - 1.0).abs();
    ensure(rel < 1e-6, || format!("W = {}, rel {rel:e}", w.value))?;
    ensure(w.order >= 1.9, || format!("order {}", w.order))?;
    within(t, Duration::from_secs(30))?;
    Ok(format!("W = {:.10} (rel {rel:.1e}), order {:.3}, {:.2?}", w.value, w.order, t.elapsed()))
}

const LATTICES: [(f64, f64); 6] = [(1.0, 0.1), (4.0, 0.0), (-2.0, 1.0), (0.5, -0.3), (1.3384, 0.29), (3.0, -1.5)];

fn c3_elliptic() -> Outcome {
    let t = Instant::now();
    let (mut ode, mut leg, mut count) = (0.0f64, 0.0f64, 0);
    for &(g2, g3) in &LATTICES {
        let l = Lattice::from_invariants(g2, g3).map_err(err)?;
        leg = leg.max(l.legendre_residual());
        for i in 0..9 {
            for j in 0..9 {
                let z = C64::new(-3.0 + 0.75 * i as f64 + 0.013, -3.0 + 0.75 * j as f64 + 0.029);
                if l.distance_to_lattice(z) < 0.05 {
                    continue;
                }
                let p = l.wp(z).map_err(err)?;
                let dp = l.wp_prime(z).map_err(err)?;
                let r = (dp * dp - (4.0 * p * p * p - g2 * p - g3)).norm() / (1.0 + p.norm().powi(3));
                ode = ode.max(r);
                count += 1;
            }
        }
    }
    ensure(ode < 1e-10, || format!("ODE residual {ode:e}"))?;
    ensure(leg < 1e-10, || format!("Legendre residual {leg:e}"))?;
    let a = 1.0 / 3.0;
    let mut lim = 0.0f64;
    let mut disc = 0.0f64;
    for sign in [1.0, -1.0] {
        let l = Lattice::from_invariants(12.0 * a * a * (1.0 + 1.4e-11 * sign), 8.0 * a * a * a).map_err(err)?;
        disc = disc.max(l.disc.abs());
        for z in [C64::new(0.4, 0.1), C64::new(0.9, -0.3), C64::new(1.2, 0.05)] {
            let d = degenerate_family(a, z).map_err(err)?;
            lim = lim.max((l.wp(z).map_err(err)? - d.wp_inf).norm());
            lim = lim.max((l.zeta(z).map_err(err)? - d.zeta_inf).norm());
        }
    }
    ensure(lim < 1e-4, || format!("degenerate limit gap {lim:e}"))?;
    within(t, Duration::from_secs(5))?;
    Ok(format!(
        "ODE {ode:.1e} over {count} points, Legendre {leg:.1e}, degenerate gap {lim:.1e} at |D| = {disc:.1e}, {:.2?}",
        t.elapsed()
    ))
}

fn c4_closing() -> Outcome {
    let d = DegenerateLattice::for_lobes(2);
    let dm = monodromy_derivative(&d, rho_infinity(d.a).map_err(err)?).map_err(err)?;
    let dm_err = (dm - C64::new(3.0 * PI / 8.0, 0.0)).norm();
    ensure(dm_err < 1e-6, || format!("dM/drho = {dm}"))?;
    let target = ClosureTarget::new(1, 2).map_err(err)?;
    let (mut res, mut worst_t) = (0.0f64, Duration::ZERO);
    let mut solved = 0;
    for eps in [1e-10, 1e-8, 1e-6, 1e-4, 1e-3] {
        for g3_shift in [0.0, 1e-4] {
            let t = Instant::now();
            let lat = Lattice::from_invariants(4.0 / 3.0 * (1.0 - eps), 8.0 / 27.0 * (1.0 + g3_shift)).map_err(err)?;
            if lat.disc >= 0.0 {
                continue;
            }
            let s = solve_rho(&lat, target).map_err(err)?;
            res = res.max(s.residual);
            worst_t = worst_t.max(t.elapsed());
            solved += 1;
        }
    }
    ensure(solved >= 5, || format!("only {solved} wavelike lattices"))?;
    ensure(res < 1e-12, || format!("solve_rho residual {res:e}"))?;
    let mut gap = 0.0f64;
    for lt in [1e-4, 1e-3, 1e-2] {
        let t = Instant::now();
        let pt = solve_member(2, lt, 0.1, mu_homogeneous(2, 0.1)).map_err(err)?;
        let p = pt.params();
        let lat = Lattice::from_invariants(pt.g2, pt.g3).map_err(err)?;
        let x0 = solve_x0(&lat, &p).map_err(err)?;
        let curve = build_curve(&lat, pt.rho, x0, &p, 2, 2049).map_err(err)?;
        gap = gap.max(curve.closure_residual);
        worst_t = worst_t.max(t.elapsed());
    }
    ensure(gap < 1e-8, || format!("closure gap {gap:e}"))?;
    ensure(worst_t <= Duration::from_secs(10), || format!("slowest point {worst_t:.2?}"))?;
    Ok(format!(
        "residual {res:.1e} on {solved} lattices, dM/drho - 3pi/8 = {dm_err:.1e}, gap {gap:.1e}, slowest point {worst_t:.2?}"
    ))
}

fn c5_oracle() -> Outcome {
    let t = Instant::now();
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-14, ..Default::default() };
    let (mut gap, mut drift) = (0.0f64, 0.0f64);
    for i in 0..5 {
        for j in 0..5 {
            let p = ElasticParams::new(3.3 + 0.1 * i as f64, -0.02 - 0.015 * j as f64, 1.0, 0.03);
            ensure(quartic_real_roots(&p).class == OrbitClass::Wavelike, || format!("{p:?} is not wavelike"))?;
            let k = KappaClosedForm::new(&p).map_err(err)?;
            let ode = integrate_profile_ode(&p, k.period(), 201, &opts).map_err(err)?;
            for s in &ode.samples {
                gap = gap.max((s.kappa - k.kappa(s.x).map_err(err)?).abs());
                gap = gap.max((s.kappa_prime - k.kappa_prime(s.x).map_err(err)?).abs());
            }
            let long = integrate_profile_ode(&p, 10.0 * k.period(), 11, &opts).map_err(err)?;
            drift = drift.max(long.drift);
        }
    }
    ensure(gap < 1e-7, || format!("closed form vs ODE {gap:e}"))?;
    ensure(drift < 1e-9, || format!("drift {drift:e}"))?;
    within(t, Duration::from_secs(20))?;
    Ok(format!("max |kappa - kappa_ode| {gap:.1e}, drift over 10 periods {drift:.1e}, {:.2?}", t.elapsed()))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Barycentric containment in the triangle (a, b, c).
fn in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = |o: (f64, f64), u: (f64, f64), v: (f64, f64)| (u.0 - o.0) * (v.1 - o.1) - (u.1 - o.1) * (v.0 - o.0);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
}

fn loglog_slope(pts: impl Iterator<Item = (f64, f64)>) -> f64 {
    let xy: Vec<(f64, f64)> = pts.map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / n, xy.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_coverage() -> Outcome {
    let t = Instant::now();
    let (nl, nk) = (20, 20);
    let grid = FamilyGrid { lambda_tilde: linspace(0.0, 0.02, nl), kappa0: linspace(-0.1, 0.1, nk) };
    let fam = continue_family(2, &grid).map_err(err)?;
    ensure(fam.len() == nl * nk, || format!("{} members", fam.len()))?;
    // rows are κ₀-major: fam[ik * nl + il]
    let ab = |pt: &FamilyPoint| {
        let c = class_from_area_length(pt.area, pt.length);
        (c.a, c.b)
    };
    let img: Vec<(f64, f64)> = fam.iter().map(ab).collect();
    let at = |ik: usize, il: usize| img[ik * nl + il];
    // κ₀ > 0 half: cells between consecutive κ₀ columns
    let first = grid.kappa0.iter().position(|&k| k > 0.0).unwrap();
    let a_top = (first..nk).map(|ik| at(ik, nl - 1).0).fold(f64::INFINITY, f64::min);
    ensure(a_top > 0.0, || format!("top row a = {a_top}"))?;
    let b_lo = (first..nk).map(|ik| at(ik, 0).1).fold(f64::INFINITY, f64::min);
    let b_hi = (first..nk).map(|ik| at(ik, 0).1).fold(0.0, f64::max);
    let (r_b0, r_b1) = (b_lo + 0.2 * (b_hi - b_lo), b_lo + 0.8 * (b_hi - b_lo));
    let (r_a0, r_a1) = (0.02 * a_top, 0.5 * a_top);
    let mut missed = Vec::new();
    for p in
        linspace(r_a0, r_a1, 12).into_iter().flat_map(|a| linspace(r_b0, r_b1, 12).into_iter().map(move |b| (a, b)))
    {
        let hit = (first..nk - 1).any(|ik| {
            (0..nl - 1).any(|il| {
                let (q00, q01, q10, q11) = (at(ik, il), at(ik, il + 1), at(ik + 1, il), at(ik + 1, il + 1));
                in_triangle(p, q00, q01, q11) || in_triangle(p, q00, q11, q10)
            })
        });
        if !hit {
            missed.push(p);
        }
    }
    ensure(missed.is_empty(), || format!("{} rectangle samples uncovered, first {:?}", missed.len(), missed[0]))?;
    // L − L₀ ∝ λ̃^p, least squares in log-log: along κ₀ = 0 (not a node of an even grid)
    // and along the constant-area path through the circle of curvature 0.05
    let col = continue_column(2, 0.0, &grid.lambda_tilde).map_err(err)?;
    let sym = loglog_slope(col[1..].iter().map(|p| (p.lambda_tilde, p.length - 2.0 * PI)));
    let h = homogeneous_member(2, 0.05);
    let mut mu = h.mu;
    let mut path = Vec::new();
    for &lt in &grid.lambda_tilde[1..] {
        let p = member_at_area(2, lt, 0.05, mu).map_err(err)?;
        mu = p.mu;
        path.push((lt, p.length - h.length));
    }
    let area = loglog_slope(path.into_iter());
    ensure((sym - 2.0).abs() < 0.1 && (area - 2.0).abs() < 0.1, || format!("exponents {sym}, {area}"))?;
    let slope = format!("{sym:.4} (kappa0 = 0), {area:.4} (constant A)");
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "rectangle a in [{r_a0:.2e}, {r_a1:.2e}] x b in [{r_b0:.4}, {r_b1:.4}] covered, exponent {slope}, {:.2?}",
        t.elapsed()
    ))
}

/// Fiber length in the round metric by spectral differentiation.
fn fiber_length(f: &cwtori::hopf::EquivariantImmersion, i: usize) -> f64 {
    let period = f.dy * f.ny as f64;
    let d: Vec<Vec<f64>> = (0..4)
        .map(|c| cwtori::spectral::periodic_derivative(&(0..f.ny).map(|j| f.at(i, j)[c]).collect::<Vec<_>>(), period))
        .collect();
    (0..f.ny).map(|j| (0..4).map(|c| d[c][j] * d[c][j]).sum::<f64>().sqrt()).sum::<f64>() * f.dy
}

fn c7_twelve() -> Outcome {
    let (mut phi, mut speed, mut fiber, mut q4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut members = 0;
    for b in [1.02, 1.05, 1.1] {
        for eps in [0.01, 0.05] {
            let m = solve_member_12(b, eps, None).map_err(err)?;
            phi = phi.max((m.shot.phi_total - 2.0 * PI).abs());
            let p = m.profile(256).map_err(err)?;
            speed = speed.max(p.unit_speed_residual());
            let f = lift_12(&p, 256).map_err(err)?;
            for i in (0..p.len()).step_by(16) {
                // in g₍₁,₂₎ every fiber has length 2π
                fiber = fiber.max((fiber_length(&f, i) / (4.0 - 3.0 * p.r[i] * p.r[i]).sqrt() - 2.0 * PI).abs());
            }
            let hd = conformal_hopf_differential(&f);
            for (i, q) in hd.q.iter().enumerate() {
                q4 = q4.max((4.0 * q - C64::new(p.kappa12[2 * i], p.omega[2 * i])).norm());
            }
            ensure((willmore_12(&p) - m.willmore).abs() < 1e-8 * m.willmore, || "W quadrature mismatch".into())?;
            members += 1;
        }
    }
    ensure(phi < 1e-10, || format!("Phi gap {phi:e}"))?;
    ensure(speed < 1e-8, || format!("unit speed {speed:e}"))?;
    ensure(fiber < 1e-8, || format!("fiber length {fiber:e}"))?;
    ensure(q4 < 1e-4, || format!("4q mismatch {q4:e}"))?;
    Ok(format!("{members} members: Phi {phi:.1e}, unit speed {speed:.1e}, fiber {fiber:.1e}, 4q {q4:.1e}"))
}

fn c8_normal_variation() -> Outcome {
    let mut worst: f64 = 1.0;
    let mut y: f64 = 0.0;
    let mut a_range = (f64::INFINITY, 0.0f64);
    for eps in [0.005, 0.01, 0.02, 0.03, 0.05] {
        let m = solve_member_12(1.05, eps, None).map_err(err)?;
        let v = normal_variation(&m, 128, 32).map_err(err)?;
        ensure((v.frequency - (1.05 + 4.0 / 1.05)).abs() < 1e-12, || format!("frequency {}", v.frequency))?;
        worst = worst.min(v.correlation);
        y = y.max(v.y_content);
        a_range = (a_range.0.min(v.a), a_range.1.max(v.a));
    }
    ensure(worst > 0.99, || format!("correlation {worst}"))?;
    ensure(y < 0.01, || format!("y content {y:e}"))?;
    Ok(format!("a in [{:.1e}, {:.1e}]: min correlation {worst:.5}, y content {y:.1e}", a_range.0, a_range.1))
}

fn c9_multipliers() -> Outcome {
    let eps: Vec<f64> = (0..=8).map(|k| 0.005 * k as f64).collect();
    let fam = family_12(1.05, &eps).map_err(err)?;
    let pts: Vec<((f64, f64), f64)> = fam.iter().map(|m: &Member12| ((m.class.a, m.class.b), m.willmore)).collect();
    let e = lagrange_estimates(&pts).map_err(err)?;
    ensure(e.along == "a", || format!("estimates along {}", e.along))?;
    // e.at is increasing in a, so α must decrease along it
    ensure(e.derivative.windows(2).all(|w| w[0] > w[1]), || {
        format!("alpha not increasing as a decreases: {:?}", e.derivative)
    })?;
    let second: Vec<f64> = e.derivative.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    ensure(second.iter().all(|&d| d < 0.0), || format!("second differences {second:?}"))?;
    let target = alpha_crit(1.05, beta_homogeneous(1.05)).map_err(err)?.alpha_crit;
    let rel = (e.limit / target - 1.0).abs();
    ensure(rel < 0.02, || format!("limit {} vs {target}", e.limit))?;
    let hb: Vec<((f64, f64), f64)> =
        (0..5).map(|k| 1.0 + 1e-3 * k as f64).map(|b| ((0.0, b), PI * PI * (b + 1.0 / b))).collect();
    let beta1 = lagrange_estimates(&hb).map_err(err)?.limit;
    ensure(beta1.abs() < 1e-6 && beta_homogeneous(1.0).abs() < 1e-6, || format!("beta^1 = {beta1}"))?;
    let mut sym = 0.0f64;
    for b in [1.05, 1.1, 1.3] {
        let a = alpha_crit(b, beta_homogeneous(b)).map_err(err)?.alpha_crit;
        let ai = alpha_crit(1.0 / b, beta_homogeneous(1.0 / b)).map_err(err)?.alpha_crit;
        sym = sym.max((a - ai).abs() / a);
    }
    ensure(sym <= BISECTION_RTOL, || format!("alpha^(1/b) vs alpha^b rel {sym:e}"))?;
    Ok(format!(
        "alpha {:.4} -> {:.4} as a decreases, limit {:.6} vs {target:.6} (rel {rel:.1e}), beta^1 {beta1:.1e}, symmetry {sym:.1e}",
        e.derivative[e.derivative.len() - 1],
        e.derivative[0],
        e.limit
    ))
}

fn c10_embedded() -> Outcome {
    let t = Instant::now();
    let (mut meshes, mut a_max) = (0, 0.0f64);
    for b in [1.02, 1.05, 1.08, 1.1] {
        let eps: Vec<f64> = (0..=12).map(|k| 0.01 * k as f64).collect();
        for m in family_12(b, &eps).map_err(err)? {
            if m.class.a > 0.05 {
                break;
            }
            let f = lift_12(&m.profile(128).map_err(err)?, 64).map_err(err)?;
            let mesh = Mesh3::from_immersion(&f, &DEFAULT_POLE).map_err(err)?;
            let hits = mesh.self_intersections();
            ensure(hits == 0, || format!("b = {b}, a = {:.3e}: {hits} crossings", m.class.a))?;
            ensure(mesh.euler_characteristic() == 0 && mesh.is_consistently_oriented(), || {
                format!("b = {b}, a = {:.3e}: bad topology", m.class.a)
            })?;
            a_max = a_max.max(m.class.a);
            meshes += 1;
        }
    }
    Ok(format!("{meshes} meshes at 128x64, a up to {a_max:.3}, no self-intersections, {:.2?}", t.elapsed()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("alpha at b = 1 and kernel", c1_alpha_one),
        ("Clifford energy", c2_clifford_energy),
        ("elliptic engine", c3_elliptic),
        ("closing condition", c4_closing),
        ("closed form vs ODE", c5_oracle),
        ("Hopf family coverage", c6_coverage),
        ("(1,2) construction", c7_twelve),
        ("normal variation", c8_normal_variation),
        ("multipliers", c9_multipliers),
        ("self-intersection scan", c10_embedded),
    ];
    let mut failed = Vec::new();
    let mut log = std::io::stderr();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, msg) = match &r {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        writeln!(log, "criterion {:>2} {tag} {name}: {msg}", i + 1).unwrap();
        if r.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
