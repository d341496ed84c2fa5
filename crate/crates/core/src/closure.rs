//! Closed constrained elastic curves: monodromy, the closing condition, the
//! σ-quotient curve on S², and two-parameter continuation of n-lobed families.
//!
//! ρ is always taken on the bounded segment ω₁ + i(0, |ω₃|), where ℘ is real
//! and decreasing. Closing targets are M ≡ iπm/(2n) modulo iπ.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::elastica::{quartic_real_roots, ElasticParams, KappaClosedForm, OrbitClass};
use crate::error::{Error, Result};
use crate::weierstrass::{Lattice, Weierstrass};

/// Winding number m and lobe number n of a closed curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClosureTarget {
    pub m: u32,
    pub n: u32,
}

impl ClosureTarget {
    pub fn new(m: u32, n: u32) -> Result<ClosureTarget> {
        if m == 0 || n == 0 {
            return Err(Error::OutOfRange(format!("closure target needs positive m, n; got ({m}, {n})")));
        }
        let g = gcd(m, n);
        Ok(ClosureTarget { m: m / g, n: n / g })
    }

    /// Imaginary part of the target monodromy, πm/(2n).
    pub fn value(&self) -> f64 {
        PI * self.m as f64 / (2.0 * self.n as f64)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Wrap x into (−π/2, π/2].
fn wrap_half_pi(x: f64) -> f64 {
    let r = x - PI * (x / PI).round();
    if r <= -PI / 2.0 {
        r + PI
    } else {
        r
    }
}

/// M(ρ) = ρη₁ − ζ(ρ)ω₁.
pub fn monodromy<W: Weierstrass + ?Sized>(lat: &W, rho: C64) -> Result<C64> {
    Ok(rho * lat.eta1() - lat.zeta(rho)? * lat.omega1())
}

/// ∂M/∂ρ = η₁ + ℘(ρ)ω₁.
pub fn monodromy_derivative<W: Weierstrass + ?Sized>(lat: &W, rho: C64) -> Result<C64> {
    Ok(lat.eta1() + lat.wp(rho)? * lat.omega1())
}

/// Bounded representative ω₁ + i·arcosh(√(12a/(12a−1)))/√(3a) of the degenerate ρ∞.
pub fn rho_infinity(a: f64) -> Result<C64> {
    if !(12.0 * a > 1.0) {
        return Err(Error::OutOfRange(format!("rho_infinity needs a > 1/12, got {a}")));
    }
    let k = (3.0 * a).sqrt();
    let s = (12.0 * a / (12.0 * a - 1.0)).sqrt().acosh();
    Ok(C64::new(PI / (2.0 * k), s / k))
}

/// ρ∞ = arcsin(√(12a/(12a−1)))/√(3a) on the branch with positive imaginary part.
///
/// Equal to [`rho_infinity`]: the argument exceeds 1, so arcsin = π/2 + i·arcosh.
pub fn rho_infinity_arcsin(a: f64) -> Result<C64> {
    if !(12.0 * a > 1.0) {
        return Err(Error::OutOfRange(format!("rho_infinity needs a > 1/12, got {a}")));
    }
    let x = (12.0 * a / (12.0 * a - 1.0)).sqrt();
    // asin(x) for x > 1 on the upper lip of the cut
    let asin = -C64::i() * (C64::i() * x + (C64::new(1.0 - x * x, 0.0)).sqrt()).ln();
    let asin = C64::new(asin.re, asin.im.abs());
    Ok(asin / (3.0 * a).sqrt())
}

/// A solved closing condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoSolution {
    pub rho: C64,
    pub monodromy: C64,
    /// |M(ρ) − target| modulo iπ.
    pub residual: f64,
    pub derivative: C64,
}

/// Parameter a of the nearby degenerate family, from g₃/g₂ = 2a/3.
pub fn nearby_degenerate_a(g2: f64, g3: f64) -> f64 {
    1.5 * g3 / g2
}

/// Solve M(ρ) ≡ iπm/(2n) (mod iπ) for ρ on ω₁ + i(0, |ω₃|).
///
/// Newton from the degenerate predictor ρ∞ when available, otherwise from a scan of the segment.
pub fn solve_rho(lat: &Lattice, target: ClosureTarget) -> Result<RhoSolution> {
    let goal = target.value();
    let top = lat.omega3.im;
    let a = nearby_degenerate_a(lat.g2, lat.g3);
    // at the induced degenerate point dM/dρ = (n/4 − 1/(4n))π
    let n = target.n as f64;
    let dm_inf = (0.25 * n - 0.25 / n) * PI;
    if dm_inf.abs() < 1e-10 {
        return Err(Error::DerivativeDegenerate { value: dm_inf.abs() });
    }
    let h = |t: f64| -> Result<f64> { Ok(wrap_half_pi(monodromy(lat, C64::new(lat.omega1, t))?.im - goal)) };
    let predictor = if 12.0 * a > 1.0 {
        let r = rho_infinity(a)?;
        Some(r.im.min(0.999 * top))
    } else {
        None
    };
    let mut t = match predictor {
        Some(t) => t,
        None => scan_bracket(&h, top)?,
    };
    let mut converged = false;
    for _ in 0..60 {
        let rho = C64::new(lat.omega1, t);
        let f = h(t)?;
        // dM/dt = i·dM/dρ; the imaginary part of M moves with Re(dM/dρ)
        let d = monodromy_derivative(lat, rho)?.re;
        if d.abs() < 1e-10 {
            return Err(Error::DerivativeDegenerate { value: d.abs() });
        }
        let mut step = f / d;
        // keep inside the segment
        while t - step <= 0.0 || t - step >= top {
            step *= 0.5;
        }
        t -= step;
        if step.abs() < 1e-15 * (1.0 + t.abs()) || f.abs() < 1e-15 {
            converged = true;
            break;
        }
    }
    let rho = C64::new(lat.omega1, t);
    let mval = monodromy(lat, rho)?;
    let residual = {
        let d = mval - C64::new(0.0, goal);
        C64::new(d.re, wrap_half_pi(d.im)).norm()
    };
    if !converged && residual > 1e-12 {
        return Err(Error::NoConvergence { what: "solve_rho", residual });
    }
    Ok(RhoSolution { rho, monodromy: mval, residual, derivative: monodromy_derivative(lat, rho)? })
}

fn scan_bracket<F: Fn(f64) -> Result<f64>>(h: &F, top: f64) -> Result<f64> {
    let n = 400;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..n {
        let t = top * i as f64 / n as f64;
        let v = h(t)?;
        if let Some((tp, vp)) = prev {
            if vp.signum() != v.signum() && (v - vp).abs() < 1.0 {
                return Ok(tp - vp * (t - tp) / (v - vp));
            }
        }
        prev = Some((t, v));
    }
    Err(Error::NoRoot("closing condition has no root on the segment".into()))
}

/// Solve ℘(ω₁ + it) = (μ − G)/6 for t ∈ (0, |ω₃|).
pub fn rho_from_params(lat: &Lattice, p: &ElasticParams) -> Result<C64> {
    let target = (p.mu - p.g) / 6.0;
    let top = lat.omega3.im;
    let f = |t: f64| -> Result<f64> { Ok(lat.wp(C64::new(lat.omega1, t))?.re - target) };
    let lo0 = 1e-12 * top;
    if f(lo0)? < 0.0 {
        return Err(Error::NoRoot(format!("rho: (mu - G)/6 = {target} above wp(omega1)")));
    }
    let (mut lo, mut hi) = (lo0, top);
    // ℘ → −∞ at ω₁ + ω₃ for rhombic lattices; guard the far end
    let mut k = 1.0;
    while hi - lo0 > 0.0 {
        let cand = top * (1.0 - 1e-12 * k);
        match f(cand) {
            Ok(v) if v < 0.0 => {
                hi = cand;
                break;
            }
            Ok(_) => return Err(Error::NoRoot(format!("rho: (mu - G)/6 = {target} out of range"))),
            Err(_) => k *= 10.0,
        }
        if k > 1e10 {
            return Err(Error::NoRoot("rho bracket".into()));
        }
    }
    while hi - lo > 1e-10 * top {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..6 {
        let z = C64::new(lat.omega1, t);
        let v = lat.wp(z)?.re - target;
        let d = (C64::i() * lat.wp_prime(z)?).re;
        if d == 0.0 {
            break;
        }
        let tn = t - v / d;
        if !(tn > 0.0 && tn < top) {
            break;
        }
        let done = (tn - t).abs() < 1e-16 * top;
        t = tn;
        if done {
            break;
        }
    }
    Ok(C64::new(lat.omega1, t))
}

/// One sample of a profile curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub x: f64,
    pub point: [f64; 3],
    pub kappa: f64,
}

/// Arclength-sampled curve on the round sphere of curvature G.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCurve {
    pub samples: Vec<CurveSample>,
    /// Stereographic coordinate w with point = stereo(w)/√G, and dw/dx.
    pub stereo: Vec<(C64, C64)>,
    pub length: f64,
    pub enclosed_area: f64,
    pub closure_residual: f64,
    pub g: f64,
    pub lattice: Option<Lattice>,
    pub rho: C64,
    pub x0: C64,
    /// Intrinsic curvature periods covered.
    pub periods: u32,
}

/// Stereographic map ℂ → unit S².
pub fn stereo(w: C64) -> [f64; 3] {
    let n2 = w.norm_sqr();
    if !n2.is_finite() {
        return [0.0, 0.0, 1.0];
    }
    let d = 1.0 + n2;
    [2.0 * w.re / d, 2.0 * w.im / d, (n2 - 1.0) / d]
}

/// The curve from the σ-quotient, normalised by a real dilation to unit speed.
#[derive(Debug, Clone)]
pub struct SigmaCurve {
    pub lattice: Lattice,
    pub rho: C64,
    pub x0: C64,
    pub g: f64,
    zr: C64,
    ln_c: f64,
}

impl SigmaCurve {
    pub fn new(lat: &Lattice, rho: C64, x0: C64, g: f64) -> Result<SigmaCurve> {
        let zr = lat.zeta(rho)?;
        let mut c = SigmaCurve { lattice: lat.clone(), rho, x0, g, zr, ln_c: 0.0 };
        let (w0, dw0) = c.raw(0.0)?;
        let a = w0.norm_sqr();
        let b = dw0.norm() / g.sqrt();
        let disc = b * b - a;
        if disc < 0.0 {
            return Err(Error::ConstraintViolation { what: "unit-speed dilation", residual: -disc });
        }
        let roots = [(b - disc.sqrt()) / a, (b + disc.sqrt()) / a];
        // pick the dilation that keeps unit speed along the whole period
        let probe = [0.37, 0.71, 1.13].map(|f| f * lat.omega1);
        let mut best = (f64::INFINITY, roots[0]);
        for &r in &roots {
            if !(r > 0.0) {
                continue;
            }
            c.ln_c = r.ln();
            let mut err: f64 = 0.0;
            for &x in &probe {
                err = err.max((c.speed(x)? - 1.0).abs());
            }
            if err < best.0 {
                best = (err, r);
            }
        }
        c.ln_c = best.1.ln();
        Ok(c)
    }

    fn raw(&self, x: f64) -> Result<(C64, C64)> {
        let z = C64::new(x, 0.0) + self.x0;
        let l = &self.lattice;
        let lw = l.ln_sigma(z - self.rho)? - l.ln_sigma(z + self.rho)? + 2.0 * self.zr * z;
        let dl = l.zeta(z - self.rho)? - l.zeta(z + self.rho)? + 2.0 * self.zr;
        let w = lw.exp();
        Ok((w, w * dl))
    }

    /// Stereographic coordinate and its x-derivative.
    pub fn w(&self, x: f64) -> Result<(C64, C64)> {
        let (w, dw) = self.raw(x)?;
        let c = self.ln_c.exp();
        Ok((w * c, dw * c))
    }

    /// Logarithmic derivative (log w)′ at x.
    pub fn log_derivative(&self, x: f64) -> Result<C64> {
        let z = C64::new(x, 0.0) + self.x0;
        let l = &self.lattice;
        Ok(l.zeta(z - self.rho)? - l.zeta(z + self.rho)? + 2.0 * self.zr)
    }

    pub fn point(&self, x: f64) -> Result<[f64; 3]> {
        let (w, _) = self.w(x)?;
        let s = 1.0 / self.g.sqrt();
        Ok(stereo(w).map(|v| v * s))
    }

    pub fn speed(&self, x: f64) -> Result<f64> {
        let (w, dw) = self.w(x)?;
        Ok(2.0 * dw.norm() / ((1.0 + w.norm_sqr()) * self.g.sqrt()))
    }
}

/// Sample the curve given by (lattice, ρ, x₀) over `periods` curvature periods.
pub fn build_curve(
    lat: &Lattice,
    rho: C64,
    x0: C64,
    p: &ElasticParams,
    periods: u32,
    samples: usize,
) -> Result<ProfileCurve> {
    let g = p.g;
    let r1 = (lat.wp(rho)?.re - (p.mu - g) / 6.0).abs();
    if r1 > 1e-10 {
        return Err(Error::ConstraintViolation { what: "wp(rho) = (mu - G)/6", residual: r1 });
    }
    let r2 = (2.0 * lat.wp(x0)?.re + lat.wp(rho)?.re + 0.25 * p.kappa0 * p.kappa0 + 0.25 * g).abs();
    if r2 > 1e-10 {
        return Err(Error::ConstraintViolation { what: "2wp(x0) + wp(rho) + kappa0^2/4 = -G/4", residual: r2 });
    }
    if samples < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: samples });
    }
    let sc = SigmaCurve::new(lat, rho, x0, g)?;
    let kf = KappaClosedForm::with_lattice(lat.clone(), p, x0)?;
    let span = 2.0 * lat.omega1 * periods as f64;
    let mut out = Vec::with_capacity(samples);
    let mut st = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = span * i as f64 / (samples - 1) as f64;
        let (w, dw) = sc.w(x)?;
        let s = 1.0 / g.sqrt();
        out.push(CurveSample { x, point: stereo(w).map(|v| v * s), kappa: kf.kappa(x)? });
        st.push((w, dw));
    }
    let mut curve = ProfileCurve {
        samples: out,
        stereo: st,
        length: 0.0,
        enclosed_area: 0.0,
        closure_residual: 0.0,
        g,
        lattice: Some(lat.clone()),
        rho,
        x0,
        periods,
    };
    let inv = curve_invariants(&curve);
    curve.length = inv.length;
    curve.enclosed_area = inv.area;
    curve.closure_residual = inv.residual;
    Ok(curve)
}

/// Circle of geodesic curvature κ₀ on the unit sphere, one turn, latitude about the north pole.
pub fn circle_profile(kappa0: f64, samples: usize) -> Result<ProfileCurve> {
    if samples < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: samples });
    }
    let sin_t = 1.0 / (1.0 + kappa0 * kappa0).sqrt();
    let cos_t = kappa0 * sin_t;
    let r = ((1.0 + cos_t) / (1.0 - cos_t)).sqrt();
    let span = 2.0 * PI * sin_t;
    let mut out = Vec::with_capacity(samples);
    let mut st = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = span * i as f64 / (samples - 1) as f64;
        let w = C64::from_polar(r, x / sin_t);
        st.push((w, w * C64::new(0.0, 1.0 / sin_t)));
        out.push(CurveSample { x, point: stereo(w), kappa: kappa0 });
    }
    let mut curve = ProfileCurve {
        samples: out,
        stereo: st,
        length: 0.0,
        enclosed_area: 0.0,
        closure_residual: 0.0,
        g: 1.0,
        lattice: None,
        rho: C64::new(f64::NAN, f64::NAN),
        x0: C64::new(f64::NAN, f64::NAN),
        periods: 1,
    };
    let inv = curve_invariants(&curve);
    curve.length = inv.length;
    curve.enclosed_area = inv.area;
    curve.closure_residual = inv.residual;
    Ok(curve)
}

/// Length, enclosed area and endpoint gap of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveInvariants {
    pub length: f64,
    /// 2π/G − ∫κ ds, reduced into (−2π/G, 2π/G].
    pub area: f64,
    pub residual: f64,
    /// Set when the endpoint gap exceeds 1e−6, so the area is not meaningful.
    pub open_warning: bool,
}

/// Length (speed quadrature, or Richardson-extrapolated chord sums without stereographic data),
/// area by Gauss–Bonnet, and the closure gap.
pub fn curve_invariants(c: &ProfileCurve) -> CurveInvariants {
    let s = &c.samples;
    let n = s.len();
    let chord = |step: usize| -> f64 {
        let mut acc = 0.0;
        let mut i = 0;
        while i + step < n {
            acc += dist(&s[i].point, &s[i + step].point);
            i += step;
        }
        acc
    };
    let length = if c.stereo.len() == n {
        // unit-speed data: trapezoid of the exact speed, spectrally accurate on a closed curve
        let sp = |(w, dw): &(C64, C64)| 2.0 * dw.norm() / ((1.0 + w.norm_sqr()) * c.g.sqrt());
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += 0.5 * (sp(&c.stereo[i]) + sp(&c.stereo[i + 1])) * (s[i + 1].x - s[i].x);
        }
        acc
    } else if (n - 1).is_multiple_of(2) {
        let l1 = chord(1);
        let l2 = chord(2);
        (4.0 * l1 - l2) / 3.0
    } else {
        chord(1)
    };
    // trapezoid: spectrally accurate over whole periods
    let mut tk = 0.0;
    for i in 0..n - 1 {
        tk += 0.5 * (s[i].kappa + s[i + 1].kappa) * (s[i + 1].x - s[i].x);
    }
    let area = reduce_area(2.0 * PI / c.g - tk, c.g);
    let residual = dist(&s[0].point, &s[n - 1].point);
    CurveInvariants { length, area, residual, open_warning: residual > 1e-6 }
}

/// Reduce an area into (−2π/G, 2π/G].
pub fn reduce_area(a: f64, g: f64) -> f64 {
    let full = 4.0 * PI / g;
    let mut r = a - full * (a / full).round();
    if r <= -0.5 * full {
        r += full;
    }
    if r > 0.5 * full * (1.0 + 1e-14) {
        r -= full;
    }
    r
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Homogeneous closing multiplier μ(κ₀) = n²(1 + κ₀²) − 3κ₀²/2 − 1/2 on the unit sphere.
pub fn mu_homogeneous(n: u32, kappa0: f64) -> f64 {
    let n2 = (n * n) as f64;
    n2 * (1.0 + kappa0 * kappa0) - 1.5 * kappa0 * kappa0 - 0.5
}

/// λ(κ₀) making the constant κ₀ a solution: −(κ₀³/2 + (μ + 1/2)κ₀).
pub fn lambda_homogeneous(n: u32, kappa0: f64) -> f64 {
    let m = mu_homogeneous(n, kappa0) + 0.5;
    -(0.5 * kappa0 * kappa0 * kappa0 + m * kappa0)
}

/// Member of an n-lobed Hopf family on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyPoint {
    pub n: u32,
    pub lambda_tilde: f64,
    pub kappa0: f64,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub g2: f64,
    pub g3: f64,
    pub disc: f64,
    pub rho: C64,
    pub x0: C64,
    /// Oriented enclosed area A.
    pub area: f64,
    /// Length L of the closed profile.
    pub length: f64,
    /// W = π∫(κ² + 1) ds of the Hopf torus.
    pub willmore: f64,
    pub monodromy_residual: f64,
}

impl FamilyPoint {
    /// Parameters of this member.
    pub fn params(&self) -> ElasticParams {
        ElasticParams { mu: self.mu, lambda: self.lambda, nu: self.nu, g: 1.0, kappa0: self.kappa0 }
    }

    /// ½(A, L).
    pub fn half_class(&self) -> (f64, f64) {
        (0.5 * self.area, 0.5 * self.length)
    }
}

/// Circle of geodesic curvature κ₀: the λ̃ = 0 member.
pub fn homogeneous_member(n: u32, kappa0: f64) -> FamilyPoint {
    let mu = mu_homogeneous(n, kappa0);
    let lambda = lambda_homogeneous(n, kappa0);
    let p = ElasticParams::new(mu, lambda, 1.0, kappa0);
    let (g2, g3) = p.invariants();
    let root = (1.0 + kappa0 * kappa0).sqrt();
    let length = 2.0 * PI / root;
    let area = 2.0 * PI * (1.0 - kappa0 / root);
    FamilyPoint {
        n,
        lambda_tilde: 0.0,
        kappa0,
        mu,
        lambda,
        nu: p.nu,
        g2,
        g3,
        disc: 0.0,
        rho: C64::new(f64::NAN, f64::NAN),
        x0: C64::new(f64::NAN, f64::NAN),
        area,
        length,
        willmore: PI * (kappa0 * kappa0 + 1.0) * length,
        monodromy_residual: 0.0,
    }
}

/// Solve μ so that the member (λ̃, κ₀) closes with n lobes, starting from `mu_guess`.
pub fn solve_member(n: u32, lambda_tilde: f64, kappa0: f64, mu_guess: f64) -> Result<FamilyPoint> {
    let target = ClosureTarget::new(1, n)?;
    let goal = target.value();
    let lambda = lambda_homogeneous(n, kappa0) + lambda_tilde;
    let eval = |mu: f64| -> Result<(f64, Lattice, ElasticParams, C64)> {
        let p = ElasticParams::new(mu, lambda, 1.0, kappa0);
        let (g2, g3) = p.invariants();
        let lat = Lattice::from_invariants(g2, g3)?;
        let rho = rho_from_params(&lat, &p)?;
        let m = monodromy(&lat, rho)?;
        Ok((wrap_half_pi(m.im - goal), lat, p, rho))
    };
    let mut m0 = mu_guess;
    let mut f0 = eval(m0)?.0;
    let mut m1 = mu_guess + 1e-4 * (1.0 + mu_guess.abs()) * if f0 > 0.0 { 1.0 } else { -1.0 };
    let mut f1 = eval(m1)?.0;
    let mut ok = false;
    for _ in 0..60 {
        if f1 == f0 {
            break;
        }
        let m2 = m1 - f1 * (m1 - m0) / (f1 - f0);
        m0 = m1;
        f0 = f1;
        m1 = m2;
        f1 = eval(m1)?.0;
        if f1.abs() < 1e-14 || (m1 - m0).abs() < 1e-15 * (1.0 + m1.abs()) {
            ok = f1.abs() < 1e-12;
            break;
        }
    }
    if !ok {
        return Err(Error::NoConvergence { what: "closing multiplier mu", residual: f1.abs() });
    }
    let (res, lat, p, rho) = eval(m1)?;
    if quartic_real_roots(&p).class != OrbitClass::Wavelike {
        return Err(Error::OutOfRange(format!("member (lambda~ = {lambda_tilde}, kappa0 = {kappa0}) is not wavelike")));
    }
    let kf = KappaClosedForm::with_lattice(lat.clone(), &p, crate::elastica::solve_x0(&lat, &p)?)?;
    let w1 = lat.omega1;
    let (ik, ik2) = {
        let f = |x: f64| -> Result<(f64, f64)> {
            let k = kf.kappa(x)?;
            Ok((k, k * k))
        };
        periodic_trapezoid(f, 2.0 * w1, 128)?
    };
    let length = 2.0 * w1 * n as f64;
    let tk = ik * n as f64;
    let area = reduce_area(2.0 * PI - tk, 1.0);
    let willmore = PI * (ik2 * n as f64 + length);
    Ok(FamilyPoint {
        n,
        lambda_tilde,
        kappa0,
        mu: m1,
        lambda,
        nu: p.nu,
        g2: lat.g2,
        g3: lat.g3,
        disc: lat.disc,
        rho,
        x0: kf.x0,
        area,
        length,
        willmore,
        monodromy_residual: res.abs(),
    })
}

/// ∫ over one period of a smooth periodic pair; the trapezoid rule converges geometrically.
fn periodic_trapezoid<F: Fn(f64) -> Result<(f64, f64)>>(f: F, period: f64, n: usize) -> Result<(f64, f64)> {
    let h = period / n as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..n {
        let (u, v) = f(i as f64 * h)?;
        a += u;
        b += v;
    }
    Ok((a * h, b * h))
}

/// Grid in (λ̃, κ₀); λ̃ values are walked in order from the homogeneous slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyGrid {
    pub lambda_tilde: Vec<f64>,
    pub kappa0: Vec<f64>,
}

/// Continue the n-lobed family over the grid; rows are κ₀-major.
///
/// Each κ₀ column is a predictor–corrector path in λ̃ starting at the circle.
pub fn continue_family(n: u32, grid: &FamilyGrid) -> Result<Vec<FamilyPoint>> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("families need n >= 2, got {n}")));
    }
    let cols: Vec<Result<Vec<FamilyPoint>>> =
        grid.kappa0.par_iter().map(|&k0| continue_column(n, k0, &grid.lambda_tilde)).collect();
    let mut out = Vec::new();
    for c in cols {
        out.extend(c?);
    }
    Ok(out)
}

/// One κ₀ column, with step halving on corrector failure.
pub fn continue_column(n: u32, kappa0: f64, lambda_tilde: &[f64]) -> Result<Vec<FamilyPoint>> {
    let mut out = Vec::with_capacity(lambda_tilde.len());
    let mut hist: Vec<(f64, f64)> = vec![(0.0, mu_homogeneous(n, kappa0))];
    for &lt in lambda_tilde {
        if lt == 0.0 {
            out.push(homogeneous_member(n, kappa0));
            continue;
        }
        let mut halvings: usize = 0;
        loop {
            let (l_prev, _) = *hist.last().unwrap();
            let step = (lt - l_prev) / f64::powi(2.0, halvings as i32);
            let l_try = l_prev + step;
            let guess = extrapolate(&hist, l_try);
            match solve_member(n, l_try, kappa0, guess) {
                Ok(pt) => {
                    hist.push((l_try, pt.mu));
                    if l_try == lt {
                        out.push(pt);
                        break;
                    }
                    halvings = halvings.saturating_sub(1);
                }
                Err(_) if halvings < 20 => halvings += 1,
                Err(_) => return Err(Error::Continuation { halvings, at: l_try }),
            }
        }
    }
    Ok(out)
}

fn extrapolate(hist: &[(f64, f64)], l: f64) -> f64 {
    match hist.len() {
        0 => unreachable!(),
        1 => hist[0].1,
        _ => {
            let (l1, m1) = hist[hist.len() - 1];
            let (l0, m0) = hist[hist.len() - 2];
            if l1 == l0 {
                m1
            } else {
                m1 + (m1 - m0) * (l - l1) / (l1 - l0)
            }
        }
    }
}

/// Solve κ₀ on a path of constant enclosed area A through the circle of curvature `kappa_ref`.
pub fn member_at_area(n: u32, lambda_tilde: f64, kappa_ref: f64, mu_guess: f64) -> Result<FamilyPoint> {
    let a_target = homogeneous_member(n, kappa_ref).area;
    let mut k0 = kappa_ref;
    let mut mu = mu_guess;
    let mut pt = solve_member(n, lambda_tilde, k0, mu)?;
    let h = 1e-5;
    for _ in 0..30 {
        let f = pt.area - a_target;
        if f.abs() < 1e-13 {
            return Ok(pt);
        }
        let q = solve_member(n, lambda_tilde, k0 + h, pt.mu)?;
        let d = (q.area - pt.area) / h;
        k0 -= f / d;
        mu = pt.mu;
        pt = solve_member(n, lambda_tilde, k0, mu)?;
    }
    let res = (pt.area - a_target).abs();
    if res < 1e-10 {
        Ok(pt)
    } else {
        Err(Error::NoConvergence { what: "constant-area kappa0", residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_is_gcd_normalised() {
        let t = ClosureTarget::new(2, 4).unwrap();
        assert_eq!((t.m, t.n), (1, 2));
        assert!((t.value() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn both_rho_infinity_forms_agree() {
        for a in [0.2, 1.0 / 3.0, 0.75] {
            let r1 = rho_infinity(a).unwrap();
            let r2 = rho_infinity_arcsin(a).unwrap();
            assert!((r1 - r2).norm() < 1e-13, "{r1} {r2}");
        }
    }

    #[test]
    fn area_reduction_window() {
        assert!((reduce_area(2.0 * PI, 1.0) - 2.0 * PI).abs() < 1e-15);
        assert!((reduce_area(-2.0 * PI, 1.0) - 2.0 * PI).abs() < 1e-12);
        assert!((reduce_area(5.0 * PI, 1.0) - PI).abs() < 1e-12);
    }
}
