//! (1,2)-equivariant constrained Willmore tori.
//!
//! The base of the Seifert fibration (z, w) ↦ (e^{it}z, e^{2it}w) is the disc with
//! coordinates R = |z|, φ = arg w − 2 arg z and the metric
//! g₁₂ = (dR²/(1−R²) + R²(1−R²)dφ²/(4−3R²)) / (4−3R²), in which every fiber has length 2π.
//! A g₁₂-arclength profile γ(x) = (R, φ) with horizontal lift u(x) gives the conformal torus
//! f(x, y) = (e^{iy}z(x), e^{2iy}w(x)) with 4q = κ₁₂ + iΩ, Ω = 4/√(4−3R²).
//!
//! Profiles are generated by the curvature law κ₁₂ = AΩ + B, which is what rotating a Hopf
//! solution with 4q = κ + i√G by e^{2iθ} produces: A = cot 2θ, B = −√G/sin 2θ.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hopf::{normalize_class, EquivariantImmersion, HomogeneousTorus};
use crate::ode::{integrate, integrate_at, locate_event, Control, OdeOptions};
use crate::spectral::{periodic_antiderivative, periodic_derivative};

/// Ω = 4/√(4 − 3R²).
pub fn omega_of_r(r: f64) -> f64 {
    4.0 / (4.0 - 3.0 * r * r).sqrt()
}

/// Inverse of [`omega_of_r`] on (0, 1): R² = 4/3 − 16/(3Ω²).
pub fn r_of_omega(omega: f64) -> Result<f64> {
    let r2 = 4.0 / 3.0 - 16.0 / (3.0 * omega * omega);
    if !(r2 > 0.0 && r2 < 1.0) {
        return Err(Error::OutOfRange(format!("Omega = {omega} gives R^2 = {r2} outside (0, 1)")));
    }
    Ok(r2.sqrt())
}

fn d_omega(r: f64) -> f64 {
    12.0 * r / (4.0 - 3.0 * r * r).powf(1.5)
}

/// g₁₂ = E dR² + F dφ².
pub fn metric_e(r: f64) -> f64 {
    1.0 / ((1.0 - r * r) * (4.0 - 3.0 * r * r))
}

pub fn metric_f(r: f64) -> f64 {
    let c = 4.0 - 3.0 * r * r;
    r * r * (1.0 - r * r) / (c * c)
}

/// Geodesic curvature in g₁₂ of the circle R = const traversed with φ increasing.
pub fn circle_curvature(r: f64) -> f64 {
    let dlnf = 2.0 / r - 2.0 * r / (1.0 - r * r) + 12.0 * r / (4.0 - 3.0 * r * r);
    0.5 * dlnf / metric_e(r).sqrt()
}

fn d_circle_curvature(r: f64) -> f64 {
    let (r2, c) = (r * r, 4.0 - 3.0 * r * r);
    let dlnf = 2.0 / r - 2.0 * r / (1.0 - r2) + 12.0 * r / c;
    let ddlnf = -2.0 / r2 - 2.0 * (1.0 + r2) / (1.0 - r2).powi(2) + 12.0 * (4.0 + 3.0 * r2) / (c * c);
    let p = (1.0 - r2) * c;
    let dp = -14.0 * r + 12.0 * r * r2;
    0.5 * (ddlnf * p.sqrt() + dlnf * dp / (2.0 * p.sqrt()))
}

/// The g₁₂ arclength identity R′²/(1−R²) + R²(1−R²)φ′²/(4−3R²) − (4−3R²), which vanishes at unit speed.
pub fn unit_speed_defect(r: f64, dr: f64, dphi: f64) -> f64 {
    let c = 4.0 - 3.0 * r * r;
    dr * dr / (1.0 - r * r) + r * r * (1.0 - r * r) * dphi * dphi / c - c
}

/// Radius of the homogeneous (1,2) torus with rectangular class b (the R = s circle, b = s/r).
pub fn homogeneous_radius(b: f64) -> Result<f64> {
    Ok(HomogeneousTorus::from_b(b)?.s)
}

/// Sampled g₁₂-arclength profile over one closing period.
#[derive(Debug, Clone, Serialize)]
pub struct SeifertProfile {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub kappa12: Vec<f64>,
    /// Phase of z along the horizontal lift; arg w = φ + 2α.
    pub alpha: Vec<f64>,
    pub length: f64,
    /// φ(L) − φ(0).
    pub phi_total: f64,
    /// α(L) − α(0): the fiber shift between the ends of the lift.
    pub holonomy: f64,
}

impl SeifertProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Largest unit-speed defect, with R′ and φ′ taken spectrally.
    pub fn unit_speed_residual(&self) -> f64 {
        let dr = periodic_derivative(&self.r, self.length);
        let dphi = self.dphi();
        (0..self.len()).map(|i| unit_speed_defect(self.r[i], dr[i], dphi[i]).abs()).fold(0.0, f64::max)
    }

    /// Largest |Ω − 4/√(4 − 3R²)|.
    pub fn omega_residual(&self) -> f64 {
        self.r.iter().zip(&self.omega).map(|(&r, &o)| (o - omega_of_r(r)).abs()).fold(0.0, f64::max)
    }

    fn dphi(&self) -> Vec<f64> {
        let per: Vec<f64> = (0..self.len()).map(|i| self.phi[i] - self.phi_total * self.x[i] / self.length).collect();
        let mut d = periodic_derivative(&per, self.length);
        d.iter_mut().for_each(|v| *v += self.phi_total / self.length);
        d
    }
}

/// Build the profile from periodic Ω samples on a uniform grid over `period`.
///
/// R comes from inverting Ω, φ′ from the unit-speed condition with sign `orientation`.
pub fn profile_12_from_omega(omega: &[f64], period: f64, orientation: f64) -> Result<SeifertProfile> {
    let n = omega.len();
    if n < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: n });
    }
    let r = omega.iter().map(|&o| r_of_omega(o)).collect::<Result<Vec<_>>>()?;
    let dr = periodic_derivative(&r, period);
    let x: Vec<f64> = (0..n).map(|i| period * i as f64 / n as f64).collect();
    let sign = if orientation < 0.0 { -1.0 } else { 1.0 };
    let mut dphi = Vec::with_capacity(n);
    for i in 0..n {
        let (ri, c) = (r[i], 4.0 - 3.0 * r[i] * r[i]);
        let one = 1.0 - ri * ri;
        let rad = c * (c * one - dr[i] * dr[i]);
        // round-off at turning points of the homogeneous member
        if rad < -1e-10 * c * c {
            return Err(Error::NegativeRadicand { x: x[i], value: rad });
        }
        dphi.push(sign * rad.max(0.0).sqrt() / (ri * one));
    }
    let (m, p) = periodic_antiderivative(&dphi, period);
    let phi: Vec<f64> = (0..n).map(|i| m * x[i] + p[i]).collect();
    let dalpha: Vec<f64> = (0..n).map(|i| lift_rate(r[i], dphi[i])).collect();
    let (ma, pa) = periodic_antiderivative(&dalpha, period);
    let alpha: Vec<f64> = (0..n).map(|i| ma * x[i] + pa[i]).collect();
    let psi: Vec<f64> =
        (0..n).map(|i| (metric_f(r[i]).sqrt() * dphi[i]).atan2(metric_e(r[i]).sqrt() * dr[i])).collect();
    let psi = unwrap(&psi);
    let turn = psi[n - 1] - psi[0] + (psi[1] - psi[0]);
    let per: Vec<f64> = (0..n).map(|i| psi[i] - turn * x[i] / period).collect();
    let dpsi = periodic_derivative(&per, period);
    let kappa12 = (0..n).map(|i| dpsi[i] + turn / period + circle_curvature(r[i]) * psi[i].sin()).collect();
    Ok(SeifertProfile {
        x,
        r,
        phi,
        omega: omega.to_vec(),
        kappa12,
        alpha,
        length: period,
        phi_total: m * period,
        holonomy: ma * period,
    })
}

fn unwrap(a: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(a.len());
    let mut shift: f64 = 0.0;
    for (i, &v) in a.iter().enumerate() {
        if i > 0 {
            let d = v + shift - out[i - 1];
            shift -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        out.push(v + shift);
    }
    out
}

/// dα/dx for the horizontal lift over a profile with angular rate φ′.
fn lift_rate(r: f64, dphi: f64) -> f64 {
    -2.0 * (1.0 - r * r) * dphi / (4.0 - 3.0 * r * r)
}

/// Curvature law κ₁₂ = slope·Ω + offset, started at the turning point R(0) = r0, ψ(0) = π/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params12 {
    pub slope: f64,
    pub offset: f64,
    pub r0: f64,
}

impl Params12 {
    /// 2θ ∈ (0, π) with cot 2θ = slope.
    pub fn two_theta(&self) -> f64 {
        1f64.atan2(self.slope)
    }

    /// √G = −offset·sin 2θ; positive for profiles coming from Hopf solutions.
    pub fn sqrt_g(&self) -> f64 {
        -self.offset * self.two_theta().sin()
    }

    /// Hopf elastic curvature κ = (Ω − √G cos 2θ)/sin 2θ.
    pub fn hopf_kappa(&self, omega: f64) -> f64 {
        let t = self.two_theta();
        (omega - self.sqrt_g() * t.cos()) / t.sin()
    }
}

/// State: R, φ, ψ, α, ∫(κ₁₂² + Ω²), boundary area ∫R²φ′/(2(4−3R²)).
fn rhs12(p: Params12) -> impl Fn(f64, &[f64; 6]) -> [f64; 6] + Copy {
    move |_, y| {
        let r = y[0];
        let (s, c) = y[2].sin_cos();
        let om = omega_of_r(r);
        let kap = p.slope * om + p.offset;
        let dphi = s / metric_f(r).sqrt();
        [
            c / metric_e(r).sqrt(),
            dphi,
            kap - circle_curvature(r) * s,
            lift_rate(r, dphi),
            kap * kap + om * om,
            r * r * dphi / (2.0 * (4.0 - 3.0 * r * r)),
        ]
    }
}

/// One period of the profile ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shot12 {
    pub period: f64,
    pub phi_total: f64,
    pub holonomy: f64,
    /// ∫(κ₁₂² + Ω²) dx over the period.
    pub energy_density: f64,
    pub area_boundary: f64,
    /// |R(L) − R(0)| + |ψ(L) − π/2 (mod 2π)|.
    pub closure_residual: f64,
    pub r_min: f64,
    pub r_max: f64,
}

fn opts12() -> OdeOptions {
    OdeOptions { rtol: 1e-13, atol: 1e-13, ..OdeOptions::default() }
}

const MAX_SPAN: f64 = 200.0;

/// Integrate to the second zero crossing of cos ψ, the first return to the turning point.
pub fn shoot_12(p: &Params12) -> Result<Shot12> {
    if !(p.r0 > 0.0 && p.r0 < 1.0) {
        return Err(Error::OutOfRange(format!("R(0) = {} outside (0, 1)", p.r0)));
    }
    let f = rhs12(*p);
    let y0 = [p.r0, 0.0, 0.5 * PI, 0.0, 0.0, 0.0];
    let mut sign = 0.0;
    let mut crossings = 0;
    let mut hit: Option<(f64, [f64; 6])> = None;
    let (mut rmin, mut rmax) = (p.r0, p.r0);
    let mut bad = false;
    integrate(f, 0.0, y0, MAX_SPAN, &opts12(), |st| {
        let r = st.y1[0];
        if !(r > 0.0 && r < 1.0) {
            bad = true;
            return Control::Stop;
        }
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        let g = st.y1[2].cos();
        let sg = g.signum();
        if sign == 0.0 {
            if g.abs() > 1e-13 {
                sign = sg;
            }
            return Control::Continue;
        }
        if sg != sign && g != 0.0 {
            sign = sg;
            crossings += 1;
            if crossings == 2 {
                hit = locate_event(st, |_, y| y[2].cos());
                return Control::Stop;
            }
        }
        Control::Continue
    })?;
    if bad {
        return Err(Error::OutOfRange("profile left the base disc".into()));
    }
    let (t, y) = hit.ok_or(Error::NoReturn { span: MAX_SPAN })?;
    let dpsi = y[2] - 0.5 * PI;
    let wrap = dpsi - 2.0 * PI * (dpsi / (2.0 * PI)).round();
    Ok(Shot12 {
        period: t,
        phi_total: y[1],
        holonomy: y[3],
        energy_density: y[4],
        area_boundary: y[5],
        closure_residual: (y[0] - p.r0).abs() + wrap.abs(),
        r_min: rmin,
        r_max: rmax,
    })
}

/// Total angle Φ = φ(L) − φ(0) over one period.
pub fn phi_closing(p: &Params12) -> Result<f64> {
    Ok(shoot_12(p)?.phi_total)
}

/// Sample one period of the profile at n uniform points.
pub fn sample_profile_12(p: &Params12, period: f64, n: usize) -> Result<SeifertProfile> {
    if n < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: n });
    }
    let ts: Vec<f64> = (0..=n).map(|i| period * i as f64 / n as f64).collect();
    let opts = OdeOptions { h_max: period / (4 * n) as f64, ..opts12() };
    let y0 = [p.r0, 0.0, 0.5 * PI, 0.0, 0.0, 0.0];
    let ys = integrate_at(rhs12(*p), 0.0, y0, &ts, &opts)?;
    let last = ys[n];
    let ys = &ys[..n];
    let r: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let omega: Vec<f64> = r.iter().map(|&v| omega_of_r(v)).collect();
    Ok(SeifertProfile {
        x: ts[..n].to_vec(),
        kappa12: omega.iter().map(|&o| p.slope * o + p.offset).collect(),
        phi: ys.iter().map(|y| y[1]).collect(),
        alpha: ys.iter().map(|y| y[3]).collect(),
        r,
        omega,
        length: period,
        phi_total: last[1],
        holonomy: last[3],
    })
}

/// The R ≡ s circle closed after one turn: φ′ = 1/√F(s), L = 2π√F(s).
pub fn homogeneous_profile_12(b: f64, n: usize) -> Result<SeifertProfile> {
    if n < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: n });
    }
    let s = homogeneous_radius(b)?;
    let dphi = 1.0 / metric_f(s).sqrt();
    let length = 2.0 * PI / dphi;
    let da = lift_rate(s, dphi);
    let x: Vec<f64> = (0..n).map(|i| length * i as f64 / n as f64).collect();
    Ok(SeifertProfile {
        phi: x.iter().map(|&t| dphi * t).collect(),
        alpha: x.iter().map(|&t| da * t).collect(),
        r: vec![s; n],
        omega: vec![omega_of_r(s); n],
        kappa12: vec![circle_curvature(s); n],
        x,
        length,
        phi_total: 2.0 * PI,
        holonomy: da * length,
    })
}

/// The (1,2) torus (e^{iy}z(x), e^{2iy}w(x)) over the horizontal lift of p.
///
/// Lattice ⟨2πi, L − iΔα⟩ with Δα the lift holonomy.
pub fn lift_12(p: &SeifertProfile, fiber_samples: usize) -> Result<EquivariantImmersion> {
    if fiber_samples < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: fiber_samples });
    }
    let gap = ((p.phi_total - 2.0 * PI) / (2.0 * PI)).fract().abs();
    if gap > 1e-6 && (1.0 - gap) > 1e-6 {
        return Err(Error::OpenCurve { gap: (p.phi_total - 2.0 * PI).abs() });
    }
    let (nx, ny) = (p.len(), fiber_samples);
    let shear = p.holonomy / p.length;
    let dy = 2.0 * PI / ny as f64;
    let mut points = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let r = p.r[i];
        let z = C64::from_polar(r, p.alpha[i]);
        let w = C64::from_polar((1.0 - r * r).sqrt(), p.phi[i] + 2.0 * p.alpha[i]);
        for j in 0..ny {
            let t = j as f64 * dy - shear * p.x[i];
            let (a, b) = (C64::from_polar(1.0, t) * z, C64::from_polar(1.0, 2.0 * t) * w);
            points.push([a.re, a.im, b.re, b.im]);
        }
    }
    Ok(EquivariantImmersion {
        m: 1.0,
        k: 2.0,
        nx,
        ny,
        points,
        dx: p.length / nx as f64,
        dy,
        shear,
        generators: [C64::new(0.0, 2.0 * PI), C64::new(p.length, -p.holonomy)],
    })
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Conformal data of the (1,2) torus over a closed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Class12 {
    pub length: f64,
    /// ∫_C Ω vol₁₂ over the ruled chain t ↦ (tR(x), φ(x)) down to R = 0.
    pub area_chain: f64,
    /// The same area from the boundary form R²dφ/(2(4−3R²)).
    pub area_boundary: f64,
    pub holonomy: f64,
    pub generators: [C64; 2],
    pub a: f64,
    pub b: f64,
}

pub fn conformal_class_12(p: &SeifertProfile) -> Result<Class12> {
    let gap = (p.phi_total - 2.0 * PI * (p.phi_total / (2.0 * PI)).round()).abs();
    if gap > 1e-6 {
        return Err(Error::OpenCurve { gap });
    }
    let dphi = p.dphi();
    let n = p.len();
    let dx = p.length / n as f64;
    let gl = gauss_legendre01(24);
    let mut chain = 0.0;
    let mut bound = 0.0;
    for i in 0..n {
        let (r, d) = (p.r[i], dphi[i]);
        // Ω vol₁₂ = 4ρ/(4−3ρ²)² dρ∧dφ; pulled back along (t, x) the Jacobian is R·φ′.
        let inner: f64 = gl
            .iter()
            .map(|&(t, w)| {
                let rho = t * r;
                let c = 4.0 - 3.0 * rho * rho;
                w * 4.0 * rho / (c * c)
            })
            .sum();
        chain += inner * r * d;
        bound += r * r * d / (2.0 * (4.0 - 3.0 * r * r));
    }
    let generators = [C64::new(0.0, 2.0 * PI), C64::new(p.length, -p.holonomy)];
    let (a, b) = normalize_class(generators[0], generators[1]);
    Ok(Class12 {
        length: p.length,
        area_chain: chain * dx,
        area_boundary: bound * dx,
        holonomy: p.holonomy,
        generators,
        a,
        b,
    })
}

/// W = (π/2)∫(κ₁₂² + Ω²) dx, i.e. 4∫|q|² over the fundamental domain.
pub fn willmore_12(p: &SeifertProfile) -> f64 {
    let s: f64 = p.kappa12.iter().zip(&p.omega).map(|(k, o)| k * k + o * o).sum();
    0.5 * PI * s * p.length / p.len() as f64
}

/// Small-amplitude data of the curvature law about the circle R = s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearData12 {
    pub slope: f64,
    pub offset: f64,
    /// Oscillation frequency of R in x.
    pub frequency: f64,
    /// Φ in the zero-amplitude limit, 2π/(√F(s)·frequency).
    pub phi: f64,
    pub theta: f64,
    pub sqrt_g: f64,
    /// Multipliers of the Hopf state; the elastic frequency ω² = 3κ₀²/2 + μₑ + G/2 fixes μₑ.
    pub mu: f64,
    pub lambda: f64,
    /// Multipliers after rotating by θ.
    pub mu_theta: f64,
    pub lambda_theta: f64,
}

/// Linearisation at the circle R = s: ω² = (AΩ′(s) − κ_c′(s))/√E(s).
pub fn linear_data_12(s: f64, slope: f64) -> Result<LinearData12> {
    let w2 = (slope * d_omega(s) - d_circle_curvature(s)) / metric_e(s).sqrt();
    if !(w2 > 0.0) {
        return Err(Error::NegativeRadicand { x: s, value: w2 });
    }
    let frequency = w2.sqrt();
    let offset = circle_curvature(s) - slope * omega_of_r(s);
    let p = Params12 { slope, offset, r0: s };
    let (sg, theta) = (p.sqrt_g(), 0.5 * p.two_theta());
    let k0 = p.hopf_kappa(omega_of_r(s));
    let m = w2 - 1.5 * k0 * k0;
    let lambda_e = -0.5 * k0 * k0 * k0 - m * k0;
    let mu = 0.5 * (m - 0.5 * sg * sg);
    let lambda = lambda_e / (2.0 * sg);
    let wt = C64::from_polar(1.0, -4.0 * theta) * C64::new(-mu, lambda);
    Ok(LinearData12 {
        slope,
        offset,
        frequency,
        phi: 2.0 * PI / (metric_f(s).sqrt() * frequency),
        theta,
        sqrt_g: sg,
        mu,
        lambda,
        mu_theta: -wt.re,
        lambda_theta: wt.im,
    })
}

/// ∂Φ/∂μ_θ along the zero-amplitude curvature laws at the circle R = s, by central differences in the slope.
pub fn dphi_dmu_theta(s: f64, slope: f64) -> Result<f64> {
    let h = 1e-5 * (1.0 + slope.abs());
    let (p, m) = (linear_data_12(s, slope + h)?, linear_data_12(s, slope - h)?);
    Ok((p.phi - m.phi) / (p.mu_theta - m.mu_theta))
}

/// Slope making the linearised profile close after one oscillation: ω = s/r + 4r/s.
pub fn closing_slope(s: f64) -> f64 {
    let w = 1.0 / metric_f(s).sqrt();
    (w * w * metric_e(s).sqrt() + d_circle_curvature(s)) / d_omega(s)
}

/// s/r + 4r/s at the circle R = s, the kernel frequency of the normal variation.
pub fn kernel_frequency(s: f64) -> f64 {
    1.0 / metric_f(s).sqrt()
}

/// A solved member of the (1,2) family at fixed rectangular part b.
#[derive(Debug, Clone, Serialize)]
pub struct Member12 {
    pub b_target: f64,
    /// R(0) − s: turning-point offset from the homogeneous circle.
    pub eps: f64,
    pub params: Params12,
    pub shot: Shot12,
    pub class: Class12,
    pub willmore: f64,
    /// θ with A = cot 2θ.
    pub theta: f64,
    pub sqrt_g: f64,
    pub newton_iterations: usize,
}

impl Member12 {
    pub fn profile(&self, n: usize) -> Result<SeifertProfile> {
        if self.eps == 0.0 {
            return homogeneous_profile_12(self.b_target, n);
        }
        sample_profile_12(&self.params, self.shot.period, n)
    }
}

fn class_of_shot(sh: &Shot12) -> (f64, f64) {
    normalize_class(C64::new(0.0, 2.0 * PI), C64::new(sh.period, -sh.holonomy))
}

/// Homogeneous member: the R = s circle with the closing slope.
pub fn homogeneous_member_12(b: f64) -> Result<Member12> {
    let s = homogeneous_radius(b)?;
    let slope = closing_slope(s);
    let lin = linear_data_12(s, slope)?;
    let prof = homogeneous_profile_12(b, 64)?;
    let class = conformal_class_12(&prof)?;
    let params = Params12 { slope, offset: lin.offset, r0: s };
    let om = omega_of_r(s);
    let kc = circle_curvature(s);
    Ok(Member12 {
        b_target: b,
        eps: 0.0,
        params,
        shot: Shot12 {
            period: prof.length,
            phi_total: 2.0 * PI,
            holonomy: prof.holonomy,
            energy_density: (kc * kc + om * om) * prof.length,
            area_boundary: class.area_boundary,
            closure_residual: 0.0,
            r_min: s,
            r_max: s,
        },
        willmore: willmore_12(&prof),
        theta: 0.5 * params.two_theta(),
        sqrt_g: params.sqrt_g(),
        class,
        newton_iterations: 0,
    })
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 40;

/// Solve (slope, offset) so that Φ = 2π and the class has Im τ = b, with R(0) = s + eps.
pub fn solve_member_12(b: f64, eps: f64, guess: Option<Params12>) -> Result<Member12> {
    if eps == 0.0 {
        return homogeneous_member_12(b);
    }
    let s = homogeneous_radius(b)?;
    let r0 = s + eps;
    let mut p = match guess {
        Some(g) => Params12 { r0, ..g },
        None => {
            let slope = closing_slope(s);
            Params12 { slope, offset: circle_curvature(s) - slope * omega_of_r(s), r0 }
        }
    };
    let resid = |p: &Params12| -> Result<([f64; 2], Shot12)> {
        let sh = shoot_12(p)?;
        let (_, bb) = class_of_shot(&sh);
        Ok(([sh.phi_total - 2.0 * PI, bb - b], sh))
    };
    let (mut f, mut sh) = resid(&p)?;
    let mut it = 0;
    while f[0].abs().max(f[1].abs()) > NEWTON_TOL {
        if it == NEWTON_MAX {
            return Err(Error::NoConvergence { what: "(1,2) member Newton", residual: f[0].abs().max(f[1].abs()) });
        }
        it += 1;
        let h = 1e-7 * (1.0 + p.slope.abs());
        let (fa, _) = resid(&Params12 { slope: p.slope + h, ..p })?;
        let (fb, _) = resid(&Params12 { offset: p.offset + h, ..p })?;
        let j = [[(fa[0] - f[0]) / h, (fb[0] - f[0]) / h], [(fa[1] - f[1]) / h, (fb[1] - f[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::DerivativeDegenerate { value: det });
        }
        let da = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let db = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        let mut lam = 1.0;
        loop {
            let cand = Params12 { slope: p.slope - lam * da, offset: p.offset - lam * db, r0 };
            match resid(&cand) {
                Ok((fc, shc)) if fc[0].abs().max(fc[1].abs()) < f[0].abs().max(f[1].abs()) || lam < 1e-3 => {
                    p = cand;
                    f = fc;
                    sh = shc;
                    break;
                }
                _ if lam < 1e-3 => {
                    return Err(Error::Continuation { halvings: 10, at: eps });
                }
                _ => lam *= 0.5,
            }
        }
    }
    let prof = sample_profile_12(&p, sh.period, 256)?;
    let class = conformal_class_12(&prof)?;
    Ok(Member12 {
        b_target: b,
        eps,
        params: p,
        shot: sh,
        class,
        willmore: 0.5 * PI * sh.energy_density,
        theta: 0.5 * p.two_theta(),
        sqrt_g: p.sqrt_g(),
        newton_iterations: it,
    })
}

/// Members at the given offsets, continued from the homogeneous circle in increasing |eps|.
pub fn family_12(b: f64, eps: &[f64]) -> Result<Vec<Member12>> {
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&i, &j| eps[i].abs().total_cmp(&eps[j].abs()));
    let mut out: Vec<Option<Member12>> = vec![None; eps.len()];
    let mut guess = None;
    for i in order {
        let m = solve_member_12(b, eps[i], guess)?;
        if m.eps != 0.0 {
            guess = Some(m.params);
        }
        out[i] = Some(m);
    }
    Ok(out.into_iter().map(|m| m.expect("every member solved")).collect())
}

/// Conformal Hopf differential data of the associated family, with EL multipliers.
#[derive(Debug, Clone, Serialize)]
pub struct AssociatedFamilyState {
    pub period: f64,
    pub q: Vec<C64>,
    pub xi: Vec<C64>,
    pub c: f64,
    pub mu_theta: f64,
    pub lambda_theta: f64,
    /// Rotation accumulated from the Hopf state.
    pub theta: f64,
}

impl AssociatedFamilyState {
    /// Hopf state 4q = κ + i√G for an elastic curvature κ″ + ½κ³ + (μₑ + G/2)κ + λₑ = 0.
    pub fn from_hopf(kappa: &[f64], period: f64, g: f64, mu_e: f64, lambda_e: f64) -> AssociatedFamilyState {
        let sg = g.sqrt();
        AssociatedFamilyState {
            period,
            q: kappa.iter().map(|&k| C64::new(k, sg) / 4.0).collect(),
            xi: kappa.iter().map(|&k| C64::new(0.0, k * sg / 16.0)).collect(),
            c: -g / 16.0,
            mu_theta: 0.5 * mu_e,
            lambda_theta: lambda_e / (2.0 * sg),
            theta: 0.0,
        }
    }

    /// max |q″ + 8(|q|² + C)q − 8ξq − 2Re((−μ+iλ)q)| over the samples.
    pub fn el_residual(&self) -> f64 {
        let re: Vec<f64> = self.q.iter().map(|q| q.re).collect();
        let im: Vec<f64> = self.q.iter().map(|q| q.im).collect();
        let d2r = periodic_derivative(&periodic_derivative(&re, self.period), self.period);
        let d2i = periodic_derivative(&periodic_derivative(&im, self.period), self.period);
        let w = C64::new(-self.mu_theta, self.lambda_theta);
        let mut worst: f64 = 0.0;
        for (i, &q) in self.q.iter().enumerate() {
            let r =
                C64::new(d2r[i], d2i[i]) + 8.0 * (q.norm_sqr() + self.c) * q - 8.0 * self.xi[i] * q - 2.0 * (w * q).re;
            worst = worst.max(r.norm());
        }
        worst
    }
}

/// Associated-family rotation q ↦ e^{2iθ}q with the matching C, ξ and multipliers.
pub fn rotate_associated(s: &AssociatedFamilyState, theta: f64) -> AssociatedFamilyState {
    let w = C64::new(-s.mu_theta, s.lambda_theta);
    let z = (C64::from_polar(1.0, 4.0 * theta) - 1.0) * w.conj();
    let wt = C64::from_polar(1.0, -4.0 * theta) * w;
    let rot = C64::from_polar(1.0, 2.0 * theta);
    AssociatedFamilyState {
        period: s.period,
        q: s.q.iter().map(|q| q * rot).collect(),
        xi: s.xi.iter().map(|x| x + C64::new(0.0, z.im / 8.0)).collect(),
        c: s.c + z.re / 8.0,
        mu_theta: -wt.re,
        lambda_theta: wt.im,
        theta: s.theta + theta,
    }
}

/// Least-squares elastic fit κ″ + ½κ³ + Mκ + Λ = 0; returns (M, Λ, max residual).
pub fn fit_elastic(kappa: &[f64], period: f64) -> (f64, f64, f64) {
    let d2 = periodic_derivative(&periodic_derivative(kappa, period), period);
    let rhs: Vec<f64> = kappa.iter().zip(&d2).map(|(k, d)| -(d + 0.5 * k * k * k)).collect();
    let n = kappa.len() as f64;
    let (sk, skk) = (kappa.iter().sum::<f64>(), kappa.iter().map(|k| k * k).sum::<f64>());
    let (sr, skr) = (rhs.iter().sum::<f64>(), kappa.iter().zip(&rhs).map(|(k, r)| k * r).sum::<f64>());
    let det = skk * n - sk * sk;
    let (m, l) = if det.abs() > 1e-300 * (1.0 + skk * n) {
        ((skr * n - sk * sr) / det, (skk * sr - sk * skr) / det)
    } else {
        // constant κ: the fit is a single condition, take M from the linearised frequency elsewhere
        (0.0, sr / n)
    };
    let res = kappa.iter().zip(&rhs).map(|(k, r)| (m * k + l - r).abs()).fold(0.0, f64::max);
    (m, l, res)
}

/// Hopf and (1,2) associated-family states of a solved non-homogeneous member.
pub fn member_states(m: &Member12, n: usize) -> Result<(AssociatedFamilyState, AssociatedFamilyState)> {
    let prof = m.profile(n)?;
    let p = m.params;
    let sg = p.sqrt_g();
    if !(sg > 0.0) {
        return Err(Error::ConstraintViolation { what: "sqrt(G) > 0", residual: sg });
    }
    let g = sg * sg;
    let kappa: Vec<f64> = prof.omega.iter().map(|&o| p.hopf_kappa(o)).collect();
    let (mm, l, _) = fit_elastic(&kappa, prof.length);
    let hopf = AssociatedFamilyState::from_hopf(&kappa, prof.length, g, mm - 0.5 * g, l);
    let eq = rotate_associated(&hopf, m.theta);
    Ok((hopf, eq))
}

/// Root of the equivariance ratio |cos θ s_θ/(sin θ r_θ)| = 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theta12 {
    pub theta: f64,
    /// θ − arctan(b) for the reference homogeneous torus.
    pub theta_hopf: f64,
    pub ratio_residual: f64,
    /// d(ratio)/dθ at the root, central difference.
    pub derivative: f64,
}

/// s/r for the homogeneous torus with μ̃ = (s² − r²)/(rs).
fn radius_ratio(mu: f64) -> f64 {
    0.5 * (mu + (mu * mu + 4.0).sqrt())
}

fn equivariance_ratio(mu: f64, lambda: f64, theta: f64) -> f64 {
    let mt = mu * (2.0 * theta).cos() - lambda * (2.0 * theta).sin();
    (theta.cos() * radius_ratio(mt) / theta.sin()).abs()
}

/// θ ∈ (0, π/2) where the rotated homogeneous data has equivariance type 1/2.
pub fn solve_theta12(s: &AssociatedFamilyState, homog: &HomogeneousTorus) -> Result<Theta12> {
    let (mu, lam) = (s.mu_theta, s.lambda_theta);
    let f = |t: f64| equivariance_ratio(mu, lam, t) - 0.5;
    let n = 2000;
    let mut root = None;
    let mut prev = (1e-9, f(1e-9));
    for i in 1..=n {
        let t = 0.5 * PI * i as f64 / n as f64 - if i == n { 1e-9 } else { 0.0 };
        let v = f(t);
        if v == 0.0 || v.signum() != prev.1.signum() {
            root = Some((prev.0, t));
            break;
        }
        prev = (t, v);
    }
    let (mut a, mut b) = root.ok_or_else(|| Error::NoRoot("equivariance ratio never crosses 1/2".into()))?;
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let theta = 0.5 * (a + b);
    let h = 1e-6;
    Ok(Theta12 {
        theta,
        theta_hopf: theta - homog.b().atan(),
        ratio_residual: f(theta).abs(),
        derivative: (f(theta + h) - f(theta - h)) / (2.0 * h),
    })
}

/// α or β estimates along a one-parameter path of (a, b, W) samples.
#[derive(Debug, Clone, Serialize)]
pub struct LagrangeEstimates {
    /// Which coordinate varies: "a" (α = ∂W/∂a) or "b" (β = ∂W/∂b).
    pub along: &'static str,
    /// Midpoints of the varying coordinate.
    pub at: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Differences of successive derivative estimates divided by the spacing.
    pub second: Vec<f64>,
    /// Derivative at a = 0 (or at the smallest sampled b) of the polynomial through the nearest five samples.
    pub limit: f64,
}

/// Finite-difference multipliers along a path, extrapolated to the near end.
pub fn lagrange_estimates(family: &[((f64, f64), f64)]) -> Result<LagrangeEstimates> {
    if family.len() < 4 {
        return Err(Error::InsufficientSamples { need: 4, got: family.len() });
    }
    let spread = |k: usize| {
        let v: Vec<f64> = family.iter().map(|f| if k == 0 { f.0 .0 } else { f.0 .1 }).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let along_a = spread(0) >= spread(1);
    let mut pts: Vec<(f64, f64)> = family.iter().map(|&((a, b), w)| (if along_a { a } else { b }, w)).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let at: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect();
    let derivative: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let second: Vec<f64> = (1..at.len()).map(|i| (derivative[i] - derivative[i - 1]) / (at[i] - at[i - 1])).collect();
    // interpolate W by a polynomial through the nearest samples and differentiate at the end point
    let x0 = if along_a { 0.0 } else { pts[0].0 };
    let k = pts.len().min(5);
    let span = pts[k - 1].0 - x0;
    let v = DMatrix::from_fn(k, k, |i, j| ((pts[i].0 - x0) / span).powi(j as i32));
    let w = DVector::from_fn(k, |i, _| pts[i].1);
    let coef = v.lu().solve(&w).ok_or(Error::DerivativeDegenerate { value: 0.0 })?;
    let limit = coef[1] / span;
    Ok(LagrangeEstimates { along: if along_a { "a" } else { "b" }, at, derivative, second, limit })
}

/// Normal component of (f_{(a,b)} − f^b)/√a against the homogeneous torus of the same b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalVariation {
    pub a: f64,
    /// |⟨ψ, fit⟩|/(‖ψ‖‖fit‖) for the best d₁ sin(ωx̃ + d₂) fit of the fiber-averaged field.
    pub correlation: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// ω = s/r + 4r/s.
    pub frequency: f64,
    /// Energy fraction of the field that varies along the fibers.
    pub y_content: f64,
}

/// Sample both tori at matching fractions of their profile periods and fiber parameters.
pub fn normal_variation(m: &Member12, nx: usize, ny: usize) -> Result<NormalVariation> {
    if m.class.a <= 0.0 {
        return Err(Error::OutOfRange("normal variation needs a > 0".into()));
    }
    let fa = lift_12(&m.profile(nx)?, ny)?;
    let hp = homogeneous_profile_12(m.b_target, nx)?;
    let fb = lift_12(&hp, ny)?;
    let s = hp.r[0];
    let r = (1.0 - s * s).sqrt();
    let scale = 1.0 / m.class.a.sqrt();
    let mut field = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let (p, q) = (fa.at(i, j), fb.at(i, j));
            let n = [r * q[0] / s, r * q[1] / s, -s * q[2] / r, -s * q[3] / r];
            field[i * ny + j] = scale * (0..4).map(|c| (p[c] - q[c]) * n[c]).sum::<f64>();
        }
    }
    let mean: Vec<f64> = (0..nx).map(|i| field[i * ny..(i + 1) * ny].iter().sum::<f64>() / ny as f64).collect();
    let total: f64 = field.iter().map(|v| v * v).sum();
    let along: f64 = (0..nx).map(|i| (0..ny).map(|j| (field[i * ny + j] - mean[i]).powi(2)).sum::<f64>()).sum();
    let (mut cs, mut cc) = (0.0, 0.0);
    for (i, v) in mean.iter().enumerate() {
        let t = 2.0 * PI * i as f64 / nx as f64;
        cs += v * t.sin();
        cc += v * t.cos();
    }
    let (d1, d2) = (2.0 * cs / nx as f64, 2.0 * cc / nx as f64);
    let fit_norm2 = 0.5 * (d1 * d1 + d2 * d2) * nx as f64;
    let norm2: f64 = mean.iter().map(|v| v * v).sum();
    Ok(NormalVariation {
        a: m.class.a,
        correlation: if norm2 > 0.0 { (fit_norm2 / norm2).sqrt() } else { 0.0 },
        amplitude: (d1 * d1 + d2 * d2).sqrt(),
        phase: d2.atan2(d1),
        frequency: kernel_frequency(s),
        y_content: if total > 0.0 { along / total } else { 0.0 },
    })
}
