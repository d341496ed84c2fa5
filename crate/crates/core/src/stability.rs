//! Mode-wise second variation of W and of the conformal class Π = (Π¹, Π²)
//! at homogeneous tori.
//!
//! At b = 1 every quantity is closed form. For b ≠ 1 the Willmore and Π¹
//! Hessians come from an equivariant finite-difference oracle: a single wave
//! `cos(kX/r + lY/s)` is constant along the one-parameter group
//! `(e^{ilt}, e^{-ikt})`, so the perturbed torus reduces to a periodic curve
//! and W, τ become 1-D quadratures.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::hopf::cross4;
use crate::spectral::{periodic_derivative, periodic_derivative_2d};
use crate::{Error, Result, C64};

/// Mode-scan caps (k ≤ 16, l ≤ 8).
pub const K_MAX: u32 = 16;
pub const L_MAX: u32 = 8;
/// Bisection tolerance on α, relative.
pub const BISECTION_RTOL: f64 = 1e-6;
const FD_STEP: f64 = 2e-3;
const FD_SAMPLES: usize = 256;

/// Φ = a sin(√2kx)cos(√2ly) + b cos(√2kx)sin(√2ly) + c cos(√2kx)cos(√2ly) + d sin(√2kx)sin(√2ly)
/// on the square torus ℂ/(√2πℤ + √2πiℤ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierMode {
    pub k: u32,
    pub l: u32,
    pub coeffs: [f64; 4],
}

impl FourierMode {
    pub fn new(k: u32, l: u32, coeffs: [f64; 4]) -> Result<FourierMode> {
        if k == 0 && l == 0 {
            return Err(Error::OutOfRange("mode (0, 0) is the constant function".into()));
        }
        Ok(FourierMode { k, l, coeffs })
    }

    /// The four basis functions of the wave sin/cos(kX + lY) (or kX − lY when `plus` is false).
    pub fn waves(k: u32, l: u32, plus: bool) -> [FourierMode; 2] {
        let s = if plus { 1.0 } else { -1.0 };
        [FourierMode { k, l, coeffs: [1.0, s, 0.0, 0.0] }, FourierMode { k, l, coeffs: [0.0, 0.0, 1.0, -s] }]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// a = b and c = −d, the case where |D²Π¹| reaches its bound.
    pub fn is_equality_case(&self) -> bool {
        let [a, b, c, d] = self.coeffs;
        let tol = 1e-12 * self.norm_sqr().sqrt();
        self.norm_sqr() > 0.0 && (a - b).abs() <= tol && (c + d).abs() <= tol
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (sx, cx) = (2f64.sqrt() * self.k as f64 * x).sin_cos();
        let (sy, cy) = (2f64.sqrt() * self.l as f64 * y).sin_cos();
        let [a, b, c, d] = self.coeffs;
        a * sx * cy + b * cx * sy + c * cx * cy + d * sx * sy
    }

    /// ∂ₓ^i ∂ᵧ^j Φ.
    pub fn derivative(&self, i: u32, j: u32, x: f64, y: f64) -> f64 {
        let p = 2f64.sqrt() * self.k as f64;
        let q = 2f64.sqrt() * self.l as f64;
        // d^n/dt^n of sin and cos, as a (sin, cos) pair at phase t
        let dn = |n: u32, f: f64, t: f64| -> (f64, f64) {
            let ph = t + n as f64 * PI / 2.0;
            (f.powi(n as i32) * ph.sin(), f.powi(n as i32) * ph.cos())
        };
        let (sx, cx) = dn(i, p, p * x);
        let (sy, cy) = dn(j, q, q * y);
        let [a, b, c, d] = self.coeffs;
        a * sx * cy + b * cx * sy + c * cx * cy + d * sx * sy
    }
}

/// D²W(f¹)(φ, φ)/⟨φ, φ⟩ = 2λ² − 6λ + 4, λ = k² + l².
pub fn d2_willmore_mode(k: i64, l: i64) -> f64 {
    let lam = (k * k + l * l) as f64;
    2.0 * lam * lam - 6.0 * lam + 4.0
}

/// D²Π¹(f¹)(φ, φ)/⟨φ, φ⟩.
pub fn d2_pi1_mode(m: &FourierMode) -> f64 {
    let n = m.norm_sqr();
    if n == 0.0 || m.k == 0 || m.l == 0 {
        return 0.0;
    }
    let (k, l) = (m.k as f64, m.l as f64);
    let [a, b, c, d] = m.coeffs;
    (2.0 * k * l - 4.0 * k * l / (k * k + l * l)) / (PI * PI) * (2.0 * a * b - 2.0 * c * d) / n
}

/// (k²s² − l²r²)/(k²s² + l²r²).
pub fn c_r(b: f64, k: f64, l: f64) -> f64 {
    let r = 1.0 / (1.0 + b * b).sqrt();
    let s = b * r;
    (k * k * s * s - l * l * r * r) / (k * k * s * s + l * l * r * r)
}

/// D²Π²(f^b)(φ, φ)/∫|φ|² for Φ = sin/cos(kx/r ± ly/s).
pub fn d2_pi2_mode(b: f64, k: f64, l: f64) -> f64 {
    let r = 1.0 / (1.0 + b * b).sqrt();
    let s = b * r;
    let (r2, s2) = (r * r, s * s);
    let pi4 = 4.0 * PI * PI;
    // ⟨∂₁₁Φ − ∂₂₂Φ, Φ⟩ = (l²/s² − k²/r²)|Φ|²
    let second = (l * l / s2 - k * k / r2) / (pi4 * r2);
    let diff = (r2 - s2) / (pi4 * r2 * r2 * s2);
    let last = (2.0 * (r2 - s2) + c_r(b, k, l)) / (pi4 * r2 * r2 * s2);
    second + diff - last
}

/// g_{α̃,c}(l) = 2(c²+1)²l⁴ − (6(c²+1) + 8α̃c)l² + 4 + 16α̃c/(c²+1).
pub fn g_poly(alpha_tilde: f64, c: f64, l: f64) -> f64 {
    let c1 = c * c + 1.0;
    let l2 = l * l;
    2.0 * c1 * c1 * l2 * l2 - (6.0 * c1 + 8.0 * alpha_tilde * c) * l2 + 4.0 + 16.0 * alpha_tilde * c / c1
}

/// The two roots in l²: 2/(c²+1) and 1/(c²+1) + 4α̃c/(c²+1)².
pub fn g_poly_roots_l2(alpha_tilde: f64, c: f64) -> [f64; 2] {
    let c1 = c * c + 1.0;
    [2.0 / c1, 1.0 / c1 + 4.0 * alpha_tilde * c / (c1 * c1)]
}

/// Positive roots l of g_{α̃,c}.
pub fn g_poly_roots(alpha_tilde: f64, c: f64) -> Vec<f64> {
    let mut v: Vec<f64> = g_poly_roots_l2(alpha_tilde, c).iter().filter(|&&x| x > 0.0).map(|x| x.sqrt()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Per-mode Hessian coefficients, normalised by ∫|φ|² dA. `l` carries the wave sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeRow {
    pub k: u32,
    pub l: i32,
    pub d2w: f64,
    pub d2pi1: f64,
    pub d2pi2: f64,
    pub penalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub b: f64,
    pub beta_b: f64,
    pub alpha_crit: f64,
    /// Final bisection bracket before the active-mode refinement.
    pub bracket: (f64, f64),
    pub kernel: Vec<FourierMode>,
    /// Kernel waves as (k, signed l) in the torus's own coordinates.
    pub kernel_waves: Vec<(u32, i32)>,
    pub mode_table: Vec<ModeRow>,
    pub mode_cap_warning: bool,
}

fn excluded(k: u32, l: u32) -> bool {
    matches!((k, l), (0, 0) | (1, 1) | (0, 1) | (1, 0))
}

/// Signed waves (k, ±l) in the scan; k = 0 or l = 0 carry a single sign.
fn scan_modes() -> Vec<(u32, i32)> {
    let mut v = vec![];
    for k in 0..=K_MAX {
        for l in 0..=L_MAX {
            if excluded(k, l) {
                continue;
            }
            v.push((k, l as i32));
            if k > 0 && l > 0 {
                v.push((k, -(l as i32)));
            }
        }
    }
    v
}

/// W, τ and area of the homogeneous torus at b perturbed along cos(kX/r + lY/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub willmore: f64,
    pub tau: C64,
    pub area: f64,
}

fn to4(z: [C64; 2]) -> [f64; 4] {
    [z[0].re, z[0].im, z[1].re, z[1].im]
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Equivariant evaluation of f^b + ε cos(x) N, renormalised onto S³.
///
/// The wave coordinate is x = k·X/r + l·Y/s, the orbit coordinate t enters
/// through the action (e^{ilt}, e^{−ikt}). τ is returned in the chart where
/// Im τ > 1 (τ ↦ −1/τ for b < 1).
pub fn wave_sample(b: f64, k: i32, l: i32, eps: f64, n: usize) -> WaveSample {
    let r = 1.0 / (1.0 + b * b).sqrt();
    let s = b * r;
    let (kf, lf) = (k as f64, l as f64);
    let lam = kf * kf + lf * lf;
    let xs: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    // phase-free components; the diagonal phases e^{ikx/λ}, e^{ilx/λ} are an isometry
    let amp: Vec<(f64, f64)> = xs
        .iter()
        .map(|x| {
            let u = x.cos();
            let (p, q) = (r - eps * s * u, s + eps * r * u);
            let h = p.hypot(q);
            (p / h, q / h)
        })
        .collect();
    let a0: Vec<f64> = amp.iter().map(|v| v.0).collect();
    let b0: Vec<f64> = amp.iter().map(|v| v.1).collect();
    let a1 = periodic_derivative(&a0, 2.0 * PI);
    let b1 = periodic_derivative(&b0, 2.0 * PI);
    let a2 = periodic_derivative(&a1, 2.0 * PI);
    let b2 = periodic_derivative(&b1, 2.0 * PI);
    let (wa, wb) = (kf / lam, lf / lam);
    let i = C64::i();
    let (ga, gb) = (i * lf, -i * kf);

    let mut w_sum = 0.0;
    let mut area = 0.0;
    let mut period = C64::new(0.0, 0.0);
    for j in 0..n {
        let f0 = [C64::new(a0[j], 0.0), C64::new(b0[j], 0.0)];
        let fx = [C64::new(a1[j], wa * a0[j]), C64::new(b1[j], wb * b0[j])];
        let fxx =
            [C64::new(a2[j] - wa * wa * a0[j], 2.0 * wa * a1[j]), C64::new(b2[j] - wb * wb * b0[j], 2.0 * wb * b1[j])];
        let ft = [ga * f0[0], gb * f0[1]];
        let ftt = [ga * ga * f0[0], gb * gb * f0[1]];
        let fxt = [ga * fx[0], gb * fx[1]];
        let (p0, px, pt) = (to4(f0), to4(fx), to4(ft));
        let nv = cross4(&p0, &px, &pt);
        let e = dot(&px, &px);
        let f = dot(&px, &pt);
        let g = dot(&pt, &pt);
        let (ll, mm, nn) = (dot(&to4(fxx), &nv), dot(&to4(fxt), &nv), dot(&to4(ftt), &nv));
        let det = e * g - f * f;
        let h = (g * ll - 2.0 * f * mm + e * nn) / (2.0 * det);
        let da = det.sqrt();
        w_sum += (h * h + 1.0) * da;
        area += da;
        period += C64::new(f, da) / g;
    }
    let scale = 4.0 * PI * PI / n as f64;
    // ∫₀^{2π} (F + i√det)/G dx
    let per = period * (2.0 * PI / n as f64);
    // images of X/r ↦ X/r + 2π and Y/s ↦ Y/s + 2π under w = t + ∫(F + i√det)/G dx
    let dw_x = 2.0 * PI * lf / lam + kf * per;
    let dw_y = -2.0 * PI * kf / lam + lf * per;
    let mut tau = dw_y / dw_x;
    if tau.im < 0.0 {
        tau = tau.conj();
    }
    if b < 1.0 {
        tau = -1.0 / tau;
        if tau.im < 0.0 {
            tau = tau.conj();
        }
    }
    WaveSample { willmore: w_sum * scale, tau, area: area * scale }
}

/// Hessians (D²W, D²Π¹, D²Π²)/∫|φ|² along one wave by Richardson-extrapolated second differences.
pub fn wave_hessian(b: f64, k: i32, l: i32) -> (f64, f64, f64) {
    let base = wave_sample(b, k, l, 0.0, FD_SAMPLES);
    let d2 = |h: f64| {
        let p = wave_sample(b, k, l, h, FD_SAMPLES);
        let m = wave_sample(b, k, l, -h, FD_SAMPLES);
        let w = (p.willmore - 2.0 * base.willmore + m.willmore) / (h * h);
        let t = (p.tau - 2.0 * base.tau + m.tau) / (h * h);
        (w, t.re, t.im)
    };
    let (w1, a1, b1) = d2(FD_STEP);
    let (w2, a2, b2) = d2(FD_STEP / 2.0);
    let rich = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    // ∫cos²(x) dA = ½·area
    let norm = 0.5 * base.area;
    (rich(w1, w2) / norm, rich(a1, a2) / norm, rich(b1, b2) / norm)
}

fn minimal_mode(rows: &[ModeRow], alpha: f64, beta: f64) -> f64 {
    rows.iter().map(|m| m.d2w - alpha * m.d2pi1 - beta * m.d2pi2).fold(f64::INFINITY, f64::min)
}

fn kernel_of(rows: &[ModeRow]) -> (Vec<FourierMode>, Vec<(u32, i32)>) {
    let mut waves = vec![];
    let mut modes = vec![];
    for m in rows {
        let scale = m.d2w.abs().max(1.0);
        if m.penalized.abs() < 1e-8 * scale {
            waves.push((m.k, m.l));
            // away from b = 1 the same coefficients describe sin/cos(kX/r ± lY/s)
            modes.extend(FourierMode::waves(m.k, m.l.unsigned_abs(), m.l >= 0));
        }
    }
    (modes, waves)
}

fn closed_form_rows(beta: f64) -> Vec<ModeRow> {
    scan_modes()
        .into_iter()
        .map(|(k, l)| {
            let lu = l.unsigned_abs();
            let mode = FourierMode::waves(k, lu, l >= 0)[0];
            let d2w = d2_willmore_mode(k as i64, l as i64);
            let d2pi1 = d2_pi1_mode(&mode);
            let d2pi2 = d2_pi2_mode(1.0, k as f64, lu as f64);
            ModeRow { k, l, d2w, d2pi1, d2pi2, penalized: 0.0 }
        })
        .map(|mut m| {
            m.penalized = m.d2w - beta * m.d2pi2;
            m
        })
        .collect()
}

/// Largest α with D²W_{α,β} ≥ 0 on every scanned mode.
///
/// b = 1 uses the closed forms; otherwise D²W and D²Π¹ come from
/// [`wave_hessian`] and D²Π² from [`d2_pi2_mode`]. For b < 1 the class is
/// read in the chart τ ↦ −1/τ and the modes are those of the torus itself,
/// so D²Π² is taken from the swapped mode at 1/b.
pub fn alpha_crit(b: f64, beta_b: f64) -> Result<StabilityReport> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::OutOfRange(format!("b must be positive, got {b}")));
    }
    let exact = b == 1.0;
    let mut rows = if exact {
        closed_form_rows(beta_b)
    } else {
        scan_modes()
            .into_par_iter()
            .map(|(k, l)| {
                let (d2w, d2pi1, _) = wave_hessian(b, k as i32, l);
                let lu = l.unsigned_abs() as f64;
                let d2pi2 = if b >= 1.0 { d2_pi2_mode(b, k as f64, lu) } else { d2_pi2_mode(1.0 / b, lu, k as f64) };
                ModeRow { k, l, d2w, d2pi1, d2pi2, penalized: 0.0 }
            })
            .collect()
    };

    let m0 = minimal_mode(&rows, 0.0, beta_b);
    if m0 < 0.0 {
        return Err(Error::NoRoot(format!("second variation negative at α = 0 (min {m0:e})")));
    }
    let mut hi = 1.0;
    while minimal_mode(&rows, hi, beta_b) >= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoRoot("no mode destabilises for any α".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if minimal_mode(&rows, mid, beta_b) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the crossing inside the bracket belongs to one mode; solve it exactly
    let active = rows
        .iter()
        .filter(|m| m.d2pi1 > 0.0)
        .map(|m| (m.d2w - beta_b * m.d2pi2) / m.d2pi1)
        .filter(|a| *a >= lo * (1.0 - 1e-9) && *a <= hi * (1.0 + 1e-9))
        .fold(f64::INFINITY, f64::min);
    let alpha = if active.is_finite() { active } else { 0.5 * (lo + hi) };
    for m in rows.iter_mut() {
        m.penalized = m.d2w - alpha * m.d2pi1 - beta_b * m.d2pi2;
    }
    let (kernel, kernel_waves) = kernel_of(&rows);
    let mode_cap_warning = kernel_waves.iter().any(|&(k, l)| k == K_MAX || l.unsigned_abs() == L_MAX);
    Ok(StabilityReport {
        b,
        beta_b,
        alpha_crit: alpha,
        bracket: (lo, hi),
        kernel,
        kernel_waves,
        mode_table: rows,
        mode_cap_warning,
    })
}

/// β^b = ∂_b W(f^b) = π²(1 − 1/b²), read in the chart with b ≥ 1.
pub fn beta_homogeneous(b: f64) -> f64 {
    let bn = if b >= 1.0 { b } else { 1.0 / b };
    PI * PI * (1.0 - 1.0 / (bn * bn))
}

/// η₂ and the residuals of the linear system it solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaCheck {
    pub n: usize,
    /// η₂ on the n × n grid over [0, √2π)², row-major in x.
    pub eta2: Vec<f64>,
    pub laplace_residual: f64,
    /// |⟨η°, q¹⟩| = |∫η₁|.
    pub orthogonality: f64,
    pub divergence_residual: f64,
}

/// Solve Δη₂ = −2∂₁∂₂u₂ for u = u₂q² supported on one A_{kl}.
pub fn eta_solver_check(u: &FourierMode, n: usize) -> EtaCheck {
    let period = 2f64.sqrt() * PI;
    let lam = (u.k * u.k + u.l * u.l) as f64;
    let h = period / n as f64;
    let grid = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        (0..n * n).map(|idx| f((idx / n) as f64 * h, (idx % n) as f64 * h)).collect()
    };
    let u2 = grid(&|x, y| u.eval(x, y));
    let eta2 = grid(&|x, y| u.derivative(1, 1, x, y) / lam);
    // η₁ = (∂₁₁ − ∂₂₂)u₂/(2λ), the mean-free solution of the divergence system
    let eta1 = grid(&|x, y| (u.derivative(2, 0, x, y) - u.derivative(0, 2, x, y)) / (2.0 * lam));
    let d = |f: &[f64], i: u32, j: u32| periodic_derivative_2d(f, n, n, period, period, i, j);
    let lap = d(&eta2, 2, 0).iter().zip(d(&eta2, 0, 2)).map(|(a, b)| a + b).collect::<Vec<_>>();
    let rhs = d(&u2, 1, 1);
    let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let laplace_residual = lap.iter().zip(&rhs).map(|(a, r)| (a + 2.0 * r).abs()).fold(0.0, f64::max) / scale;
    let orthogonality = eta1.iter().sum::<f64>() * h * h;
    // ∂₂η₁ − ∂₁η₂ = ∂₂u₂ and ∂₁η₁ + ∂₂η₂ = −∂₁u₂ (u₁ = 0)
    let (e1y, e2x, e1x, e2y) = (d(&eta1, 0, 1), d(&eta2, 1, 0), d(&eta1, 1, 0), d(&eta2, 0, 1));
    let (uy, ux) = (d(&u2, 0, 1), d(&u2, 1, 0));
    let mut div = 0.0f64;
    for i in 0..n * n {
        div = div.max((e1y[i] - e2x[i] - uy[i]).abs());
        div = div.max((e1x[i] + e2y[i] + ux[i]).abs());
    }
    EtaCheck { n, eta2, laplace_residual, orthogonality, divergence_residual: div / scale }
}

/// (x, y) from (2,−1)-adapted coordinates: (x/r, y/s) angles of f̃^b.
pub fn from_adapted(b: f64, xt: f64, yt: f64) -> (f64, f64) {
    let r = 1.0 / (1.0 + b * b).sqrt();
    let s = b * r;
    // X/r = s x̃/r + 2ỹ, Y/s = 2r x̃/s − ỹ
    (r * (s * xt / r + 2.0 * yt), s * (2.0 * r * xt / s - yt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_flag() {
        let [s, c] = FourierMode::waves(1, 2, true);
        assert!(s.is_equality_case() && c.is_equality_case());
        let [s, _] = FourierMode::waves(1, 2, false);
        assert!(!s.is_equality_case());
    }

    #[test]
    fn derivative_matches_difference() {
        let m = FourierMode::new(2, 3, [0.3, -0.2, 0.7, 0.1]).unwrap();
        let (x, y, h) = (0.4, 1.1, 1e-5);
        let fd = (m.eval(x + h, y) - m.eval(x - h, y)) / (2.0 * h);
        assert!((fd - m.derivative(1, 0, x, y)).abs() < 1e-8);
    }
}
