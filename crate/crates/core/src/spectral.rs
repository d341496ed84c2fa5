//! FFT helpers for smooth periodic samples.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn forward(f: &[f64]) -> Vec<C64> {
    let n = f.len();
    let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

fn inverse(mut buf: Vec<C64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Derivative of uniformly sampled periodic data (samples exclude the repeated endpoint).
pub fn periodic_derivative(f: &[f64], period: f64) -> Vec<f64> {
    let n = f.len();
    let mut s = forward(f);
    let w = 2.0 * PI / period;
    for (k, c) in s.iter_mut().enumerate() {
        // the Nyquist mode has no well-defined derivative
        let kk = if n.is_multiple_of(2) && k == n / 2 { 0.0 } else { wavenumber(k, n) };
        *c *= C64::new(0.0, w * kk);
    }
    inverse(s)
}

/// ∂ₓ^i ∂ᵧ^j of periodic samples on an nx × ny grid (row-major in x).
pub fn periodic_derivative_2d(f: &[f64], nx: usize, ny: usize, px: f64, py: f64, i: u32, j: u32) -> Vec<f64> {
    let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let (fx, fy) = (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny));
    let (bx, by) = (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny));
    let factor = |k: usize, n: usize, p: f64, order: u32| {
        if order % 2 == 1 && n.is_multiple_of(2) && k == n / 2 {
            return C64::new(0.0, 0.0);
        }
        C64::new(0.0, 2.0 * PI / p * wavenumber(k, n)).powu(order)
    };
    for row in buf.chunks_mut(ny) {
        fy.process(row);
        for (k, c) in row.iter_mut().enumerate() {
            *c *= factor(k, ny, py, j);
        }
        by.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); nx];
    for c in 0..ny {
        for r in 0..nx {
            col[r] = buf[r * ny + c];
        }
        fx.process(&mut col);
        for (k, v) in col.iter_mut().enumerate() {
            *v *= factor(k, nx, px, i);
        }
        bx.process(&mut col);
        for r in 0..nx {
            buf[r * ny + c] = col[r];
        }
    }
    buf.iter().map(|c| c.re / (nx * ny) as f64).collect()
}

/// Mean value and the periodic part of the antiderivative, P(x₀) = 0.
///
/// ∫₀^x f = mean·x + P(x).
pub fn periodic_antiderivative(f: &[f64], period: f64) -> (f64, Vec<f64>) {
    let n = f.len();
    let mut s = forward(f);
    let mean = s[0].re / n as f64;
    s[0] = C64::new(0.0, 0.0);
    let w = 2.0 * PI / period;
    for (k, c) in s.iter_mut().enumerate().skip(1) {
        let kk = wavenumber(k, n);
        if n.is_multiple_of(2) && k == n / 2 {
            *c = C64::new(0.0, 0.0);
        } else {
            *c /= C64::new(0.0, w * kk);
        }
    }
    let mut p = inverse(s);
    let p0 = p[0];
    p.iter_mut().for_each(|v| *v -= p0);
    (mean, p)
}

/// Fraction of the signal energy outside the zero mode.
pub fn nonconstant_fraction(f: &[f64]) -> f64 {
    let s = forward(f);
    let total: f64 = s.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    1.0 - s[0].norm_sqr() / total
}
