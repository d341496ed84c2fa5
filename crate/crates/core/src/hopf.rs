//! Hopf lifts of spherical curves, homogeneous tori, conformal classes and
//! mesh Willmore quadrature for equivariant tori in S³.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::closure::{curve_invariants, ProfileCurve};
use crate::error::{Error, Result};
use crate::spectral::periodic_antiderivative;

pub const DEFAULT_FIBER_SAMPLES: usize = 256;
pub const DEFAULT_PROFILE_SAMPLES: usize = 2048;

/// Periodic structured mesh of an equivariant torus in S³ ⊂ ℝ⁴.
///
/// Vertex (i, j) sits at conformal coordinates (x, y) = (i·dx, j·dy − shear·i·dx);
/// moving one row in j applies the one-parameter group (z, w) ↦ (e^{i·m·t}z, e^{i·k·t}w) with t = dy.
#[derive(Debug, Clone, Serialize)]
pub struct EquivariantImmersion {
    pub m: f64,
    pub k: f64,
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<[f64; 4]>,
    pub dx: f64,
    pub dy: f64,
    pub shear: f64,
    /// Generators of the period lattice in the conformal coordinate x + iy.
    pub generators: [C64; 2],
}

impl EquivariantImmersion {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 4] {
        self.points[(i % self.nx) * self.ny + (j % self.ny)]
    }

    /// Largest |‖f‖ − 1| over the mesh.
    pub fn norm_defect(&self) -> f64 {
        self.points.iter().map(|p| (norm4(p) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest deviation of row j + 1 from the group action applied to row j.
    pub fn equivariance_residual(&self) -> f64 {
        let (zm, zk) = (C64::from_polar(1.0, self.m * self.dy), C64::from_polar(1.0, self.k * self.dy));
        let mut worst: f64 = 0.0;
        for i in 0..self.nx {
            for j in 0..self.ny {
                let a = self.at(i, j);
                let z = C64::new(a[0], a[1]) * zm;
                let w = C64::new(a[2], a[3]) * zk;
                let b = self.at(i, j + 1);
                let d = [z.re - b[0], z.im - b[1], w.re - b[2], w.im - b[3]];
                worst = worst.max(norm4(&d));
            }
        }
        worst
    }

    /// Every other vertex in both directions; None when a dimension is odd.
    pub fn coarsen(&self) -> Option<EquivariantImmersion> {
        if !self.nx.is_multiple_of(2) || !self.ny.is_multiple_of(2) || self.nx < 8 || self.ny < 8 {
            return None;
        }
        let (nx, ny) = (self.nx / 2, self.ny / 2);
        let mut points = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                points.push(self.at(2 * i, 2 * j));
            }
        }
        Some(EquivariantImmersion { nx, ny, points, dx: 2.0 * self.dx, dy: 2.0 * self.dy, ..self.clone() })
    }

    /// Apply a 4×4 orthogonal matrix to every vertex.
    pub fn transformed(&self, rot: &[[f64; 4]; 4]) -> EquivariantImmersion {
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = [0.0; 4];
                for (r, qr) in q.iter_mut().enumerate() {
                    *qr = (0..4).map(|c| rot[r][c] * p[c]).sum();
                }
                q
            })
            .collect();
        EquivariantImmersion { points, ..self.clone() }
    }

    /// Normalised moduli point (a, b) of the period lattice.
    pub fn conformal_class(&self) -> (f64, f64) {
        normalize_class(self.generators[0], self.generators[1])
    }
}

fn norm4(p: &[f64; 4]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt()
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Unit vector orthogonal to u, v, w in ℝ⁴ (cofactor expansion).
pub fn cross4(u: &[f64; 4], v: &[f64; 4], w: &[f64; 4]) -> [f64; 4] {
    let pick = |x: &[f64; 4], skip: usize| {
        let mut o = [0.0; 3];
        let mut t = 0;
        for (c, &val) in x.iter().enumerate() {
            if c != skip {
                o[t] = val;
                t += 1;
            }
        }
        o
    };
    let mut n = [0.0; 4];
    for (c, nc) in n.iter_mut().enumerate() {
        let s = if c % 2 == 0 { -1.0 } else { 1.0 };
        *nc = s * det3(pick(u, c), pick(v, c), pick(w, c));
    }
    let l = norm4(&n);
    n.map(|x| x / l)
}

/// Reduce τ = ω₂/ω₁ to the SL₂(ℤ) fundamental domain and return (|Re τ|, Im τ).
pub fn normalize_class(w1: C64, w2: C64) -> (f64, f64) {
    let mut tau = w2 / w1;
    if tau.im < 0.0 {
        tau = tau.conj();
    }
    for _ in 0..200 {
        tau.re -= tau.re.round();
        if tau.norm_sqr() < 1.0 - 1e-14 {
            tau = -1.0 / tau;
        } else {
            break;
        }
    }
    (tau.re.abs(), tau.im)
}

/// Per-vertex geometric data from central differences.
struct Local {
    e: f64,
    f: f64,
    g: f64,
    l: f64,
    m: f64,
    n: f64,
    normal: [f64; 4],
    fs: [f64; 4],
    ft: [f64; 4],
    fss: [f64; 4],
    fst: [f64; 4],
    ftt: [f64; 4],
}

fn local(f: &EquivariantImmersion, i: usize, j: usize) -> Local {
    let (nx, ny) = (f.nx, f.ny);
    let c = f.at(i, j);
    let xp = f.at(i + 1, j);
    let xm = f.at(i + nx - 1, j);
    let yp = f.at(i, j + 1);
    let ym = f.at(i, j + ny - 1);
    let pp = f.at(i + 1, j + 1);
    let pm = f.at(i + 1, j + ny - 1);
    let mp = f.at(i + nx - 1, j + 1);
    let mm = f.at(i + nx - 1, j + ny - 1);
    let (hx, hy) = (f.dx, f.dy);
    let mut fs = [0.0; 4];
    let mut ft = [0.0; 4];
    let mut fss = [0.0; 4];
    let mut ftt = [0.0; 4];
    let mut fst = [0.0; 4];
    for a in 0..4 {
        fs[a] = (xp[a] - xm[a]) / (2.0 * hx);
        ft[a] = (yp[a] - ym[a]) / (2.0 * hy);
        fss[a] = (xp[a] - 2.0 * c[a] + xm[a]) / (hx * hx);
        ftt[a] = (yp[a] - 2.0 * c[a] + ym[a]) / (hy * hy);
        fst[a] = (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * hx * hy);
    }
    let normal = cross4(&c, &fs, &ft);
    Local {
        e: dot4(&fs, &fs),
        f: dot4(&fs, &ft),
        g: dot4(&ft, &ft),
        l: dot4(&fss, &normal),
        m: dot4(&fst, &normal),
        n: dot4(&ftt, &normal),
        normal,
        fs,
        ft,
        fss,
        fst,
        ftt,
    }
}

/// Plain second-order mesh value of ∫(H² + 1) dA.
pub fn willmore_raw(f: &EquivariantImmersion) -> f64 {
    let rows: Vec<f64> = (0..f.nx)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..f.ny {
                let d = local(f, i, j);
                let det = d.e * d.g - d.f * d.f;
                let h = (d.g * d.l - 2.0 * d.f * d.m + d.e * d.n) / (2.0 * det);
                acc += (h * h + 1.0) * det.sqrt();
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() * f.dx * f.dy
}

/// Mesh Willmore energy with Richardson extrapolation over two coarsenings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WillmoreEstimate {
    /// Extrapolated value (4W_h − W_2h)/3.
    pub value: f64,
    pub raw: f64,
    /// Observed convergence order from W_4h, W_2h, W_h; NaN without two coarsenings.
    pub order: f64,
    /// Extrapolation moved the value by more than 1e−4 relative.
    pub resolution_warning: bool,
}

/// ∫(H² + 1) dA over the torus; W(Clifford) = 2π².
pub fn willmore_energy(f: &EquivariantImmersion) -> WillmoreEstimate {
    let w1 = willmore_raw(f);
    let c1 = f.coarsen();
    let w2 = c1.as_ref().map(willmore_raw);
    let w4 = c1.as_ref().and_then(|c| c.coarsen()).map(|c| willmore_raw(&c));
    let value = match w2 {
        Some(w2) => (4.0 * w1 - w2) / 3.0,
        None => w1,
    };
    let order = match (w2, w4) {
        (Some(w2), Some(w4)) => ((w4 - w2) / (w2 - w1)).abs().log2(),
        _ => f64::NAN,
    };
    WillmoreEstimate { value, raw: w1, order, resolution_warning: ((value - w1) / value).abs() > 1e-4 }
}

/// Conformal Hopf differential II(∂z, ∂z)/|df| along the first fiber row, ∂z = ½(∂x − i∂y).
///
/// Richardson-extrapolated against the once-coarsened mesh when possible, in which case only
/// even profile indices are reported.
#[derive(Debug, Clone, Serialize)]
pub struct HopfDifferential {
    pub x: Vec<f64>,
    pub q: Vec<C64>,
}

fn hopf_differential_raw(f: &EquivariantImmersion) -> Vec<C64> {
    let s = f.shear;
    (0..f.nx)
        .map(|i| {
            let d = local(f, i, 0);
            let mut fx = [0.0; 4];
            let mut fxx = [0.0; 4];
            let mut fxy = [0.0; 4];
            for a in 0..4 {
                fx[a] = d.fs[a] + s * d.ft[a];
                fxx[a] = d.fss[a] + 2.0 * s * d.fst[a] + s * s * d.ftt[a];
                fxy[a] = d.fst[a] + s * d.ftt[a];
            }
            let l = dot4(&fxx, &d.normal);
            let m = dot4(&fxy, &d.normal);
            let scale = (0.5 * (dot4(&fx, &fx) + d.g)).sqrt();
            C64::new(l - d.n, -2.0 * m) / (4.0 * scale)
        })
        .collect()
}

pub fn conformal_hopf_differential(f: &EquivariantImmersion) -> HopfDifferential {
    let fine = hopf_differential_raw(f);
    match f.coarsen() {
        Some(c) => {
            let coarse = hopf_differential_raw(&c);
            let q = coarse.iter().enumerate().map(|(i, qc)| (4.0 * fine[2 * i] - qc) / 3.0).collect();
            let x = (0..coarse.len()).map(|i| 2.0 * i as f64 * f.dx).collect();
            HopfDifferential { x, q }
        }
        None => HopfDifferential { x: (0..f.nx).map(|i| i as f64 * f.dx).collect(), q: fine },
    }
}

/// Product torus (r e^{ix/r}, s e^{iy/s}) with r² + s² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneousTorus {
    pub r: f64,
    pub s: f64,
}

impl HomogeneousTorus {
    pub fn from_b(b: f64) -> Result<HomogeneousTorus> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::OutOfRange(format!("homogeneous torus needs b > 0, got {b}")));
        }
        let r = 1.0 / (1.0 + b * b).sqrt();
        Ok(HomogeneousTorus { r, s: b * r })
    }

    pub fn b(&self) -> f64 {
        self.s / self.r
    }

    /// The printed value 1/(2rs).
    pub fn q(&self) -> f64 {
        1.0 / (2.0 * self.r * self.s)
    }

    /// (s² − r²)/(rs).
    pub fn mu(&self) -> f64 {
        (self.s * self.s - self.r * self.r) / (self.r * self.s)
    }

    /// Geodesic curvature of the Hopf profile circle, (s² − r²)/(2rs).
    pub fn profile_kappa(&self) -> f64 {
        0.5 * self.mu()
    }

    /// π²(b + 1/b).
    pub fn willmore(&self) -> f64 {
        PI * PI / (self.r * self.s)
    }

    /// Product parametrization on an nx × ny grid.
    pub fn mesh(&self, nx: usize, ny: usize) -> EquivariantImmersion {
        let (lx, ly) = (2.0 * PI * self.r, 2.0 * PI * self.s);
        let mut points = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let a = 2.0 * PI * i as f64 / nx as f64;
            for j in 0..ny {
                let b = 2.0 * PI * j as f64 / ny as f64;
                points.push([self.r * a.cos(), self.r * a.sin(), self.s * b.cos(), self.s * b.sin()]);
            }
        }
        EquivariantImmersion {
            m: 0.0,
            k: 1.0 / self.s,
            nx,
            ny,
            points,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            shear: 0.0,
            generators: [C64::new(lx, 0.0), C64::new(0.0, ly)],
        }
    }
}

/// Horizontal lift data along the sampled profile.
#[derive(Debug, Clone, Serialize)]
pub struct HorizontalLift {
    /// Unit vectors in ℂ² over the profile samples (the repeated endpoint excluded).
    pub lift: Vec<[C64; 2]>,
    /// Fiber phase picked up after one traversal.
    pub holonomy: f64,
    /// |π(lift) − profile| maximum.
    pub projection_error: f64,
}

/// Hopf map (z, w) ↦ (2z w̄, |z|² − |w|²).
pub fn hopf_project(z: C64, w: C64) -> [f64; 3] {
    let p = 2.0 * z * w.conj();
    [p.re, p.im, z.norm_sqr() - w.norm_sqr()]
}

/// Horizontal lift u = e^{iψ}(w, 1)/√(1 + |w|²), ψ′ = −Im(w̄w′)/(1 + |w|²), ψ by spectral quadrature.
pub fn horizontal_lift(c: &ProfileCurve) -> Result<HorizontalLift> {
    if (c.g - 1.0).abs() > 1e-14 {
        return Err(Error::OutOfRange(format!("Hopf lift needs a unit-sphere profile, got G = {}", c.g)));
    }
    let n = c.samples.len() - 1;
    if n < 8 || c.stereo.len() != c.samples.len() {
        return Err(Error::InsufficientSamples { need: 9, got: c.samples.len() });
    }
    let span = c.samples[n].x - c.samples[0].x;
    let dpsi: Vec<f64> = c.stereo[..n].iter().map(|(w, dw)| -(w.conj() * dw).im / (1.0 + w.norm_sqr())).collect();
    let (mean, per) = periodic_antiderivative(&dpsi, span);
    // drift: the lift must return to the same fiber point up to the holonomy; check on the
    // resolved spectrum by comparing against the half-resolution quadrature
    let half: Vec<f64> = dpsi.iter().step_by(2).copied().collect();
    if n.is_multiple_of(2) {
        let (mh, ph) = periodic_antiderivative(&half, span);
        let drift = (mh - mean).abs() * span
            + ph.iter().zip(per.iter().step_by(2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if drift > 1e-8 {
            return Err(Error::Drift { drift });
        }
    }
    let mut lift = Vec::with_capacity(n);
    let mut perr: f64 = 0.0;
    for i in 0..n {
        let x = c.samples[i].x - c.samples[0].x;
        let psi = mean * x + per[i];
        let (w, _) = c.stereo[i];
        let d = (1.0 + w.norm_sqr()).sqrt();
        let ph = C64::from_polar(1.0, psi);
        let u = [ph * w / d, ph / d];
        let p = hopf_project(u[0], u[1]);
        let q = c.samples[i].point;
        perr = perr.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt());
        lift.push(u);
    }
    Ok(HorizontalLift { lift, holonomy: mean * span, projection_error: perr })
}

/// Hopf torus over a closed profile, in conformal coordinates (x, y) with x the arclength
/// and e^{iy/2} the fiber action; the y-period is 4π.
pub fn hopf_lift(c: &ProfileCurve, fiber_samples: usize) -> Result<EquivariantImmersion> {
    let inv = curve_invariants(c);
    if inv.open_warning {
        return Err(Error::OpenCurve { gap: inv.residual });
    }
    if fiber_samples < 8 {
        return Err(Error::InsufficientSamples { need: 8, got: fiber_samples });
    }
    let h = horizontal_lift(c)?;
    let nx = h.lift.len();
    let ny = fiber_samples;
    let span = c.samples[nx].x - c.samples[0].x;
    let hol = h.holonomy;
    let dy = 4.0 * PI / ny as f64;
    let mut points = Vec::with_capacity(nx * ny);
    for (i, u) in h.lift.iter().enumerate() {
        let x = c.samples[i].x - c.samples[0].x;
        let twist = C64::from_polar(1.0, -hol * x / span);
        for j in 0..ny {
            let ph = twist * C64::from_polar(1.0, 0.5 * j as f64 * dy);
            let (z, w) = (ph * u[0], ph * u[1]);
            points.push([z.re, z.im, w.re, w.im]);
        }
    }
    Ok(EquivariantImmersion {
        m: 0.5,
        k: 0.5,
        nx,
        ny,
        points,
        dx: span / nx as f64,
        dy,
        shear: 2.0 * hol / span,
        generators: [C64::new(0.0, 4.0 * PI), C64::new(span, -2.0 * hol)],
    })
}

/// Lattice generators (2π, ½(A + iL)) of the Hopf torus over c, and the normalised class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfClass {
    pub generators: [C64; 2],
    pub a: f64,
    pub b: f64,
}

pub fn hopf_conformal_class(c: &ProfileCurve) -> Result<HopfClass> {
    let inv = curve_invariants(c);
    if inv.open_warning {
        return Err(Error::OpenCurve { gap: inv.residual });
    }
    Ok(class_from_area_length(inv.area, inv.length))
}

/// Class of the lattice ⟨2π, ½(A + iL)⟩.
pub fn class_from_area_length(area: f64, length: f64) -> HopfClass {
    let g = [C64::new(2.0 * PI, 0.0), C64::new(0.5 * area, 0.5 * length)];
    let (a, b) = normalize_class(g[0], g[1]);
    HopfClass { generators: g, a, b }
}

/// π∫(κ² + 1) ds over the sampled closed profile (trapezoid, spectrally accurate).
pub fn hopf_willmore_from_curve(c: &ProfileCurve) -> f64 {
    let s = &c.samples;
    let mut acc = 0.0;
    for w in s.windows(2) {
        let f = |k: f64| k * k + 1.0;
        acc += 0.5 * (f(w[0].kappa) + f(w[1].kappa)) * (w[1].x - w[0].x);
    }
    PI * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross4_is_orthogonal() {
        let u = [1.0, 2.0, 0.5, -1.0];
        let v = [0.3, -0.2, 1.0, 0.0];
        let w = [0.0, 1.0, 1.0, 2.0];
        let n = cross4(&u, &v, &w);
        for x in [u, v, w] {
            assert!(dot4(&n, &x).abs() < 1e-14);
        }
        assert!((norm4(&n) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalisation_of_square_and_rhombic() {
        let (a, b) = normalize_class(C64::new(2.0 * PI, 0.0), C64::new(PI, PI));
        assert!(a.abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let (a, b) = normalize_class(C64::new(1.0, 0.0), C64::new(0.5, 0.5 * 3f64.sqrt()));
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5 * 3f64.sqrt()).abs() < 1e-14);
    }
}
