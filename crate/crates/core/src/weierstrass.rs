//! Weierstrass ℘, ℘′, ζ and σ for real invariants.
//!
//! Evaluation goes through the Jacobi θ₁ series in a modular-reduced basis
//! (|q| ≤ e^{-π√3/2} ≈ 0.066), after reducing the argument into the period
//! parallelogram centred at the origin. Quasi-periodicity of ζ and σ restores
//! the original argument.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative discriminant below which a lattice counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-13;
/// Distance to a lattice point (relative to |ω₁|) treated as a pole.
pub const POLE_TOLERANCE: f64 = 1e-10;
/// Legendre relation must hold this well for a lattice to be accepted.
pub const LEGENDRE_TOLERANCE: f64 = 1e-10;

/// Geometry of a real lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LatticeShape {
    /// D > 0: three real roots, ω₁ and ω₃ generate the half-period lattice.
    Rectangular,
    /// D < 0: one real root; 2ω₁ and ω₁ + ω₃ generate the lattice.
    Rhombic,
}

/// Common interface of the elliptic functions and their trigonometric limit.
pub trait Weierstrass {
    fn wp(&self, z: C64) -> Result<C64>;
    fn wp_prime(&self, z: C64) -> Result<C64>;
    fn zeta(&self, z: C64) -> Result<C64>;
    fn sigma(&self, z: C64) -> C64;
    /// Real half-period ω₁.
    fn omega1(&self) -> f64;
    /// ζ(ω₁).
    fn eta1(&self) -> f64;
    fn invariants(&self) -> (f64, f64);
}

/// Values of the four functions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WpValues {
    pub wp: C64,
    pub wp_prime: C64,
    pub zeta: C64,
    pub sigma: C64,
}

/// Roots of 4t³ − g₂t − g₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubicRoots {
    /// e₁ > e₂ > e₃.
    Real([f64; 3]),
    /// One real root and the root of the conjugate pair with positive imaginary part.
    OneReal { e: f64, pair: C64 },
}

/// Discriminant g₂³ − 27g₃², with error-free products so near-degenerate values keep their digits.
pub fn discriminant(g2: f64, g3: f64) -> f64 {
    let two_prod = |a: f64, b: f64| {
        let p = a * b;
        (p, a.mul_add(b, -p))
    };
    let (s2, s2e) = two_prod(g2, g2);
    let (c, ce) = two_prod(s2, g2);
    let cube_err = ce + s2e * g2;
    let (t2, t2e) = two_prod(g3, g3);
    let (u, ue) = two_prod(27.0, t2);
    let sq_err = ue + 27.0 * t2e;
    (c - u) + (cube_err - sq_err)
}

/// √z with the small component recovered from the large one, avoiding cancellation near the negative axis.
fn stable_sqrt(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        return z;
    }
    if z.re >= 0.0 {
        let a = (0.5 * (r + z.re)).sqrt();
        C64::new(a, z.im / (2.0 * a))
    } else {
        let b = (0.5 * (r - z.re)).sqrt().copysign(z.im);
        C64::new(z.im / (2.0 * b), b)
    }
}

fn is_degenerate(g2: f64, g3: f64) -> (bool, f64) {
    let d = discriminant(g2, g3);
    let scale = (g2.abs().powi(3)).max(27.0 * g3 * g3);
    let thr = DEGENERACY_THRESHOLD * scale;
    (d.abs() <= thr || scale == 0.0, thr)
}

/// Roots of the Weierstrass cubic, Newton-polished.
pub fn cubic_roots(g2: f64, g3: f64) -> CubicRoots {
    let f = |t: f64| 4.0 * t * t * t - g2 * t - g3;
    let df = |t: f64| 12.0 * t * t - g2;
    let polish = |mut t: f64| {
        for _ in 0..4 {
            let d = df(t);
            if d == 0.0 {
                break;
            }
            let step = f(t) / d;
            t -= step;
            if step.abs() <= 1e-17 * t.abs() {
                break;
            }
        }
        t
    };
    // depressed form t³ + pt + q
    let p = -g2 / 4.0;
    let q = -g3 / 4.0;
    if discriminant(g2, g3) > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (k, rk) in r.iter_mut().enumerate() {
            *rk = polish(m * (th - 2.0 * PI * k as f64 / 3.0).cos());
        }
        r.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // near a double root, rebuild the close pair from the isolated root and D
        let (iso, pair_hi) = if r[0] - r[1] < r[1] - r[2] { (r[2], true) } else { (r[0], false) };
        let c = -iso / 2.0;
        let d = discriminant(g2, g3);
        let mut sep = if pair_hi { r[0] - r[1] } else { r[1] - r[2] };
        if sep < 1e-2 * iso.abs() {
            for _ in 0..3 {
                let w = (iso - c).powi(2) - sep * sep / 4.0;
                sep = (d / (16.0 * w * w)).max(0.0).sqrt();
            }
            let (hi, lo) = (c + sep / 2.0, c - sep / 2.0);
            r = if pair_hi { [hi, lo, iso] } else { [iso, hi, lo] };
        }
        CubicRoots::Real(r)
    } else {
        let delta = q * q / 4.0 + p * p * p / 27.0;
        let sd = delta.max(0.0).sqrt();
        let e = polish((-q / 2.0 + sd).cbrt() + (-q / 2.0 - sd).cbrt());
        let mut im = (3.0 * e * e - g2).max(0.0).sqrt() / 2.0;
        // D = −64δ²((e − c)² + δ²)² pins δ without the cancellation in 3e² − g₂
        let d = discriminant(g2, g3);
        for _ in 0..3 {
            let w = 2.25 * e * e + im * im;
            im = (-d / (64.0 * w * w)).max(0.0).sqrt();
        }
        CubicRoots::OneReal { e, pair: C64::new(-e / 2.0, im) }
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 1e-16 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

/// ∫_e^∞ dt/√(4t³ − g₂t − g₃) with e the largest real root.
pub fn real_half_period(g2: f64, g3: f64) -> f64 {
    match cubic_roots(g2, g3) {
        CubicRoots::Real([e1, e2, e3]) => PI / (2.0 * agm((e1 - e3).sqrt(), (e1 - e2).sqrt())),
        CubicRoots::OneReal { e, pair } => {
            let s = stable_sqrt(C64::new(e, 0.0) - pair);
            PI / (2.0 * agm(s.re, s.norm()))
        }
    }
}

/// Lattice data for real invariants plus a reduced evaluation basis.
#[derive(Debug, Clone, Serialize)]
pub struct Lattice {
    pub g2: f64,
    pub g3: f64,
    pub omega1: f64,
    pub omega3: C64,
    pub eta1: f64,
    pub eta3: C64,
    pub disc: f64,
    pub shape: LatticeShape,
    // reduced half-period basis with Im(w2/w1) ≥ √3/2
    w1: C64,
    w2: C64,
    e1: C64,
    e2: C64,
    q: C64,
    s1_zero: C64,
}

struct Sums {
    s0: C64,
    s1: C64,
    s2: C64,
    s3: C64,
}

impl Lattice {
    /// Lattice of the invariants (g₂, g₃); errors when the discriminant is (relatively) zero.
    pub fn from_invariants(g2: f64, g3: f64) -> Result<Lattice> {
        if !g2.is_finite() || !g3.is_finite() {
            return Err(Error::InvalidInvariants(format!("non-finite invariants ({g2}, {g3})")));
        }
        let (degenerate, threshold) = is_degenerate(g2, g3);
        let disc = discriminant(g2, g3);
        if degenerate {
            return Err(Error::DegenerateLattice { disc, threshold });
        }
        let shape = if disc > 0.0 { LatticeShape::Rectangular } else { LatticeShape::Rhombic };
        let omega1 = real_half_period(g2, g3);
        let omega3 = C64::new(0.0, real_half_period(g2, -g3));
        let w1 = C64::new(omega1, 0.0);
        let w2 = match shape {
            LatticeShape::Rectangular => omega3,
            LatticeShape::Rhombic => 0.5 * (w1 + omega3),
        };
        let (w1, w2) = reduce_basis(w1, w2);
        let tau = w2 / w1;
        let q = (C64::i() * PI * tau).exp();
        let mut lat = Lattice {
            g2,
            g3,
            omega1,
            omega3,
            eta1: 0.0,
            eta3: C64::new(0.0, 0.0),
            disc,
            shape,
            w1,
            w2,
            e1: C64::new(0.0, 0.0),
            e2: C64::new(0.0, 0.0),
            q,
            s1_zero: C64::new(0.0, 0.0),
        };
        let z0 = lat.sums(C64::new(0.0, 0.0));
        lat.s1_zero = z0.s1;
        lat.e1 = -(PI * PI) / (12.0 * w1) * z0.s3 / z0.s1;
        // ζ(w2) straight from the series, then checked against Legendre
        let e2 = lat.zeta_reduced(w2);
        let leg = lat.e1 * w2 - e2 * w1 - C64::new(0.0, PI / 2.0);
        if !(leg.norm() < LEGENDRE_TOLERANCE * (1.0 + (lat.e1 * w2).norm())) {
            return Err(Error::InvalidInvariants(format!("Legendre relation fails by {:e}", leg.norm())));
        }
        lat.e2 = e2;
        let (m, n) = lat.coords(C64::new(omega1, 0.0))?;
        lat.eta1 = (lat.e1 * m + lat.e2 * n).re;
        let (m, n) = lat.coords(omega3)?;
        lat.eta3 = lat.e1 * m + lat.e2 * n;
        // g₂ recovered from the series must match the input
        let g2c = lat.series_g2();
        if (g2c - g2).abs() > 1e-8 * (1.0 + g2.abs() + g3.abs()) {
            return Err(Error::InvalidInvariants(format!("series g2 = {g2c} vs {g2}")));
        }
        Ok(lat)
    }

    /// Integer coordinates of a half-period in the reduced basis.
    fn coords(&self, h: C64) -> Result<(f64, f64)> {
        let (s, t) = solve2(self.w1, self.w2, h);
        let (m, n) = (s.round(), t.round());
        if (s - m).abs() > 1e-6 || (t - n).abs() > 1e-6 {
            return Err(Error::InvalidInvariants(format!("half-period {h} not on the lattice ({s}, {t})")));
        }
        Ok((m, n))
    }

    fn series_g2(&self) -> f64 {
        // g₂ = 12 ℘(z)² − 2℘''(z) evaluated away from poles via ℘'² = 4℘³ − g₂℘ − g₃ at two points
        let za = 0.37 * self.w1 + 0.21 * self.w2;
        let zb = 0.19 * self.w1 + 0.43 * self.w2;
        let pa = self.wp_reduced(za);
        let pb = self.wp_reduced(zb);
        let da = self.wp_prime_reduced(za);
        let db = self.wp_prime_reduced(zb);
        // subtract the two ODE instances to eliminate g₃
        let num = (4.0 * pa * pa * pa - da * da) - (4.0 * pb * pb * pb - db * db);
        (num / (pa - pb)).re
    }

    /// Reduced evaluation basis (w₁, w₂) and their ζ-values.
    pub fn reduced_basis(&self) -> (C64, C64, C64, C64) {
        (self.w1, self.w2, self.e1, self.e2)
    }

    /// Nome of the reduced basis.
    pub fn nome(&self) -> C64 {
        self.q
    }

    /// η₁ω₃ − η₃ω₁ minus its expected value πi/2·(index of ⟨2ω₁, 2ω₃⟩ in the lattice).
    pub fn legendre_defect(&self) -> C64 {
        let index = match self.shape {
            LatticeShape::Rectangular => 1.0,
            LatticeShape::Rhombic => 2.0,
        };
        self.eta1 * self.omega3 - self.eta3 * self.omega1 - C64::new(0.0, index * PI / 2.0)
    }

    /// Legendre relation in the reduced basis: η₁w₂ − η₂w₁ − πi/2.
    pub fn legendre_residual(&self) -> f64 {
        (self.e1 * self.w2 - self.e2 * self.w1 - C64::new(0.0, PI / 2.0)).norm()
    }

    /// Roots of the cubic for this lattice.
    pub fn roots(&self) -> CubicRoots {
        cubic_roots(self.g2, self.g3)
    }

    /// Distance from z to the nearest lattice point.
    pub fn distance_to_lattice(&self, z: C64) -> f64 {
        let (z0, _, _) = self.reduce(z);
        z0.norm()
    }

    /// z = z₀ + 2m w₁ + 2n w₂ with z₀ closest to the origin.
    fn reduce(&self, z: C64) -> (C64, f64, f64) {
        let (s, t) = solve2(2.0 * self.w1, 2.0 * self.w2, z);
        let (mut m, mut n) = (s.round(), t.round());
        let mut z0 = z - 2.0 * m * self.w1 - 2.0 * n * self.w2;
        let mut best = (z0.norm(), 0.0, 0.0);
        for a in -1..=1 {
            for b in -1..=1 {
                let c = z0 - 2.0 * a as f64 * self.w1 - 2.0 * b as f64 * self.w2;
                if c.norm() < best.0 {
                    best = (c.norm(), a as f64, b as f64);
                }
            }
        }
        m += best.1;
        n += best.2;
        z0 -= 2.0 * best.1 * self.w1 + 2.0 * best.2 * self.w2;
        (z0, m, n)
    }

    fn check_pole(&self, z0: C64) -> Result<()> {
        let d = z0.norm();
        if d < POLE_TOLERANCE * self.w1.norm() {
            return Err(Error::Pole { distance: d });
        }
        Ok(())
    }

    /// θ̂₁(v) = Σ(−1)ⁿ q^{n(n+1)} sin((2n+1)v) and its first three v-derivatives.
    fn sums(&self, v: C64) -> Sums {
        let lq = -(self.q.norm().ln());
        let av = v.im.abs();
        let ipt = C64::i() * PI * (self.w2 / self.w1);
        let mut s =
            Sums { s0: C64::new(0.0, 0.0), s1: C64::new(0.0, 0.0), s2: C64::new(0.0, 0.0), s3: C64::new(0.0, 0.0) };
        for n in 0..40 {
            let nf = n as f64;
            if n > 0 && nf * (nf + 1.0) * lq - 2.0 * nf * av > 46.0 {
                break;
            }
            let k = 2.0 * nf + 1.0;
            let coef = (ipt * (nf * (nf + 1.0))).exp() * if n % 2 == 0 { 1.0 } else { -1.0 };
            let (sn, cs) = ((k * v).sin(), (k * v).cos());
            s.s0 += coef * sn;
            s.s1 += coef * k * cs;
            s.s2 -= coef * k * k * sn;
            s.s3 -= coef * k * k * k * cs;
        }
        s
    }

    fn wp_reduced(&self, z0: C64) -> C64 {
        let c = PI / (2.0 * self.w1);
        let s = self.sums(c * z0);
        let l1 = s.s1 / s.s0;
        -self.e1 / self.w1 - c * c * (s.s2 / s.s0 - l1 * l1)
    }

    fn wp_prime_reduced(&self, z0: C64) -> C64 {
        let c = PI / (2.0 * self.w1);
        let s = self.sums(c * z0);
        let l1 = s.s1 / s.s0;
        let l2 = s.s2 / s.s0;
        -c * c * c * (s.s3 / s.s0 - 3.0 * l1 * l2 + 2.0 * l1 * l1 * l1)
    }

    fn zeta_reduced(&self, z0: C64) -> C64 {
        let c = PI / (2.0 * self.w1);
        let s = self.sums(c * z0);
        self.e1 * z0 / self.w1 + c * s.s1 / s.s0
    }

    fn ln_sigma_reduced(&self, z0: C64) -> C64 {
        let c = PI / (2.0 * self.w1);
        let s = self.sums(c * z0);
        (1.0 / c).ln() + self.e1 * z0 * z0 / (2.0 * self.w1) + s.s0.ln() - self.s1_zero.ln()
    }

    /// All four functions at z; ℘, ℘′ and ζ fail near lattice points.
    pub fn wp_family(&self, z: C64) -> Result<WpValues> {
        let (z0, m, n) = self.reduce(z);
        self.check_pole(z0)?;
        let c = PI / (2.0 * self.w1);
        let s = self.sums(c * z0);
        let l1 = s.s1 / s.s0;
        let l2 = s.s2 / s.s0;
        let wp = -self.e1 / self.w1 - c * c * (l2 - l1 * l1);
        let wp_prime = -c * c * c * (s.s3 / s.s0 - 3.0 * l1 * l2 + 2.0 * l1 * l1 * l1);
        let shift = 2.0 * m * self.e1 + 2.0 * n * self.e2;
        let zeta = self.e1 * z0 / self.w1 + c * l1 + shift;
        let sigma = self.sigma_from(z0, m, n);
        Ok(WpValues { wp, wp_prime, zeta, sigma })
    }

    fn ln_sigma_from(&self, z0: C64, m: f64, n: f64) -> C64 {
        let shift = 2.0 * m * self.e1 + 2.0 * n * self.e2;
        let sign = C64::new(0.0, PI * (m + n + m * n));
        self.ln_sigma_reduced(z0) + shift * (z0 + m * self.w1 + n * self.w2) + sign
    }

    fn sigma_from(&self, z0: C64, m: f64, n: f64) -> C64 {
        if z0.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.ln_sigma_from(z0, m, n).exp()
    }

    /// Branch of log σ(z), continuous on the reduced parallelogram.
    pub fn ln_sigma(&self, z: C64) -> Result<C64> {
        let (z0, m, n) = self.reduce(z);
        self.check_pole(z0)?;
        Ok(self.ln_sigma_from(z0, m, n))
    }
}

impl Weierstrass for Lattice {
    fn wp(&self, z: C64) -> Result<C64> {
        let (z0, _, _) = self.reduce(z);
        self.check_pole(z0)?;
        Ok(self.wp_reduced(z0))
    }
    fn wp_prime(&self, z: C64) -> Result<C64> {
        let (z0, _, _) = self.reduce(z);
        self.check_pole(z0)?;
        Ok(self.wp_prime_reduced(z0))
    }
    fn zeta(&self, z: C64) -> Result<C64> {
        let (z0, m, n) = self.reduce(z);
        self.check_pole(z0)?;
        Ok(self.zeta_reduced(z0) + 2.0 * m * self.e1 + 2.0 * n * self.e2)
    }
    fn sigma(&self, z: C64) -> C64 {
        let (z0, m, n) = self.reduce(z);
        self.sigma_from(z0, m, n)
    }
    fn omega1(&self) -> f64 {
        self.omega1
    }
    fn eta1(&self) -> f64 {
        self.eta1
    }
    fn invariants(&self) -> (f64, f64) {
        (self.g2, self.g3)
    }
}

/// Solve z = s·a + t·b for real s, t.
fn solve2(a: C64, b: C64, z: C64) -> (f64, f64) {
    let det = a.re * b.im - a.im * b.re;
    let s = (z.re * b.im - z.im * b.re) / det;
    let t = (a.re * z.im - a.im * z.re) / det;
    (s, t)
}

/// SL₂(ℤ)-reduce (w₁, w₂) so that τ = w₂/w₁ lies in the fundamental domain.
fn reduce_basis(mut w1: C64, mut w2: C64) -> (C64, C64) {
    if (w2 / w1).im < 0.0 {
        w2 = -w2;
    }
    for _ in 0..100 {
        let tau = w2 / w1;
        let k = tau.re.round();
        w2 -= k * w1;
        let tau = w2 / w1;
        if tau.norm_sqr() < 1.0 - 1e-12 {
            let t = w1;
            w1 = w2;
            w2 = -t;
        } else {
            break;
        }
    }
    (w1, w2)
}

/// Trigonometric limit of the elliptic functions along g₂ = 12a², g₃ = 8a³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateLattice {
    pub a: f64,
}

/// Output of [`degenerate_family`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateValues {
    pub wp_inf: C64,
    pub zeta_inf: C64,
    pub omega1: f64,
    pub eta1: f64,
}

impl DegenerateLattice {
    pub fn new(a: f64) -> Result<DegenerateLattice> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::OutOfRange(format!("degenerate family needs a > 0, got {a}")));
        }
        Ok(DegenerateLattice { a })
    }

    /// Parameter a for the induced invariants of n lobes on the unit sphere.
    pub fn for_lobes(n: u32) -> DegenerateLattice {
        DegenerateLattice { a: (n * n) as f64 / 12.0 }
    }

    pub fn g2(&self) -> f64 {
        12.0 * self.a * self.a
    }

    pub fn g3(&self) -> f64 {
        8.0 * self.a * self.a * self.a
    }

    pub fn disc(&self) -> f64 {
        discriminant(self.g2(), self.g3())
    }

    fn k(&self) -> f64 {
        (3.0 * self.a).sqrt()
    }

    fn check(&self, z: C64) -> Result<C64> {
        let s = (self.k() * z).sin();
        let d = s.norm() / self.k();
        if d < POLE_TOLERANCE {
            return Err(Error::Pole { distance: d });
        }
        Ok(s)
    }
}

impl Weierstrass for DegenerateLattice {
    fn wp(&self, z: C64) -> Result<C64> {
        let s = self.check(z)?;
        Ok(-self.a + 3.0 * self.a / (s * s))
    }
    fn wp_prime(&self, z: C64) -> Result<C64> {
        let s = self.check(z)?;
        let c = (self.k() * z).cos();
        Ok(-6.0 * self.a * self.k() * c / (s * s * s))
    }
    fn zeta(&self, z: C64) -> Result<C64> {
        let s = self.check(z)?;
        Ok(self.a * z + self.k() * (self.k() * z).cos() / s)
    }
    fn sigma(&self, z: C64) -> C64 {
        (0.5 * self.a * z * z).exp() * (self.k() * z).sin() / self.k()
    }
    fn omega1(&self) -> f64 {
        PI / (12.0 * self.a).sqrt()
    }
    fn eta1(&self) -> f64 {
        self.a * PI / (12.0 * self.a).sqrt()
    }
    fn invariants(&self) -> (f64, f64) {
        (self.g2(), self.g3())
    }
}

/// The displayed limits ℘∞, ζ∞, ω₁, η₁ at one point.
pub fn degenerate_family(a: f64, z: C64) -> Result<DegenerateValues> {
    let d = DegenerateLattice::new(a)?;
    Ok(DegenerateValues { wp_inf: d.wp(z)?, zeta_inf: d.zeta(z)?, omega1: d.omega1(), eta1: d.eta1() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn frozen_periods_rectangular() {
        // mpmath, 30 digits
        let l = Lattice::from_invariants(1.0, 0.1).unwrap();
        assert_eq!(l.shape, LatticeShape::Rectangular);
        assert!((l.omega1 - 1.752925306636496).abs() < 1e-13);
        assert!((l.omega3.im - 2.036_548_674_809_31).abs() < 1e-13);
        assert!((l.eta1 - 0.461572873809836).abs() < 1e-12);
        assert!(l.legendre_defect().norm() < 1e-12);
    }

    #[test]
    fn rhombic_legendre_index_two() {
        let l = Lattice::from_invariants(-2.0, 1.0).unwrap();
        assert_eq!(l.shape, LatticeShape::Rhombic);
        assert!((l.omega1 - 1.684331987057354).abs() < 1e-13);
        assert!(l.legendre_defect().norm() < 1e-11);
        assert!(l.legendre_residual() < 1e-12);
    }

    #[test]
    fn half_periods_hit_the_roots() {
        let l = Lattice::from_invariants(1.0, 0.1).unwrap();
        let CubicRoots::Real([e1, _, e3]) = l.roots() else { panic!() };
        assert!((l.wp(c(l.omega1, 0.0)).unwrap().re - e1).abs() < 1e-11);
        assert!((l.wp(l.omega3).unwrap().re - e3).abs() < 1e-11);
        assert!(l.wp_prime(c(l.omega1, 0.0)).unwrap().norm() < 1e-10);
    }

    #[test]
    fn laurent_head_near_origin() {
        let l = Lattice::from_invariants(1.0, 0.1).unwrap();
        let z = c(1e-3, 2e-3);
        let lead = 1.0 / (z * z) + l.g2 / 20.0 * z * z;
        assert!((l.wp(z).unwrap() - lead).norm() < 1e-8);
        assert!((l.sigma(z) - z).norm() < 1e-12);
    }

    #[test]
    fn pole_reports_distance() {
        let l = Lattice::from_invariants(1.0, 0.1).unwrap();
        let z = c(2.0 * l.omega1 + 1e-13, 0.0);
        match l.wp(z) {
            Err(Error::Pole { distance }) => assert!(distance < 1e-12),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_constants() {
        let d = DegenerateLattice::for_lobes(2);
        assert!((d.omega1() - PI / 2.0).abs() < 1e-15);
        assert!((d.eta1() - PI / 6.0).abs() < 1e-15);
        assert!(d.disc().abs() < 1e-15);
    }

    #[test]
    fn cubic_roots_residual() {
        for &(g2, g3) in &[(1.0, 0.1), (-2.0, 1.0), (0.5, -0.3), (4.0, 0.0)] {
            let rs: Vec<C64> = match cubic_roots(g2, g3) {
                CubicRoots::Real(r) => r.iter().map(|&x| c(x, 0.0)).collect(),
                CubicRoots::OneReal { e, pair } => vec![c(e, 0.0), pair, pair.conj()],
            };
            for r in rs {
                assert!((4.0 * r * r * r - g2 * r - g3).norm() < 1e-12);
            }
        }
    }
}
