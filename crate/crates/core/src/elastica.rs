//! Constrained elastic curves on S²: the curvature equation
//! κ″ + ½κ³ + (μ + G/2)κ + λ = 0, its quartic first integral, the closed
//! form through ℘, and an independent ODE oracle.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, locate_event, Control, OdeOptions};
use crate::weierstrass::{discriminant, Lattice, Weierstrass, DEGENERACY_THRESHOLD};

/// Multipliers, integration constant, sphere curvature and initial curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub g: f64,
    pub kappa0: f64,
}

impl ElasticParams {
    /// Parameters with ν fixed so that κ₀ is a root of P₄.
    pub fn new(mu: f64, lambda: f64, g: f64, kappa0: f64) -> ElasticParams {
        let m = mu + 0.5 * g;
        let k2 = kappa0 * kappa0;
        let nu = -(0.25 * k2 * k2 + m * k2 + 2.0 * lambda * kappa0);
        ElasticParams { mu, lambda, nu, g, kappa0 }
    }

    /// μ + G/2.
    pub fn m(&self) -> f64 {
        self.mu + 0.5 * self.g
    }

    /// P₄(κ) = ¼κ⁴ + (μ + G/2)κ² + 2λκ + ν.
    pub fn p4(&self, k: f64) -> f64 {
        let k2 = k * k;
        0.25 * k2 * k2 + self.m() * k2 + 2.0 * self.lambda * k + self.nu
    }

    /// Right-hand side of the second-order curvature equation.
    pub fn kappa_second(&self, k: f64) -> f64 {
        -0.5 * k * k * k - self.m() * k - self.lambda
    }

    /// (κ′)² + P₄(κ); zero along solutions.
    pub fn first_integral(&self, k: f64, dk: f64) -> f64 {
        dk * dk + self.p4(k)
    }

    /// The same curve traversed with opposite orientation: (μ, −λ, ν, G, −κ₀).
    pub fn mirrored(&self) -> ElasticParams {
        ElasticParams { lambda: -self.lambda, kappa0: -self.kappa0, ..*self }
    }

    pub fn invariants(&self) -> (f64, f64) {
        invariants_from_params(self)
    }
}

/// Lattice invariants (g₂, g₃) of the curvature function.
pub fn invariants_from_params(p: &ElasticParams) -> (f64, f64) {
    let m = p.m();
    let g2 = m * m / 12.0 + p.nu / 4.0;
    let g3 = m * m * m / 216.0 + p.lambda * p.lambda / 16.0 - p.nu * m / 24.0;
    (g2, g3)
}

/// Qualitative type of the curvature orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitClass {
    /// D < 0: two simple real roots.
    Wavelike,
    /// |D| below the degeneracy threshold.
    Degenerate,
    /// D > 0.
    Orbitlike,
}

/// A real root of P₄ with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u32,
}

/// Sorted real roots of P₄ and the orbit class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarticRoots {
    pub roots: Vec<RealRoot>,
    pub class: OrbitClass,
}

impl QuarticRoots {
    /// Roots listed with multiplicity, ascending.
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity as usize)).collect()
    }
}

/// Real roots of P₄ (κ₀ of `p` is ignored), via companion-matrix eigenvalues and Newton polish.
pub fn quartic_real_roots(p: &ElasticParams) -> QuarticRoots {
    // κ⁴ + 4mκ² + 8λκ + 4ν
    let (c2, c1, c0) = (4.0 * p.m(), 8.0 * p.lambda, 4.0 * p.nu);
    let comp = Matrix4::new(0.0, 0.0, 0.0, -c0, 1.0, 0.0, 0.0, -c1, 0.0, 1.0, 0.0, -c2, 0.0, 0.0, 1.0, 0.0);
    let eig = comp.complex_eigenvalues();
    let scale = 1.0 + c2.abs().sqrt() + c1.abs().cbrt() + c0.abs().sqrt().sqrt();
    let f = |k: f64| k * k * k * k + c2 * k * k + c1 * k + c0;
    let df = |k: f64| 4.0 * k * k * k + 2.0 * c2 * k + c1;
    let mut real: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * scale)
        .map(|z| {
            let mut k = z.re;
            for _ in 0..8 {
                let d = df(k);
                if d.abs() < 1e-300 {
                    break;
                }
                let step = f(k) / d;
                let kn = k - step;
                if f(kn).abs() >= f(k).abs() {
                    break;
                }
                k = kn;
            }
            k
        })
        .collect();
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut roots: Vec<RealRoot> = Vec::new();
    for k in real {
        match roots.last_mut() {
            Some(last) if (k - last.value).abs() <= 1e-6 * scale => {
                let m = last.multiplicity as f64;
                last.value = (last.value * m + k) / (m + 1.0);
                last.multiplicity += 1;
            }
            _ => roots.push(RealRoot { value: k, multiplicity: 1 }),
        }
    }
    let (g2, g3) = invariants_from_params(p);
    let d = discriminant(g2, g3);
    let thr = DEGENERACY_THRESHOLD * (g2.abs().powi(3)).max(27.0 * g3 * g3);
    let class = if d.abs() <= thr {
        OrbitClass::Degenerate
    } else if d < 0.0 {
        OrbitClass::Wavelike
    } else {
        OrbitClass::Orbitlike
    };
    QuarticRoots { roots, class }
}

/// Solve ℘(x₀) = −(κ₀² + ⅔(μ + G/2))/8 for x₀ on the segment i(0, |ω₃|).
pub fn solve_x0(lat: &Lattice, p: &ElasticParams) -> Result<C64> {
    let target = -(p.kappa0 * p.kappa0 + 2.0 * p.m() / 3.0) / 8.0;
    let top = lat.omega3.im;
    let wp_at = |y: f64| -> Result<f64> { Ok(lat.wp(C64::new(0.0, y))?.re) };
    let hi_val = wp_at(top)?;
    if target >= hi_val {
        return Err(Error::NoRoot(format!(
            "x0: target {target} not below wp(omega3) = {hi_val} on the imaginary segment"
        )));
    }
    // ℘(iy) ≈ −1/y² near 0
    let mut lo = (0.5 / (target.abs() + 1.0).sqrt()).min(0.5 * top);
    while wp_at(lo)? > target {
        lo *= 0.5;
        if lo < 1e-12 * top {
            return Err(Error::NoRoot("x0 bracket".into()));
        }
    }
    let mut hi = top;
    while hi - lo > 1e-9 * top {
        let mid = 0.5 * (lo + hi);
        if wp_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton: d/dy ℘(iy) = i℘′(iy), real on the segment
    let mut y = 0.5 * (lo + hi);
    for _ in 0..6 {
        let z = C64::new(0.0, y);
        let f = lat.wp(z)?.re - target;
        let d = (C64::i() * lat.wp_prime(z)?).re;
        if d == 0.0 {
            break;
        }
        let yn = y - f / d;
        if !(yn > 0.0 && yn < top) {
            break;
        }
        let done = (yn - y).abs() < 1e-16 * top;
        y = yn;
        if done {
            break;
        }
    }
    Ok(C64::new(0.0, y))
}

/// Closed-form curvature κ(x) = ±√(−8Re℘(x + x₀) − ⅔(μ + G/2)) with sign tracking.
#[derive(Debug, Clone)]
pub struct KappaClosedForm {
    pub lattice: Lattice,
    pub params: ElasticParams,
    pub x0: C64,
    /// The other real root of P₄, reached at x = ω₁.
    pub kappa1: f64,
    /// First zero of κ in (0, ω₁) when κ changes sign.
    pub zero: Option<f64>,
}

impl KappaClosedForm {
    pub fn new(p: &ElasticParams) -> Result<KappaClosedForm> {
        let (g2, g3) = invariants_from_params(p);
        let lat = Lattice::from_invariants(g2, g3)?;
        let x0 = solve_x0(&lat, p)?;
        Self::with_lattice(lat, p, x0)
    }

    pub fn with_lattice(lat: Lattice, p: &ElasticParams, x0: C64) -> Result<KappaClosedForm> {
        let w1 = lat.omega1;
        let r_end = radicand(&lat, p, x0, w1)?;
        let roots = quartic_real_roots(p).values();
        // the other extreme of the orbit: the real root whose square matches R(ω₁)
        let kappa1 = roots
            .iter()
            .copied()
            .min_by(|a, b| {
                let da = (a * a - r_end).abs() + if (a - p.kappa0).abs() < 1e-9 { 1e9 } else { 0.0 };
                let db = (b * b - r_end).abs() + if (b - p.kappa0).abs() < 1e-9 { 1e9 } else { 0.0 };
                da.partial_cmp(&db).unwrap()
            })
            .unwrap_or(r_end.max(0.0).sqrt() * p.kappa0.signum());
        let zero = if kappa1 * p.kappa0 < 0.0 {
            // R′ = −8Re℘′ changes sign at the zero of κ
            let rp = |x: f64| -> Result<f64> { Ok(-8.0 * lat.wp_prime(C64::new(x, 0.0) + x0)?.re) };
            let (mut a, mut b) = (1e-9 * w1, w1 * (1.0 - 1e-9));
            let sa = rp(a)?.signum();
            if sa == rp(b)?.signum() {
                None
            } else {
                for _ in 0..200 {
                    let c = 0.5 * (a + b);
                    if rp(c)?.signum() == sa {
                        a = c;
                    } else {
                        b = c;
                    }
                    if b - a < 1e-15 * w1 {
                        break;
                    }
                }
                Some(0.5 * (a + b))
            }
        } else {
            None
        };
        Ok(KappaClosedForm { lattice: lat, params: *p, x0, kappa1, zero })
    }

    fn sign(&self, x: f64) -> f64 {
        let s0 = if self.params.kappa0 < 0.0 { -1.0 } else { 1.0 };
        match self.zero {
            Some(z1) => {
                let p = 2.0 * self.lattice.omega1;
                let xr = x.rem_euclid(p);
                if xr > z1 && xr < p - z1 {
                    -s0
                } else {
                    s0
                }
            }
            None => s0,
        }
    }

    /// Curvature at arclength x.
    pub fn kappa(&self, x: f64) -> Result<f64> {
        let r = radicand(&self.lattice, &self.params, self.x0, x)?;
        Ok(self.sign(x) * r.max(0.0).sqrt())
    }

    /// dκ/dx at arclength x.
    pub fn kappa_prime(&self, x: f64) -> Result<f64> {
        let k = self.kappa(x)?;
        let scale = self.params.kappa0.abs().max(self.kappa1.abs()).max(1e-300);
        if k.abs() > 1e-3 * scale {
            let d = self.lattice.wp_prime(C64::new(x, 0.0) + self.x0)?.re;
            return Ok(-4.0 * d / k);
        }
        // near κ = 0 use the first integral with the direction of travel
        let p = 2.0 * self.lattice.omega1;
        let xr = x.rem_euclid(p);
        let dir = (self.kappa1 - self.params.kappa0).signum() * if xr <= 0.5 * p { 1.0 } else { -1.0 };
        Ok(dir * (-self.params.p4(k)).max(0.0).sqrt())
    }

    /// Intrinsic period 2ω₁.
    pub fn period(&self) -> f64 {
        2.0 * self.lattice.omega1
    }
}

fn radicand(lat: &Lattice, p: &ElasticParams, x0: C64, x: f64) -> Result<f64> {
    let r = -8.0 * lat.wp(C64::new(x, 0.0) + x0)?.re - 2.0 * p.m() / 3.0;
    let scale = 1.0 + p.kappa0 * p.kappa0 + p.m().abs();
    if r < -1e-9 * scale {
        return Err(Error::NegativeRadicand { x, value: r });
    }
    Ok(r)
}

/// κ(x) from the closed form with the sign fixed by κ₀.
pub fn kappa_closed_form(x: f64, lat: &Lattice, p: &ElasticParams, x0: C64) -> Result<f64> {
    KappaClosedForm::with_lattice(lat.clone(), p, x0)?.kappa(x)
}

/// A point on a curvature trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub x: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
}

/// ODE trajectory of the curvature with its certificates.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileOde {
    pub samples: Vec<CurvatureSample>,
    /// First return of (κ, κ′) to (κ₀, 0), if seen.
    pub period: Option<f64>,
    /// max |(κ′)² + P₄(κ)| over accepted steps.
    pub drift: f64,
}

impl ProfileOde {
    pub fn period(&self, span: f64) -> Result<f64> {
        self.period.ok_or(Error::NoReturn { span })
    }
}

/// Integrate κ″ = −½κ³ − (μ + G/2)κ − λ from (κ₀, 0) over [0, span], sampling `n` uniform points.
pub fn integrate_profile_ode(p: &ElasticParams, span: f64, n: usize, opts: &OdeOptions) -> Result<ProfileOde> {
    let pp = *p;
    let rhs = move |_: f64, y: &[f64; 2]| [y[1], pp.kappa_second(y[0])];
    let scale = 1.0 + p.kappa0.abs();
    let mut samples = Vec::with_capacity(n);
    let ts: Vec<f64> = (0..n).map(|i| span * i as f64 / (n.max(2) - 1) as f64).collect();
    let mut idx = 0;
    if n > 0 {
        samples.push(CurvatureSample { x: 0.0, kappa: p.kappa0, kappa_prime: 0.0 });
        idx = 1;
    }
    let mut drift: f64 = 0.0;
    let mut period = None;
    let mut prev_dk_sign = 0.0;
    integrate(rhs, 0.0, [p.kappa0, 0.0], span, opts, |st| {
        drift = drift.max(p.first_integral(st.y1[0], st.y1[1]).abs());
        while idx < ts.len() && ts[idx] <= st.t1 {
            let y = if ts[idx] == st.t1 { st.y1 } else { st.eval(ts[idx]) };
            samples.push(CurvatureSample { x: ts[idx], kappa: y[0], kappa_prime: y[1] });
            idx += 1;
        }
        if period.is_none() {
            let s1 = st.y1[1].signum();
            if prev_dk_sign != 0.0 && s1 != prev_dk_sign && st.y1[1] != 0.0 {
                if let Some((t, y)) = locate_event(st, |_, y| y[1]) {
                    if (y[0] - p.kappa0).abs() < 1e-3 * scale && t > 1e-9 {
                        period = Some(t);
                    }
                }
            }
            if st.y1[1] != 0.0 {
                prev_dk_sign = s1;
            }
        }
        Control::Continue
    })?;
    Ok(ProfileOde { samples, period, drift })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_invariants_for_two_lobes() {
        let n: f64 = 2.0;
        let p = ElasticParams { mu: n * n - 0.5, lambda: 0.0, nu: 0.0, g: 1.0, kappa0: 0.0 };
        let (g2, g3) = invariants_from_params(&p);
        assert!((g2 - n.powi(4) / 12.0).abs() < 1e-15);
        assert!((g3 - n.powi(6) / 216.0).abs() < 1e-15);
    }

    #[test]
    fn double_root_at_zero_when_degenerate() {
        let p = ElasticParams { mu: 3.5, lambda: 0.0, nu: 0.0, g: 1.0, kappa0: 0.0 };
        let r = quartic_real_roots(&p);
        assert_eq!(r.class, OrbitClass::Degenerate);
        assert_eq!(r.roots.len(), 1);
        assert!(r.roots[0].value.abs() < 1e-6 && r.roots[0].multiplicity == 2);
    }

    #[test]
    fn wavelike_has_two_real_roots() {
        let p = ElasticParams::new(3.5, -0.05, 1.0, 0.03);
        let r = quartic_real_roots(&p);
        assert_eq!(r.class, OrbitClass::Wavelike);
        assert_eq!(r.values().len(), 2);
        for k in r.values() {
            assert!(p.p4(k).abs() < 1e-10);
        }
        assert!((r.values()[1] - 0.03).abs() < 1e-12);
    }
}
