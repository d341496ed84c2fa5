use std::f64::consts::PI;

use cwtori::weierstrass::{degenerate_family, DegenerateLattice, Lattice, LatticeShape, Weierstrass};
use cwtori::{Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// ∫₁^∞ dt/√(4t³ − 4t) = ∫₀^{π/2} dφ/√(1 + cos²φ), trapezoid (exponentially convergent).
fn lemniscatic_oracle() -> f64 {
    let n = 400;
    let h = PI / 2.0 / n as f64;
    let f = |p: f64| 1.0 / (1.0 + p.cos().powi(2)).sqrt();
    let mut s = 0.5 * (f(0.0) + f(PI / 2.0));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h
}

#[test]
fn lemniscatic_half_period_matches_quadrature() {
    let l = Lattice::from_invariants(4.0, 0.0).unwrap();
    let oracle = lemniscatic_oracle();
    assert!((oracle - 1.311_028_777_146_06).abs() < 1e-14);
    assert!((l.omega1 - oracle).abs() < 1e-13);
    assert!((l.eta1 - 0.599070117367796).abs() < 1e-12);
}

#[test]
fn degenerate_invariants_rejected() {
    // n = 2 degenerate point (n⁴/12, n⁶/216)
    match Lattice::from_invariants(16.0 / 12.0, 64.0 / 216.0) {
        Err(Error::DegenerateLattice { .. }) => {}
        other => panic!("expected degenerate error, got {other:?}"),
    }
}

#[test]
fn homogeneity_of_periods() {
    let t: f64 = 2.0;
    let a = Lattice::from_invariants(1.0, 0.1).unwrap();
    let b = Lattice::from_invariants(t.powi(-4), 0.1 * t.powi(-6)).unwrap();
    assert!((b.omega1 - t * a.omega1).abs() < 1e-12);
    assert!((b.omega3 - t * a.omega3).norm() < 1e-12);
}

#[test]
fn parity_at_sample_point() {
    let l = Lattice::from_invariants(1.0, 0.1).unwrap();
    let z = c(0.3, 0.2);
    assert!((l.wp(-z).unwrap() - l.wp(z).unwrap()).norm() < 1e-13);
    assert!((l.zeta(-z).unwrap() + l.zeta(z).unwrap()).norm() < 1e-13);
    assert!((l.sigma(-z) + l.sigma(z)).norm() < 1e-13);
}

#[test]
fn near_degenerate_matches_trigonometric_limit() {
    let a = 1.0 / 3.0;
    for sign in [1.0, -1.0] {
        let d = 1.4e-11 * sign;
        let l = Lattice::from_invariants(12.0 * a * a * (1.0 + d), 8.0 * a * a * a).unwrap();
        assert!((l.disc.abs() - 1e-10).abs() < 1e-10);
        for z in [c(0.4, 0.1), c(0.9, -0.3), c(1.2, 0.05)] {
            let lim = degenerate_family(a, z).unwrap();
            assert!((l.wp(z).unwrap() - lim.wp_inf).norm() < 1e-4, "z={z}");
            assert!((l.zeta(z).unwrap() - lim.zeta_inf).norm() < 1e-4, "z={z}");
        }
        assert!((l.omega1 - PI / (12.0 * a).sqrt()).abs() < 1e-4);
        assert!((l.eta1 - a * PI / (12.0 * a).sqrt()).abs() < 1e-4);
    }
}

#[test]
fn degenerate_convergence_in_epsilon() {
    let a = 0.5;
    let z = c(0.7, 0.2);
    let lim = degenerate_family(a, z).unwrap();
    let mut errs = vec![];
    for eps in [1e-6, 1e-8] {
        let l = Lattice::from_invariants(12.0 * a * a + eps, 8.0 * a * a * a).unwrap();
        errs.push((l.wp(z).unwrap() - lim.wp_inf).norm());
    }
    assert!(errs[1] < errs[0], "{errs:?}");
    assert!(errs[1] < 1e-5);
}

#[test]
fn degenerate_family_odd_zeta_and_ode() {
    let d = DegenerateLattice::new(0.5).unwrap();
    let z = c(0.7, 0.0);
    assert!((d.zeta(-z).unwrap() + d.zeta(z).unwrap()).norm() < 1e-14);
    for z in [c(0.3, 0.1), c(0.7, -0.2), c(1.9, 0.4)] {
        let p = d.wp(z).unwrap();
        let dp = d.wp_prime(z).unwrap();
        let r = dp * dp - (4.0 * p * p * p - d.g2() * p - d.g3());
        assert!(r.norm() < 1e-10 * (1.0 + p.norm().powi(3)));
    }
    assert!(degenerate_family(0.5, c(0.0, 0.0)).is_err());
}

#[test]
fn wp_family_bundles_consistent_values() {
    let l = Lattice::from_invariants(-2.0, 1.0).unwrap();
    assert_eq!(l.shape, LatticeShape::Rhombic);
    let z = c(0.41, 0.73);
    let v = l.wp_family(z).unwrap();
    assert!((v.wp - l.wp(z).unwrap()).norm() < 1e-14);
    assert!((v.zeta - l.zeta(z).unwrap()).norm() < 1e-14);
    assert!((v.sigma - l.sigma(z)).norm() < 1e-14);
}

const GRID: [(f64, f64); 6] = [(1.0, 0.1), (4.0, 0.0), (-2.0, 1.0), (0.5, -0.3), (1.3384, 0.29), (3.0, -1.5)];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ode_residual(idx in 0usize..GRID.len(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let (g2, g3) = GRID[idx];
        let l = Lattice::from_invariants(g2, g3).unwrap();
        let z = c(x, y);
        prop_assume!(l.distance_to_lattice(z) > 0.05);
        let p = l.wp(z).unwrap();
        let dp = l.wp_prime(z).unwrap();
        let r = dp * dp - (4.0 * p * p * p - g2 * p - g3);
        prop_assert!(r.norm() < 1e-10 * (1.0 + p.norm().powi(3)), "residual {}", r.norm());
    }

    #[test]
    fn periodicity(idx in 0usize..GRID.len(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (g2, g3) = GRID[idx];
        let l = Lattice::from_invariants(g2, g3).unwrap();
        let z = c(x, y);
        prop_assume!(l.distance_to_lattice(z) > 0.05);
        let p = l.wp(z).unwrap();
        for shift in [c(2.0 * l.omega1, 0.0), 2.0 * l.omega3] {
            let q = l.wp(z + shift).unwrap();
            prop_assert!((q - p).norm() < 1e-10 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn zeta_derivative_is_minus_wp(idx in 0usize..GRID.len(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (g2, g3) = GRID[idx];
        let l = Lattice::from_invariants(g2, g3).unwrap();
        let z = c(x, y);
        prop_assume!(l.distance_to_lattice(z) > 0.1);
        let h = 2e-4;
        let f = |w: C64| l.zeta(w).unwrap();
        let d = (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h);
        let p = l.wp(z).unwrap();
        prop_assert!((d + p).norm() < 1e-8 * (1.0 + p.norm()), "{}", (d + p).norm());
    }

    #[test]
    fn log_sigma_derivative_is_zeta(idx in 0usize..GRID.len(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (g2, g3) = GRID[idx];
        let l = Lattice::from_invariants(g2, g3).unwrap();
        let z = c(x, y);
        prop_assume!(l.distance_to_lattice(z) > 0.1);
        let h = 2e-4;
        // differences of log σ relative to the centre, unwrapped across the branch cut
        let f0 = l.ln_sigma(z).unwrap();
        let f = |w: C64| {
            let d = l.ln_sigma(w).unwrap() - f0;
            C64::new(d.re, d.im - 2.0 * PI * (d.im / (2.0 * PI)).round())
        };
        let d = (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h);
        let zt = l.zeta(z).unwrap();
        prop_assert!((d - zt).norm() < 1e-8 * (1.0 + zt.norm()), "{}", (d - zt).norm());
    }

    #[test]
    fn legendre_holds(g2 in -4.0f64..4.0, g3 in -2.0f64..2.0) {
        let l = match Lattice::from_invariants(g2, g3) {
            Ok(l) => l,
            Err(Error::DegenerateLattice { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        prop_assert!(l.omega1 > 0.0 && l.omega3.re == 0.0 && l.omega3.im > 0.0);
        prop_assert!(l.legendre_defect().norm() < 1e-10, "{}", l.legendre_defect().norm());
    }
}
