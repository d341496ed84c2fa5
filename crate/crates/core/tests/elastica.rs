use cwtori::elastica::{
    integrate_profile_ode, invariants_from_params, kappa_closed_form, quartic_real_roots, solve_x0, ElasticParams,
    KappaClosedForm, OrbitClass,
};
use cwtori::ode::OdeOptions;
use cwtori::weierstrass::{discriminant, Lattice};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parameter grid around the two-lobe degenerate point used by the oracle comparisons.
fn wavelike_grid() -> Vec<ElasticParams> {
    let mut out = vec![];
    for i in 0..5 {
        for j in 0..5 {
            let mu = 3.3 + 0.1 * i as f64;
            let lambda = -0.02 - 0.015 * j as f64;
            out.push(ElasticParams::new(mu, lambda, 1.0, 0.03));
        }
    }
    out
}

#[test]
fn discriminant_sign_matches_exact_rational_expansion() {
    // (μ, λ, ν, G) = (7/2, −1/10, 1/50, 1)
    let p = ElasticParams { mu: 3.5, lambda: -0.1, nu: 0.02, g: 1.0, kappa0: 0.0 };
    let (g2, g3) = invariants_from_params(&p);
    let m = rat(7, 2) + rat(1, 2);
    let (lam, nu) = (rat(-1, 10), rat(1, 50));
    let g2e = &m * &m / rat(12, 1) + &nu / rat(4, 1);
    let g3e = &m * &m * &m / rat(216, 1) + &lam * &lam / rat(16, 1) - &nu * &m / rat(24, 1);
    let de = &g2e * &g2e * &g2e - rat(27, 1) * &g3e * &g3e;
    let d = discriminant(g2, g3);
    let de_f = rational_to_f64(&de);
    assert!((d - de_f).abs() < 1e-14, "{d} vs {de_f}");
    // exact arithmetic puts this point on the orbitlike side
    assert!(de > rat(0, 1));
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let scale = BigInt::from(10).pow(30);
    let q: BigInt = (r * BigRational::from_integer(scale.clone())).to_integer();
    q.to_string().parse::<f64>().unwrap() / 1e30
}

#[test]
fn zero_multipliers_give_zero_discriminant() {
    for (mu, g) in [(3.5, 1.0), (0.7, 2.0), (-0.2, 0.5)] {
        let p = ElasticParams { mu, lambda: 0.0, nu: 0.0, g, kappa0: 0.0 };
        let (g2, g3) = invariants_from_params(&p);
        assert!(discriminant(g2, g3).abs() < 1e-14 * (1.0 + g2.abs().powi(3)));
    }
}

#[test]
fn closed_form_initial_values() {
    let p = ElasticParams::new(3.5, -0.05, 1.0, 0.03);
    let k = KappaClosedForm::new(&p).unwrap();
    assert!((k.kappa(0.0).unwrap() - 0.03).abs() < 1e-10);
    let h = 1e-5;
    let d = (k.kappa(h).unwrap() - k.kappa(-h).unwrap()) / (2.0 * h);
    assert!(d.abs() < 1e-8);
    // the free function agrees with the cached form
    let x = 0.37;
    let v = kappa_closed_form(x, &k.lattice, &p, k.x0).unwrap();
    assert!((v - k.kappa(x).unwrap()).abs() < 1e-15);
}

#[test]
fn x0_solves_its_constraint() {
    let p = ElasticParams::new(3.5, -0.05, 1.0, 0.03);
    let (g2, g3) = p.invariants();
    let lat = Lattice::from_invariants(g2, g3).unwrap();
    let x0 = solve_x0(&lat, &p).unwrap();
    use cwtori::weierstrass::Weierstrass;
    let target = -(p.kappa0 * p.kappa0 + 2.0 * p.m() / 3.0) / 8.0;
    assert!((lat.wp(x0).unwrap().re - target).abs() < 1e-12);
    assert!(x0.re == 0.0 && x0.im > 0.0 && x0.im < lat.omega3.im);
}

#[test]
fn closed_form_matches_ode_on_grid() {
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-14, ..Default::default() };
    for p in wavelike_grid() {
        assert_eq!(quartic_real_roots(&p).class, OrbitClass::Wavelike, "{p:?}");
        let k = KappaClosedForm::new(&p).unwrap();
        let period = k.period();
        let ode = integrate_profile_ode(&p, period, 201, &opts).unwrap();
        let mut err: f64 = 0.0;
        for s in &ode.samples {
            err = err.max((s.kappa - k.kappa(s.x).unwrap()).abs());
            err = err.max((s.kappa_prime - k.kappa_prime(s.x).unwrap()).abs());
        }
        assert!(err < 1e-7, "{p:?}: {err:e}");
    }
}

#[test]
fn drift_and_period_over_ten_periods() {
    let p = ElasticParams::new(3.5, -0.05, 1.0, 0.03);
    let k = KappaClosedForm::new(&p).unwrap();
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-14, ..Default::default() };
    let ode = integrate_profile_ode(&p, 10.0 * k.period(), 11, &opts).unwrap();
    assert!(ode.drift < 1e-9, "{:e}", ode.drift);
    let t = ode.period(10.0 * k.period()).unwrap();
    assert!((t - 2.0 * k.lattice.omega1).abs() < 1e-8, "{t} vs {}", 2.0 * k.lattice.omega1);
}

#[test]
fn degenerate_data_keeps_constant_curvature() {
    let p = ElasticParams { mu: 3.5, lambda: 0.0, nu: 0.0, g: 1.0, kappa0: 0.0 };
    let ode = integrate_profile_ode(&p, 20.0, 101, &OdeOptions::default()).unwrap();
    assert!(ode.samples.iter().all(|s| s.kappa == 0.0 && s.kappa_prime == 0.0));
    assert!(ode.period(20.0).is_err());
}

#[test]
fn sign_changing_curvature_is_tracked() {
    // small κ₀ with a negative second root: κ crosses zero twice per period
    let p = ElasticParams::new(3.5, -0.02, 1.0, 0.03);
    let k = KappaClosedForm::new(&p).unwrap();
    assert!(k.zero.is_some() && k.kappa1 < 0.0);
    let ode = integrate_profile_ode(&p, k.period(), 101, &OdeOptions::default()).unwrap();
    for s in &ode.samples {
        assert!((s.kappa - k.kappa(s.x).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn parameter_derivative_converges_at_second_order() {
    // central differences in μ: error ratio ≈ 4 under halving (analytic dependence)
    let base = ElasticParams::new(3.5, -0.05, 1.0, 0.03);
    let x = 0.8;
    let f = |mu: f64| {
        let p = ElasticParams::new(mu, base.lambda, 1.0, base.kappa0);
        KappaClosedForm::new(&p).unwrap().kappa(x).unwrap()
    };
    let d = |h: f64| (f(3.5 + h) - f(3.5 - h)) / (2.0 * h);
    let (d1, d2, d3) = (d(0.04), d(0.02), d(0.01));
    let ratio = (d1 - d2) / (d2 - d3);
    assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mirrored_parameters_negate_curvature(mu in 3.2f64..3.8, lambda in -0.08f64..-0.01, k0 in 0.01f64..0.06) {
        let p = ElasticParams::new(mu, lambda, 1.0, k0);
        let q = p.mirrored();
        let opts = OdeOptions::default();
        let a = integrate_profile_ode(&p, 3.0, 31, &opts).unwrap();
        let b = integrate_profile_ode(&q, 3.0, 31, &opts).unwrap();
        for (s, t) in a.samples.iter().zip(&b.samples) {
            prop_assert!((s.kappa + t.kappa).abs() < 1e-10);
        }
    }

    #[test]
    fn roots_have_small_residual(mu in 2.0f64..5.0, lambda in -0.2f64..0.0, k0 in -0.3f64..0.3) {
        let p = ElasticParams::new(mu, lambda, 1.0, k0);
        for k in quartic_real_roots(&p).values() {
            prop_assert!(p.p4(k).abs() < 1e-10);
        }
    }
}
