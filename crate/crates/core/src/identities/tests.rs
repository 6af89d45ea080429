use super::*;
use crate::levy::ClaimComponent;

fn cl() -> LevyModel {
    LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).unwrap()
}

fn bpcl() -> LevyModel {
    LevyModel::brownian_perturbed_cl(1.5, 0.5, 1.0, &[ClaimComponent::new(1.0, 1.0)]).unwrap()
}

fn mixed_cl() -> LevyModel {
    LevyModel::cramer_lundberg(
        2.0,
        1.5,
        &[ClaimComponent::new(0.4, 0.7), ClaimComponent::new(0.6, 3.0)],
    )
    .unwrap()
}

fn piecewise(x: f64) -> TaxRule {
    TaxRule::new(x, &[(0.0, 0.2), (3.0, 0.5)]).unwrap()
}

fn exit(model: &LevyModel, rule: &TaxRule, q: f64, a: f64) -> f64 {
    let query = ExitQuery {
        model,
        rule,
        q,
        x: rule.base(),
        a,
    };
    two_sided_exit(&query, &QuadOptions::default()).unwrap()
}

#[test]
fn exit_degenerates_to_scale_ratio_without_tax() {
    for m in [cl(), bpcl(), mixed_cl()] {
        for &q in &[0.0, 0.05, 1.0] {
            let e = ScaleEngine::new(&m, q).unwrap();
            let rule = TaxRule::untaxed(1.5).unwrap();
            for &a in &[1.6, 3.0, 8.0] {
                let exact = e.w(1.5).unwrap() / e.w(a).unwrap();
                assert!((exit(&m, &rule, q, a) - exact).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn exit_matches_constant_rate_power_law() {
    for m in [cl(), bpcl()] {
        for &g in &[0.2, 0.5, 0.8] {
            let rule = TaxRule::constant(2.0, g).unwrap();
            let oracle = ConstantGammaOracle::new(&m, g, 2.0).unwrap();
            for &a in &[2.5, 5.0, 9.0] {
                assert!((exit(&m, &rule, 0.05, a) - oracle.exit(0.05, a).unwrap()).abs() < 1e-8);
            }
        }
    }
    // exponent 1/(1 − 0.5) = 2
    let m = cl();
    let zero = ConstantGammaOracle::new(&m, 0.0, 2.0).unwrap().exit(0.1, 4.0).unwrap();
    let half = ConstantGammaOracle::new(&m, 0.5, 2.0).unwrap().exit(0.1, 4.0).unwrap();
    assert!((half - zero * zero).abs() < 1e-15);
}

#[test]
fn exit_is_monotone() {
    let m = cl();
    let rule = piecewise(2.0);
    let mut prev = 1.0;
    for i in 1..20 {
        let v = exit(&m, &rule, 0.05, 2.0 + 0.4 * i as f64);
        assert!(v <= prev && v > 0.0);
        prev = v;
    }
    let mut prev = 0.0;
    for i in 0..10 {
        let x = 0.5 + 0.4 * i as f64;
        let v = exit(&m, &piecewise(x), 0.05, 5.0);
        assert!(v >= prev);
        prev = v;
    }
    let mut prev = 1.0;
    for &q in &[0.0, 0.01, 0.1, 0.5, 2.0] {
        let v = exit(&m, &rule, q, 5.0);
        assert!(v <= prev);
        prev = v;
    }
    let heavier = TaxRule::new(2.0, &[(0.0, 0.3), (3.0, 0.5)]).unwrap();
    assert!(exit(&m, &heavier, 0.05, 5.0) <= exit(&m, &rule, 0.05, 5.0));
}

#[test]
fn exit_limits() {
    let m = bpcl();
    let rule = piecewise(2.0);
    assert!(1.0 - exit(&m, &rule, 0.1, 2.0 + 1e-9) < 1e-6);
    assert!(exit(&m, &rule, 0.5, 60.0) < 1e-8);
}

#[test]
fn exit_rejects_bad_queries() {
    let m = cl();
    let rule = piecewise(2.0);
    let opts = QuadOptions::default();
    let q = |x, a| ExitQuery {
        model: &m,
        rule: &rule,
        q: 0.1,
        x,
        a,
    };
    assert!(matches!(two_sided_exit(&q(2.0, 2.0), &opts), Err(Error::Domain { .. })));
    assert!(matches!(two_sided_exit(&q(2.0, 1.0), &opts), Err(Error::Domain { .. })));
    assert!(matches!(
        two_sided_exit(&q(1.0, 3.0), &opts),
        Err(Error::Invalid { .. })
    ));
}

#[test]
fn npv_degenerations() {
    let m = cl();
    let opts = QuadOptions::default();
    assert_eq!(
        tax_npv(&m, &TaxRule::untaxed(2.0).unwrap(), 0.1, 2.0, &opts).unwrap(),
        0.0
    );
    for m in [cl(), bpcl()] {
        let oracle = ConstantGammaOracle::new(&m, 0.3, 2.0).unwrap().npv(0.1, &opts).unwrap();
        let general = tax_npv(&m, &TaxRule::constant(2.0, 0.3).unwrap(), 0.1, 2.0, &opts).unwrap();
        assert!((general - oracle).abs() < 1e-7, "{general} vs {oracle}");
    }
}

#[test]
fn npv_is_monotone_in_the_rate_and_bounded_by_gross_income() {
    let m = cl();
    let opts = QuadOptions::default();
    let mut prev = 0.0;
    for &g in &[0.1, 0.3, 0.5, 0.7] {
        let v = tax_npv(
            &m,
            &TaxRule::new(2.0, &[(0.0, 0.0), (3.0, g)]).unwrap(),
            0.1,
            2.0,
            &opts,
        )
        .unwrap();
        assert!(v > prev);
        prev = v;
    }
    // Tax can never exceed the discounted premium stream c/q.
    assert!(prev < 1.5 / 0.1);
}

#[test]
fn npv_at_zero_rate_needs_certain_ruin() {
    let opts = QuadOptions::default();
    let profitable = cl();
    let rule = TaxRule::constant(2.0, 0.3).unwrap();
    assert!(matches!(
        tax_npv(&profitable, &rule, 0.0, 2.0, &opts),
        Err(Error::Divergent { .. })
    ));
    let losing = LevyModel::cramer_lundberg_exp(0.8, 1.0, 1.0).unwrap();
    let v = tax_npv(&losing, &rule, 0.0, 2.0, &opts).unwrap();
    let oracle = ConstantGammaOracle::new(&losing, 0.3, 2.0)
        .unwrap()
        .npv(0.0, &opts)
        .unwrap();
    assert!(v.is_finite() && (v - oracle).abs() < 1e-7);
}

#[test]
fn gs_density_matches_constant_rate_form() {
    let opts = QuadOptions::default();
    for m in [cl(), bpcl()] {
        let rule = TaxRule::constant(2.0, 0.4).unwrap();
        let gs = GerberShiu::new(&m, &rule, 0.1, 0.3, &opts).unwrap();
        let oracle = ConstantGammaOracle::new(&m, 0.4, 2.0).unwrap();
        for &(t, y, z) in &[(2.0, 0.5, 0.1), (3.5, 3.0, 1.0), (7.0, 0.01, 4.0)] {
            let a = gs.density(t, y, z).unwrap();
            let b = oracle.gs_density(0.1, 0.3, t, y, z).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "{a} vs {b}");
        }
        for &t in &[2.0, 4.0, 9.0] {
            let a = gs.creep(t).unwrap();
            let b = oracle.gs_creep(0.1, 0.3, t).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
        }
    }
}

#[test]
fn gs_density_is_nonnegative_and_checks_domain() {
    let m = bpcl();
    let rule = piecewise(2.0);
    let gs = GerberShiu::new(&m, &rule, 0.1, 0.1, &QuadOptions::default()).unwrap();
    for i in 0..30 {
        let theta = 2.0 + 0.3 * i as f64;
        for j in 1..20 {
            let y = theta * j as f64 / 20.0;
            assert!(gs.bracket(theta, y).unwrap() >= -1e-12);
            assert!(gs.density(theta, y, 0.5).unwrap() >= -1e-12);
        }
        assert!(gs.creep(theta).unwrap() >= 0.0);
    }
    assert!(gs.density(3.0, 3.0, 1.0).is_err());
    assert!(gs.density(3.0, 1.0, 0.0).is_err());
    assert!(gs.density(1.0, 0.5, 1.0).is_err());
    let no_gauss = GerberShiu::new(&cl(), &rule, 0.1, 0.1, &QuadOptions::default()).unwrap();
    assert_eq!(no_gauss.creep(3.0).unwrap(), 0.0);
    assert_eq!(no_gauss.creep_mass((0.0, f64::INFINITY)).unwrap(), 0.0);
}

#[test]
fn excursion_mass_at_zero_rate_is_excursion_tail() {
    let opts = QuadOptions::with_tol(1e-12);
    for m in [cl(), bpcl(), mixed_cl()] {
        let e = ScaleEngine::new(&m, 0.0).unwrap();
        for &a in &[1.0, 2.0, 5.0] {
            let mass = excursion_mass(&e, a, &opts).unwrap();
            let tail = e.log_derivative(a).unwrap();
            assert!((mass.total() - tail).abs() <= 1e-6 * tail, "a={a}: {mass:?} vs {tail}");
            assert!(mass.creep >= 0.0 && mass.overshoot >= 0.0);
        }
    }
}

#[test]
fn bounded_variation_needs_the_atom() {
    let e = ScaleEngine::new(&cl(), 0.0).unwrap();
    let mass = excursion_mass(&e, 2.0, &QuadOptions::with_tol(1e-12)).unwrap();
    assert!(mass.atom > 1e-2);
    assert!((mass.overshoot - e.log_derivative(2.0).unwrap()).abs() > 1e-2);
}

#[test]
fn brownian_creep_term() {
    let m = LevyModel::brownian_drift(0.0, 2f64.sqrt()).unwrap();
    let e = ScaleEngine::new(&m, 1.0).unwrap();
    let v = excursion_creep_term(&e, 1.0).unwrap();
    assert!((v - 1.0 / 1f64.sinh()).abs() < 1e-12);
    assert_eq!(
        excursion_creep_term(&ScaleEngine::new(&cl(), 1.0).unwrap(), 1.0).unwrap(),
        0.0
    );
}

#[test]
fn untaxed_total_mass_is_ruin_transform() {
    // E_x[e^{−qτ_0^−}; τ_0^− < ∞] = Z^(q)(x) − (q/Φ(q)) W^(q)(x).
    let opts = QuadOptions::default();
    for m in [cl(), bpcl()] {
        let q = 0.1;
        let x = 2.0;
        let e = ScaleEngine::new(&m, q).unwrap();
        let z = 1.0
            + q * crate::quad::integrate(|u| e.w(u).unwrap(), 0.0, x, &[], &QuadOptions::with_tol(1e-13))
                .unwrap()
                .value;
        let expected = z - q / e.phi() * e.w(x).unwrap();
        let gs = GerberShiu::new(&m, &TaxRule::untaxed(x).unwrap(), q, q, &opts).unwrap();
        let total = gs.total_mass().unwrap();
        assert!((total - expected).abs() < 1e-7, "{total} vs {expected}");
    }
}

#[test]
fn rectangle_mass_matches_brute_quadrature() {
    let m = mixed_cl();
    let rule = piecewise(2.0);
    let opts = QuadOptions::with_tol(1e-10);
    let gs = GerberShiu::new(&m, &rule, 0.1, 0.2, &opts).unwrap();
    let region = GsRegion {
        theta: (2.0, 4.0),
        y: (0.0, 1.0),
        z: (0.0, 2.0),
    };
    let mass = gs.mass(&region).unwrap();
    let loose = QuadOptions::with_tol(1e-9);
    let brute = crate::quad::integrate(
        |t| {
            crate::quad::integrate(
                |y| {
                    if y >= t {
                        return 0.0;
                    }
                    crate::quad::integrate(|z| gs.density(t, y, z).unwrap(), 0.0, 2.0, &[], &loose)
                        .unwrap()
                        .value
                },
                0.0,
                1.0,
                &[],
                &loose,
            )
            .unwrap()
            .value
        },
        2.0,
        4.0,
        &rule.retained_breakpoints(),
        &loose,
    )
    .unwrap()
    .value;
    assert!((mass.overshoot - brute).abs() < 1e-7, "{} vs {brute}", mass.overshoot);
    // y ≤ 1 < θ, so the atom at y = θ is outside the box
    assert_eq!(mass.atom, 0.0);
}

#[test]
fn region_membership_is_half_open() {
    let r = GsRegion {
        theta: (2.0, 4.0),
        y: (0.0, 1.0),
        z: (0.0, 2.0),
    };
    assert!(r.contains(4.0, 1.0, 2.0));
    assert!(!r.contains(2.0, 0.5, 1.0));
    assert!(!r.contains(3.0, 0.0, 1.0));
}
