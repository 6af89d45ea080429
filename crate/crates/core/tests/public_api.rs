//! End-to-end use of the public API on models outside the verification
//! suite: a two-component claim mixture and a perturbed model.

use taxed_ruin::identities::{
    gerber_shiu_creep, gerber_shiu_density, tax_npv, two_sided_exit, ConstantGammaOracle, ExitQuery, GerberShiu,
    GerberShiuQuery, GsRegion,
};
use taxed_ruin::montecarlo::{estimate_exit, estimate_gs_masses, estimate_npv, GsTarget, SimConfig};
use taxed_ruin::quad::QuadOptions;
use taxed_ruin::{ClaimComponent, Error, LevyModel, TaxRule};

fn mixture() -> LevyModel {
    LevyModel::cramer_lundberg(
        2.0,
        1.2,
        &[ClaimComponent::new(0.3, 0.5), ClaimComponent::new(0.7, 4.0)],
    )
    .unwrap()
}

fn perturbed() -> LevyModel {
    LevyModel::brownian_perturbed_cl(1.5, 0.4, 1.0, &[ClaimComponent::new(1.0, 1.5)]).unwrap()
}

fn three_rates(x: f64) -> TaxRule {
    TaxRule::new(x, &[(0.0, 0.1), (2.5, 0.35), (4.0, 0.6)]).unwrap()
}

fn within(est: &taxed_ruin::montecarlo::Estimate, exact: f64) {
    let tol = 4.0 * est.std_error + est.bias_bound;
    assert!(
        (est.mean - exact).abs() <= tol,
        "MC {} ± {} vs {exact}",
        est.mean,
        est.std_error
    );
}

#[test]
fn mixture_exit_and_npv_agree_with_simulation() {
    let (m, x) = (mixture(), 1.5);
    let rule = three_rates(x);
    let opts = QuadOptions::default();
    let mut cfg = SimConfig::new(40_000, 99);
    cfg.horizon = 300.0;

    let exact = two_sided_exit(
        &ExitQuery {
            model: &m,
            rule: &rule,
            q: 0.1,
            x,
            a: 5.0,
        },
        &opts,
    )
    .unwrap();
    within(&estimate_exit(&m, &rule, 0.1, 5.0, &cfg).unwrap(), exact);

    let npv = tax_npv(&m, &rule, 0.1, x, &opts).unwrap();
    within(&estimate_npv(&m, &rule, 0.1, &cfg).unwrap(), npv);
}

#[test]
fn mixture_ruin_masses_agree_with_simulation() {
    let (m, x) = (mixture(), 1.5);
    let rule = three_rates(x);
    let gs = GerberShiu::new(&m, &rule, 0.05, 0.2, &QuadOptions::default()).unwrap();
    let region = GsRegion {
        theta: (1.5, 3.0),
        y: (0.5, f64::INFINITY),
        z: (0.0, 1.0),
    };
    let mut cfg = SimConfig::new(40_000, 5);
    cfg.horizon = 400.0;
    let est = estimate_gs_masses(&m, &rule, 0.05, 0.2, &[GsTarget::Jump(region), GsTarget::AnyRuin], &cfg).unwrap();
    within(&est[0], gs.mass(&region).unwrap().total());
    within(&est[1], gs.total_mass().unwrap());
}

#[test]
fn perturbed_exit_is_close_to_euler_estimate() {
    let (m, x) = (perturbed(), 2.0);
    let rule = three_rates(x);
    let exact = two_sided_exit(
        &ExitQuery {
            model: &m,
            rule: &rule,
            q: 0.05,
            x,
            a: 4.5,
        },
        &QuadOptions::default(),
    )
    .unwrap();
    let mut cfg = SimConfig::new(20_000, 3);
    cfg.step = 2e-3;
    let est = estimate_exit(&m, &rule, 0.05, 4.5, &cfg).unwrap();
    // grid-resolved passage times leave a small O(h) bias on top of the noise
    assert!(
        (est.mean - exact).abs() <= 4.0 * est.std_error + 0.02,
        "{} vs {exact}",
        est.mean
    );
}

#[test]
fn single_point_functions_match_the_oracle() {
    let (m, x, g) = (perturbed(), 2.0, 0.25);
    let rule = TaxRule::constant(x, g).unwrap();
    let opts = QuadOptions::with_tol(1e-11);
    let oracle = ConstantGammaOracle::new(&m, g, x).unwrap();
    for (theta, y, z) in [(2.0, 0.5, 0.3), (3.5, 3.0, 1.0), (6.0, 0.1, 4.0)] {
        let q = GerberShiuQuery {
            model: &m,
            rule: &rule,
            alpha: 0.1,
            beta: 0.3,
            x,
            theta,
            y,
            z,
        };
        let d = gerber_shiu_density(&q, &opts).unwrap();
        let o = oracle.gs_density(0.1, 0.3, theta, y, z).unwrap();
        assert!((d - o).abs() <= 1e-8 * o.abs().max(1e-3), "{d} vs {o}");
        let c = gerber_shiu_creep(&m, &rule, 0.1, 0.3, x, theta, &opts).unwrap();
        let oc = oracle.gs_creep(0.1, 0.3, theta).unwrap();
        assert!((c - oc).abs() <= 1e-8 * oc, "{c} vs {oc}");
    }
}

#[test]
fn invalid_queries_are_reported_not_guessed() {
    let m = mixture();
    let rule = three_rates(1.5);
    let opts = QuadOptions::default();
    let exit = |x: f64, a: f64| {
        two_sided_exit(
            &ExitQuery {
                model: &m,
                rule: &rule,
                q: 0.1,
                x,
                a,
            },
            &opts,
        )
    };
    assert!(matches!(exit(1.5, 1.0), Err(Error::Domain { .. })));
    assert!(matches!(exit(2.0, 5.0), Err(Error::Invalid { .. })));
    assert!(matches!(
        tax_npv(&m, &rule, -0.1, 1.5, &opts),
        Err(Error::Domain { .. })
    ));
    assert!(matches!(
        tax_npv(&m, &rule, 0.0, 1.5, &opts),
        Err(Error::Divergent { .. })
    ));
    assert!(LevyModel::cramer_lundberg(1.0, 1.0, &[ClaimComponent::new(0.5, 1.0)]).is_err());
}
