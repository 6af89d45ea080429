//! Analytic-versus-oracle checks behind the `verify` command.
//!
//! Each check produces rows of `(value, reference, tolerance)` and passes when
//! `|value − reference| ≤ tolerance`. Simulation checks use a tolerance of
//! three standard errors plus the censoring bias bound.

use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::identities::{
    excursion_mass, tax_npv, two_sided_exit, ConstantGammaOracle, ExitQuery, GerberShiu, GsRegion,
};
use crate::levy::{ClaimComponent, LevyModel};
use crate::montecarlo::{
    estimate_exit, estimate_gs_masses, estimate_npv, simulate_paths, Estimate, GsTarget, SimConfig,
};
use crate::quad::{try_integrate, QuadOptions};
use crate::scale::{ScaleEngine, ScaleFunction};
use crate::tax::TaxRule;

/// Column header of the report.
pub const REPORT_HEADER: &str = "check,anchor,value,reference,tolerance,status";

/// One row of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: String,
    pub anchor: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckOutcome {
    pub fn new(check: &str, anchor: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance;
        CheckOutcome {
            check: check.to_string(),
            anchor: anchor.into(),
            value,
            reference,
            tolerance,
            pass,
        }
    }

    fn simulated(check: &str, anchor: impl Into<String>, est: &Estimate, reference: f64) -> Self {
        Self::new(check, anchor, est.mean, reference, 3.0 * est.std_error + est.bias_bound)
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Writes the report as CSV with every number in 17 significant digits.
pub fn write_report<W: Write>(mut out: W, rows: &[CheckOutcome]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},\"{}\",{:.16e},{:.16e},{:.16e},{}",
            r.check,
            r.anchor.replace('"', "\"\""),
            r.value,
            r.reference,
            r.tolerance,
            r.status()
        )?;
    }
    Ok(())
}

/// Sample sizes and tolerances for a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Paths for the exact compound Poisson comparisons.
    pub paths: u64,
    /// Paths for the pathwise invariant checks.
    pub invariant_paths: u64,
    /// Paths per step size for the Euler convergence check.
    pub euler_paths: u64,
    /// Coarse Euler step; the fine step is half of it.
    pub euler_step: f64,
    pub quad: QuadOptions,
}

impl VerifyOptions {
    /// Full-size acceptance run.
    pub fn full(seed: u64) -> Self {
        VerifyOptions {
            seed,
            paths: 1_000_000,
            invariant_paths: 10_000,
            euler_paths: 1_000_000,
            euler_step: 0.1,
            quad: QuadOptions::default(),
        }
    }

    /// Small run for smoke tests; statistical checks are weaker.
    pub fn quick(seed: u64) -> Self {
        VerifyOptions {
            paths: 20_000,
            invariant_paths: 2_000,
            euler_paths: 20_000,
            euler_step: 0.2,
            ..Self::full(seed)
        }
    }
}

/// The reference compound Poisson model: premium 1.5, unit claim rate,
/// exponential claims of mean 1.
pub fn reference_model() -> LevyModel {
    LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).expect("valid reference model")
}

/// Reference model with a Gaussian component of volatility 0.5 added.
pub fn reference_gaussian_model() -> LevyModel {
    LevyModel::brownian_perturbed_cl(1.5, 0.5, 1.0, &[ClaimComponent::new(1.0, 1.0)]).expect("valid reference model")
}

/// Two-rate rule: 20% up to level 3, 50% above.
pub fn reference_rule(x: f64) -> TaxRule {
    TaxRule::new(x, &[(0.0, 0.2), (3.0, 0.5)]).expect("valid reference rule")
}

fn describe(model: &LevyModel) -> String {
    let claims: Vec<String> = model
        .claims()
        .iter()
        .map(|c| format!("{}:{}", c.weight, c.rate))
        .collect();
    format!(
        "{:?}(c={} sigma={} lambda={} claims=[{}])",
        model.variant(),
        model.drift(),
        model.sigma(),
        model.jump_rate(),
        claims.join(" ")
    )
}

fn max_rel(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    pairs
        .into_iter()
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max)
}

/// `∫₀^∞ e^{−λx} W(x) dx` by quadrature, truncated where the integrand has
/// decayed by `e^{−40}` relative to its growth rate `Φ(q)`.
pub fn numerical_laplace_transform(scale: &dyn ScaleFunction, lambda: f64) -> Result<f64> {
    let decay = lambda - scale.phi();
    let end = 40.0 / decay;
    let breaks: Vec<f64> = (1..64).map(|k| end * k as f64 / 64.0).collect();
    let opts = QuadOptions::with_tol(1e-13);
    Ok(try_integrate(|x| Ok((-lambda * x).exp() * scale.w(x)?), 0.0, end, &breaks, &opts)?.value)
}

/// Laplace transform of `W^(q)` against `1/(ψ(λ) − q)` at `λ = Φ(q) + 1`
/// and `Φ(q) + 3`.
pub fn laplace_round_trip(scale: &dyn ScaleFunction) -> Result<Vec<CheckOutcome>> {
    let model = scale.model();
    let q = scale.rate();
    let mut rows = Vec::new();
    for shift in [1.0, 3.0] {
        let lambda = scale.phi() + shift;
        let exact = 1.0 / (model.laplace_exponent(lambda)? - q);
        let numeric = numerical_laplace_transform(scale, lambda)?;
        rows.push(CheckOutcome::new(
            "laplace_round_trip",
            format!("Laplace transform of W^(q); {} q={q} lambda={lambda}", describe(model)),
            numeric,
            exact,
            1e-6 * exact.abs(),
        ));
    }
    Ok(rows)
}

fn catalog() -> Vec<LevyModel> {
    vec![
        reference_model(),
        LevyModel::brownian_drift(0.0, 2f64.sqrt()).expect("valid model"),
    ]
}

/// Laplace round trip for both catalog models at `q ∈ {0, 0.1, 1}`.
pub fn check_laplace(_: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut rows = Vec::new();
    for m in catalog() {
        for q in [0.0, 0.1, 1.0] {
            rows.extend(laplace_round_trip(&ScaleEngine::new(&m, q)?)?);
        }
    }
    Ok(rows)
}

/// `W^(q)(x) = e^{Φ(q)x} W_{Φ(q)}(x)` on `x = 0.5, 1, …, 10`.
pub fn check_tilting(_: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut rows = Vec::new();
    for m in catalog() {
        for q in [0.1, 1.0] {
            let direct = ScaleEngine::new(&m, q)?;
            let phi = direct.phi();
            let tilted = ScaleEngine::tilted(&m, phi, 0.0)?;
            let mut pairs = Vec::new();
            for k in 1..=20 {
                let x = 0.5 * k as f64;
                pairs.push(((phi * x).exp() * tilted.w(x)?, direct.w(x)?));
            }
            rows.push(CheckOutcome::new(
                "tilting_identity",
                format!(
                    "W^(q) = e^(Phi x) W_Phi, max rel. error over x in 0.5..10; {} q={q}",
                    describe(&m)
                ),
                max_rel(pairs),
                0.0,
                1e-8,
            ));
        }
    }
    Ok(rows)
}

/// Exit identity against the untaxed ratio and the constant-rate power law
/// on a 3×3 grid of `(x, a)`.
pub fn check_exit_degenerations(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let m = reference_model();
    let q = 0.05;
    let engine = ScaleEngine::new(&m, q)?;
    let grid: Vec<(f64, f64)> = [1.0, 2.0, 3.0]
        .iter()
        .flat_map(|&x| [x + 0.5, x + 2.0, x + 5.0].map(|a| (x, a)))
        .collect();
    let mut rows = Vec::new();
    for gamma in [0.0, 0.2, 0.5, 0.8] {
        let mut worst: f64 = 0.0;
        for &(x, a) in &grid {
            let rule = TaxRule::constant(x, gamma)?;
            let query = ExitQuery {
                model: &m,
                rule: &rule,
                q,
                x,
                a,
            };
            let general = two_sided_exit(&query, &opts.quad)?;
            let reference = if gamma == 0.0 {
                engine.w(x)? / engine.w(a)?
            } else {
                ConstantGammaOracle::new(&m, gamma, x)?.exit(q, a)?
            };
            worst = worst.max((general - reference).abs());
        }
        let (check, anchor) = if gamma == 0.0 {
            (
                "exit_untaxed",
                "exit identity vs W(x)/W(a), max abs. error on 3x3 grid".to_string(),
            )
        } else {
            (
                "exit_constant_rate",
                format!("exit identity vs (W(x)/W(a))^(1/(1-g)), g={gamma}, max abs. error on 3x3 grid"),
            )
        };
        rows.push(CheckOutcome::new(check, anchor, worst, 0.0, 1e-8));
    }
    Ok(rows)
}

/// Exit identity for the two-rate rule against exact simulation.
pub fn check_exit_simulation(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let (m, x, a, q) = (reference_model(), 2.0, 5.0, 0.05);
    let rule = reference_rule(x);
    let query = ExitQuery {
        model: &m,
        rule: &rule,
        q,
        x,
        a,
    };
    let analytic = two_sided_exit(&query, &opts.quad)?;
    let mut cfg = SimConfig::new(opts.paths, opts.seed);
    cfg.horizon = 400.0;
    let est = estimate_exit(&m, &rule, q, a, &cfg)?;
    Ok(vec![CheckOutcome::simulated(
        "exit_vs_simulation",
        format!("E[exp(-q tau_a); tau_a < tau_0], x={x} a={a} q={q}, {} paths", est.n),
        &est,
        analytic,
    )])
}

/// Tax present value: untaxed, constant rate and two-rate rule.
pub fn check_npv(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let (m, x, q) = (reference_model(), 2.0, 0.1);
    let mut rows = Vec::new();
    let zero = tax_npv(&m, &TaxRule::untaxed(x)?, q, x, &opts.quad)?;
    rows.push(CheckOutcome::new(
        "npv_untaxed",
        "tax NPV with zero rate",
        zero,
        0.0,
        0.0,
    ));

    let general = tax_npv(&m, &TaxRule::constant(x, 0.3)?, q, x, &opts.quad)?;
    let oracle = ConstantGammaOracle::new(&m, 0.3, x)?.npv(q, &opts.quad)?;
    rows.push(CheckOutcome::new(
        "npv_constant_rate",
        format!("tax NPV vs g/(1-g) int (W(x)/W(u))^(1/(1-g)) du, g=0.3 q={q}"),
        general,
        oracle,
        1e-7,
    ));

    let rule = reference_rule(x);
    let analytic = tax_npv(&m, &rule, q, x, &opts.quad)?;
    let mut cfg = SimConfig::new(opts.paths, opts.seed);
    cfg.horizon = 150.0;
    let est = estimate_npv(&m, &rule, q, &cfg)?;
    rows.push(CheckOutcome::simulated(
        "npv_vs_simulation",
        format!("E[int_0^tau_0 exp(-qt) g(S) dS], x={x} q={q}, {} paths", est.n),
        &est,
        analytic,
    ));
    Ok(rows)
}

/// Gerber–Shiu masses on one set of simulated paths: the box
/// `θ ∈ (2,4], y ∈ (0,1], z ∈ (0,2]`, every ruin, and creeping.
pub fn check_gerber_shiu(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let (m, x, q) = (reference_model(), 2.0, 0.1);
    let rule = reference_rule(x);
    let gs = GerberShiu::new(&m, &rule, q, q, &opts.quad)?;
    let region = GsRegion {
        theta: (2.0, 4.0),
        y: (0.0, 1.0),
        z: (0.0, 2.0),
    };
    let rect = gs.mass(&region)?.total();
    let total = gs.total_mass()?;
    let creep = gs.creep_mass((0.0, f64::INFINITY))?;

    let mut cfg = SimConfig::new(opts.paths, opts.seed);
    cfg.horizon = 150.0;
    let targets = [
        GsTarget::Jump(region),
        GsTarget::AnyRuin,
        GsTarget::Creep {
            theta: (0.0, f64::INFINITY),
        },
    ];
    let est = estimate_gs_masses(&m, &rule, q, q, &targets, &cfg)?;
    Ok(vec![
        CheckOutcome::simulated(
            "gs_rectangle_vs_simulation",
            format!(
                "discounted ruin mass, theta in (2,4] y in (0,1] z in (0,2], alpha=beta={q}, {} paths",
                est[0].n
            ),
            &est[0],
            rect,
        ),
        CheckOutcome::simulated(
            "gs_total_vs_simulation",
            format!(
                "E[exp(-q tau_0); tau_0 < T], density + atom + creep, q={q}, {} paths",
                est[1].n
            ),
            &est[1],
            total,
        ),
        CheckOutcome::new(
            "gs_creep_without_gaussian",
            "analytic creeping mass, sigma=0",
            creep,
            0.0,
            0.0,
        ),
        CheckOutcome::new(
            "gs_creep_without_gaussian",
            "simulated creeping mass, sigma=0",
            est[2].mean,
            0.0,
            0.0,
        ),
    ])
}

/// At `q = 0` the excursion overshoot mass, jump atom and creeping term
/// add up to `W'(a)/W(a)`.
pub fn check_excursion(_: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let mut rows = Vec::new();
    let opts = QuadOptions::with_tol(1e-12);
    for m in [reference_model(), reference_gaussian_model()] {
        let e = ScaleEngine::new(&m, 0.0)?;
        for a in [1.0, 2.0, 5.0] {
            let mass = excursion_mass(&e, a, &opts)?;
            let tail = e.log_derivative(a)?;
            rows.push(CheckOutcome::new(
                "excursion_mass_zero_rate",
                format!("overshoot + atom + creep = W'(a)/W(a); {} a={a}", describe(&m)),
                mass.total(),
                tail,
                1e-6 * tail,
            ));
        }
    }
    Ok(rows)
}

/// Pathwise: the running maximum of `U` equals `S − ∫γ dS`, and `X = γ̄⁻¹(a)`
/// at the first passage of `U` above `a`.
pub fn check_path_invariants(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let m = reference_model();
    let rule = reference_rule(2.0);
    let mut cfg = SimConfig::new(opts.invariant_paths, opts.seed);
    cfg.barrier = Some(5.0);
    cfg.tax_discount = 0.1;
    cfg.horizon = 150.0;
    let recs = simulate_paths(&m, &rule, &cfg)?;
    let sup_gap = recs.iter().map(|r| r.max_sup_gap).fold(0.0, f64::max);
    let barrier_gap = recs.iter().filter_map(|r| r.barrier_gap).fold(0.0, f64::max);
    Ok(vec![
        CheckOutcome::new(
            "sup_identity_paths",
            format!("max |sup U - (S - int g dS)| over {} exact paths", recs.len()),
            sup_gap,
            0.0,
            1e-12,
        ),
        CheckOutcome::new(
            "barrier_level_paths",
            format!(
                "max |X - inverse gamma-bar(a)| at tau_a over {} exact paths",
                recs.len()
            ),
            barrier_gap,
            0.0,
            1e-12,
        ),
    ])
}

/// Euler exit estimates at steps `h` and `h/2` against the exit identity for
/// a Brownian motion with drift: the error at `h/2` must be at most 65% of
/// the error at `h`.
pub fn check_euler(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let m = LevyModel::brownian_drift(0.5, 1.0)?;
    let (x, a, q) = (1.0, 2.5, 0.5);
    let rule = TaxRule::new(x, &[(0.0, 0.2), (1.5, 0.5)])?;
    let query = ExitQuery {
        model: &m,
        rule: &rule,
        q,
        x,
        a,
    };
    let exact = two_sided_exit(&query, &opts.quad)?;
    let mut cfg = SimConfig::new(opts.euler_paths, opts.seed);
    cfg.horizon = 100.0;
    cfg.step = opts.euler_step;
    let coarse = estimate_exit(&m, &rule, q, a, &cfg)?;
    cfg.step = opts.euler_step / 2.0;
    let fine = estimate_exit(&m, &rule, q, a, &cfg)?;
    let (d1, d2) = ((coarse.mean - exact).abs(), (fine.mean - exact).abs());
    Ok(vec![CheckOutcome::new(
        "euler_convergence",
        format!(
            "|error| at h/2 vs 0.65 |error| at h; h={} estimates {:.6e} / {:.6e}, exact {:.6e}",
            opts.euler_step, coarse.mean, fine.mean, exact
        ),
        d2,
        0.0,
        0.65 * d1,
    )])
}

/// A named group of checks, in report order.
pub type CheckFn = fn(&VerifyOptions) -> Result<Vec<CheckOutcome>>;

/// Every check group with its name.
pub const CHECKS: [(&str, CheckFn); 10] = [
    ("laplace", check_laplace),
    ("tilting", check_tilting),
    ("exit_degenerations", check_exit_degenerations),
    ("exit_simulation", check_exit_simulation),
    ("npv", check_npv),
    ("gerber_shiu", check_gerber_shiu),
    ("excursion", check_excursion),
    ("path_invariants", check_path_invariants),
    ("euler", check_euler),
    ("determinism", check_determinism),
];

/// Re-runs a small exit estimate and compares bit patterns.
pub fn check_determinism(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let m = reference_model();
    let rule = reference_rule(2.0);
    let cfg = SimConfig::new(opts.invariant_paths, opts.seed);
    let a = estimate_exit(&m, &rule, 0.05, 5.0, &cfg)?;
    let b = estimate_exit(&m, &rule, 0.05, 5.0, &cfg)?;
    let same = a.mean.to_bits() == b.mean.to_bits() && a.std_error.to_bits() == b.std_error.to_bits();
    Ok(vec![CheckOutcome::new(
        "seed_determinism",
        "repeated exit estimate with the same seed is bit-identical",
        if same { 0.0 } else { 1.0 },
        0.0,
        0.0,
    )])
}

/// Runs every check group, returning rows and per-group wall time in seconds.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<(String, Vec<CheckOutcome>, f64)>> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let rows = f(opts)?;
            Ok((name.to_string(), rows, start.elapsed().as_secs_f64()))
        })
        .collect()
}
