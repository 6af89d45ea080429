//! Path simulation of the taxed surplus, used as an independent check of the
//! analytic identities.
//!
//! Without a Gaussian part paths are simulated exactly, event by event:
//! between claims `X` rises linearly, the ladder phases where `X = S` are
//! split at the tax breakpoints, and tax, discounting and barrier crossings
//! are all integrated in closed form. With a Gaussian part an Euler scheme
//! with exact claim times and Brownian-bridge extrema is used instead.
//!
//! Every path draws from its own ChaCha8 stream keyed by `(seed, path id)`,
//! and results are reduced in fixed-size chunks in path order, so estimates
//! are bit-identical for any thread count.

mod euler;
mod exact;
mod stats;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::identities::GsRegion;
use crate::levy::LevyModel;
use crate::tax::TaxRule;

use stats::Accumulator;
pub use stats::Estimate;

// Paths per reduction chunk; fixed so that results do not depend on scheduling.
const CHUNK: u64 = 1024;

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Euler step, only used when the model has a Gaussian part.
    pub step: f64,
    /// Paths still alive at this time are censored.
    pub horizon: f64,
    /// Discount rate applied to the tax stream in [`PathRecord::discounted_tax`].
    pub tax_discount: f64,
    /// Upper barrier `a` for the post-tax surplus.
    pub barrier: Option<f64>,
    /// End each path at the first passage above the barrier.
    pub stop_at_barrier: bool,
    /// Accept undiscounted estimands, whose censoring error cannot be bounded.
    pub acknowledge_horizon: bool,
}

impl SimConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            seed,
            step: 1e-2,
            horizon: 100.0,
            tax_discount: 0.0,
            barrier: None,
            stop_at_barrier: false,
            acknowledge_horizon: false,
        }
    }

    fn validate(&self, rule: &TaxRule) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("simulation", "n_paths must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(
                "simulation",
                format!("step {} must be positive", self.step),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(
                "simulation",
                format!("horizon {} must be positive", self.horizon),
            ));
        }
        if !(self.tax_discount >= 0.0 && self.tax_discount.is_finite()) {
            return Err(Error::invalid("simulation", "tax discount rate must be nonnegative"));
        }
        if let Some(a) = self.barrier {
            if !(a > rule.base() && a.is_finite()) {
                return Err(Error::domain(
                    "simulation",
                    format!("barrier {a} must exceed x = {}", rule.base()),
                ));
            }
        }
        Ok(())
    }

    /// Advisory messages about settings likely to bias Euler estimates.
    pub fn warnings(&self, model: &LevyModel, rule: &TaxRule) -> Vec<String> {
        let mut out = Vec::new();
        if model.sigma() == 0.0 {
            return out;
        }
        let spread = model.drift().abs() * self.step + model.sigma() * self.step.sqrt();
        let mut gaps = vec![rule.base()];
        if let Some(a) = self.barrier {
            gaps.push(a - rule.base());
        }
        let smallest = gaps.into_iter().fold(f64::INFINITY, f64::min);
        if spread > 0.1 * smallest {
            out.push(format!(
                "Euler step {} moves the surplus by about {spread:.3e}, large against the smallest level gap {smallest:.3e}",
                self.step
            ));
        }
        out
    }
}

/// Ruin information of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ruin {
    /// `τ_0^−`.
    pub time: f64,
    /// Last time the running maximum increased before ruin.
    pub kappa: f64,
    /// Post-tax maximum `S^U` at ruin.
    pub sup: f64,
    /// `U` just before ruin.
    pub undershoot: f64,
    /// `−U` at ruin.
    pub deficit: f64,
    /// Ruin by continuous passage through zero.
    pub creep: bool,
}

/// Everything recorded along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub path_id: u64,
    /// First passage of `U` above the barrier.
    pub tau_plus: Option<f64>,
    pub ruin: Option<Ruin>,
    /// `∫₀^{τ_0^− ∧ T} e^{−qu} γ(S_u) dS_u`.
    pub discounted_tax: f64,
    /// Neither ruined nor stopped before the horizon.
    pub censored: bool,
    /// Largest gap between the running maximum of `U`, accumulated piece by
    /// piece, and `S − ∫γ dS` and `γ̄(S)`.
    pub max_sup_gap: f64,
    /// `|X − γ̄⁻¹(a)|` at the first passage above `a` (exact mode only).
    pub barrier_gap: Option<f64>,
}

impl PathRecord {
    fn new(path_id: u64) -> Self {
        PathRecord {
            path_id,
            tau_plus: None,
            ruin: None,
            discounted_tax: 0.0,
            censored: false,
            max_sup_gap: 0.0,
            barrier_gap: None,
        }
    }

    /// `e^{−q τ_a^+} 1{τ_a^+ < τ_0^−}`.
    pub fn exit_weight(&self, q: f64) -> f64 {
        match (self.tau_plus, self.ruin) {
            (Some(t), None) => (-q * t).exp(),
            (Some(t), Some(r)) if t < r.time => (-q * t).exp(),
            _ => 0.0,
        }
    }

    /// `e^{−ακ − β(τ_0^− − κ)}` on the requested ruin event, else 0.
    pub fn gs_weight(&self, alpha: f64, beta: f64, target: &GsTarget) -> f64 {
        let Some(r) = self.ruin else {
            return 0.0;
        };
        let hit = match target {
            GsTarget::Jump(region) => !r.creep && region.contains(r.sup, r.undershoot, r.deficit),
            GsTarget::Creep { theta } => r.creep && theta.0 < r.sup && r.sup <= theta.1,
            GsTarget::AnyRuin => true,
        };
        if hit {
            (-alpha * r.kappa - beta * (r.time - r.kappa)).exp()
        } else {
            0.0
        }
    }
}

/// Ruin event selected by [`estimate_gs_mass`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GsTarget {
    /// Ruin by a claim with `(S^U, U_{τ−}, −U_τ)` in the region.
    Jump(GsRegion),
    /// Ruin by creeping with `S^U` in `(lo, hi]`.
    Creep { theta: (f64, f64) },
    /// Any ruin before the horizon.
    AnyRuin,
}

/// Precomputed per-run data shared by all paths.
struct Simulator<'a> {
    model: &'a LevyModel,
    rule: &'a TaxRule,
    config: &'a SimConfig,
    /// Cumulative claim mixture weights.
    cum_weights: Vec<f64>,
    rates: Vec<f64>,
    /// `γ̄⁻¹(a)`, for the barrier check.
    barrier_level: Option<f64>,
    base_rng: ChaCha8Rng,
}

impl<'a> Simulator<'a> {
    fn new(model: &'a LevyModel, rule: &'a TaxRule, config: &'a SimConfig) -> Result<Self> {
        config.validate(rule)?;
        let mut acc = 0.0;
        let cum_weights = model
            .claims()
            .iter()
            .map(|c| {
                acc += c.weight;
                acc
            })
            .collect();
        let barrier_level = config.barrier.map(|a| rule.gamma_bar_inv(a)).transpose()?;
        Ok(Simulator {
            model,
            rule,
            config,
            cum_weights,
            rates: model.claims().iter().map(|c| c.rate).collect(),
            barrier_level,
            base_rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    fn rng(&self, path_id: u64) -> ChaCha8Rng {
        let mut rng = self.base_rng.clone();
        rng.set_stream(path_id);
        rng
    }

    fn claim_size(&self, rng: &mut ChaCha8Rng) -> f64 {
        use rand::Rng;
        use rand_distr::Exp1;
        let u: f64 = rng.random();
        let i = self
            .cum_weights
            .iter()
            .position(|&w| u < w)
            .unwrap_or(self.rates.len() - 1);
        let e: f64 = rng.sample(Exp1);
        e / self.rates[i]
    }

    fn run(&self, path_id: u64) -> PathRecord {
        let mut rng = self.rng(path_id);
        if self.model.sigma() == 0.0 {
            exact::run(self, &mut rng, path_id)
        } else {
            euler::run(self, &mut rng, path_id)
        }
    }

    /// Runs all paths and reduces `f(record)` chunk by chunk in path order.
    fn estimate_many<F>(&self, k: usize, f: F) -> Vec<(f64, f64, u64)>
    where
        F: Fn(&PathRecord, &mut [f64]) + Sync,
    {
        let n = self.config.n_paths;
        let chunks = n.div_ceil(CHUNK);
        let partial: Vec<Vec<Accumulator>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![Accumulator::default(); k];
                let mut values = vec![0.0; k];
                for id in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    let rec = self.run(id);
                    f(&rec, &mut values);
                    for (a, &v) in acc.iter_mut().zip(&values) {
                        a.push(v);
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Accumulator::default(); k];
        for chunk in &partial {
            for (t, a) in total.iter_mut().zip(chunk) {
                t.merge(a);
            }
        }
        total.iter().map(|a| (a.mean(), a.std_error(), a.count())).collect()
    }
}

/// Discount `∫_t^{t+dt} e^{−qu} du`.
fn discount_integral(q: f64, t: f64, dt: f64) -> f64 {
    if q == 0.0 {
        dt
    } else {
        -(-q * t).exp() * (-q * dt).exp_m1() / q
    }
}

fn require_discount(config: &SimConfig, rate: f64, what: &'static str) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain(what, format!("discount rate {rate} must be nonnegative")));
    }
    if rate == 0.0 && !config.acknowledge_horizon {
        return Err(Error::invalid(
            what,
            "an undiscounted estimate is truncated at the horizon with no error bound; set acknowledge_horizon",
        ));
    }
    Ok(())
}

/// Simulates one path.
pub fn simulate_path(model: &LevyModel, rule: &TaxRule, config: &SimConfig, path_id: u64) -> Result<PathRecord> {
    Ok(Simulator::new(model, rule, config)?.run(path_id))
}

/// Simulates paths `0..n_paths`, in order.
pub fn simulate_paths(model: &LevyModel, rule: &TaxRule, config: &SimConfig) -> Result<Vec<PathRecord>> {
    let sim = Simulator::new(model, rule, config)?;
    Ok((0..config.n_paths).into_par_iter().map(|id| sim.run(id)).collect())
}

/// Mean of `e^{−qτ_a^+} 1{τ_a^+ < τ_0^−}`.
///
/// Paths are stopped at the barrier; censored paths count as 0, which biases
/// the estimate down by at most `e^{−q T}`.
pub fn estimate_exit(model: &LevyModel, rule: &TaxRule, q: f64, a: f64, config: &SimConfig) -> Result<Estimate> {
    require_discount(config, q, "exit estimate")?;
    let config = SimConfig {
        barrier: Some(a),
        stop_at_barrier: true,
        ..config.clone()
    };
    let sim = Simulator::new(model, rule, &config)?;
    let (mean, se, n) = sim.estimate_many(1, |r, v| v[0] = r.exit_weight(q))[0];
    Ok(Estimate::new(mean, se, n, (-q * config.horizon).exp()))
}

/// Mean of the tax paid before ruin, discounted at rate `q`.
///
/// Tax paid after the horizon is at most `γ_max ∫_T^∞ e^{−qu} dS_u`, whose
/// mean is `γ_max e^{−qT} / Φ(q)` by the strong Markov property, since
/// `E[∫₀^∞ e^{−qu} dS_u] = E[S_{e_q}] = 1/Φ(q)`.
pub fn estimate_npv(model: &LevyModel, rule: &TaxRule, q: f64, config: &SimConfig) -> Result<Estimate> {
    if !(q > 0.0) {
        return Err(Error::domain(
            "tax NPV estimate",
            format!("discount rate {q} must be positive"),
        ));
    }
    let config = SimConfig {
        tax_discount: q,
        stop_at_barrier: false,
        ..config.clone()
    };
    let sim = Simulator::new(model, rule, &config)?;
    let (mean, se, n) = sim.estimate_many(1, |r, v| v[0] = r.discounted_tax)[0];
    let bias = rule.max_rate() * (-q * config.horizon).exp() / model.phi(q)?;
    Ok(Estimate::new(mean, se, n, bias))
}

/// Mean of `e^{−ακ − β(τ_0^− − κ)}` on the target ruin event.
pub fn estimate_gs_mass(
    model: &LevyModel,
    rule: &TaxRule,
    alpha: f64,
    beta: f64,
    target: &GsTarget,
    config: &SimConfig,
) -> Result<Estimate> {
    Ok(estimate_gs_masses(model, rule, alpha, beta, std::slice::from_ref(target), config)?.remove(0))
}

/// Several Gerber–Shiu masses from one set of paths.
pub fn estimate_gs_masses(
    model: &LevyModel,
    rule: &TaxRule,
    alpha: f64,
    beta: f64,
    targets: &[GsTarget],
    config: &SimConfig,
) -> Result<Vec<Estimate>> {
    require_discount(config, alpha.min(beta), "Gerber-Shiu estimate")?;
    let config = SimConfig {
        stop_at_barrier: false,
        ..config.clone()
    };
    let sim = Simulator::new(model, rule, &config)?;
    let bias = (-alpha.min(beta) * config.horizon).exp();
    Ok(sim
        .estimate_many(targets.len(), |r, v| {
            for (slot, t) in v.iter_mut().zip(targets) {
                *slot = r.gs_weight(alpha, beta, t);
            }
        })
        .into_iter()
        .map(|(m, se, n)| Estimate::new(m, se, n, bias))
        .collect())
}

/// Header of the per-path CSV dump.
pub const PATH_CSV_HEADER: &str =
    "path_id,tau_plus,tau_minus,kappa,sup_at_ruin,undershoot,deficit,discounted_tax,creep,censored";

/// Writes records as CSV; absent passages are empty fields.
pub fn write_paths_csv<W: Write>(mut out: W, records: &[PathRecord]) -> std::io::Result<()> {
    fn opt(v: Option<f64>) -> String {
        v.map(|v| format!("{v:.16e}")).unwrap_or_default()
    }
    writeln!(out, "{PATH_CSV_HEADER}")?;
    for r in records {
        let ruin = r.ruin;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.16e},{},{}",
            r.path_id,
            opt(r.tau_plus),
            opt(ruin.map(|r| r.time)),
            opt(ruin.map(|r| r.kappa)),
            opt(ruin.map(|r| r.sup)),
            opt(ruin.map(|r| r.undershoot)),
            opt(ruin.map(|r| r.deficit)),
            r.discounted_tax,
            ruin.is_some_and(|r| r.creep) as u8,
            r.censored as u8,
        )?;
    }
    Ok(())
}
