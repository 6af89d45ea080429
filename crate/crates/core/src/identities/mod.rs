//! Fluctuation identities for the taxed surplus `U = X − ∫ γ(S) dS`.
//!
//! Everything here is a functional of scale functions of `X` plus the tax
//! rule: the two-sided exit transform, the present value of tax paid until
//! ruin, and the discounted joint law of the post-tax maximum, the surplus
//! prior to ruin and the deficit at ruin.
//!
//! Throughout, `x` is the base level of the [`TaxRule`] and
//!
//! ```text
//! I_q(u) = ∫_x^u W^(q)'(v) / [W^(q)(v) (1 − γ(γ̄⁻¹(v)))] dv.
//! ```

mod excursion;
mod exponent;
mod oracle;

pub use excursion::{
    excursion_creep_term, excursion_jump_atom, excursion_mass, excursion_overshoot_density, ExcursionMass,
};
pub use exponent::{exponent_integrand, CumulativeExponent};
pub use oracle::ConstantGammaOracle;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::quad::{try_integrate, QuadOptions};
use crate::scale::{ScaleEngine, ScaleFunction};
use crate::tax::TaxRule;

// Initial length of the tabulated exponent beyond `x`; doubled as needed.
const START_SPAN: f64 = 8.0;
// Give up truncating an infinite range beyond this distance from `x`.
const MAX_SPAN: f64 = 1e4;

/// Inputs of the two-sided exit identity.
#[derive(Debug, Clone, Copy)]
pub struct ExitQuery<'a> {
    pub model: &'a LevyModel,
    pub rule: &'a TaxRule,
    pub q: f64,
    pub x: f64,
    pub a: f64,
}

/// One point of the Gerber–Shiu density.
#[derive(Debug, Clone, Copy)]
pub struct GerberShiuQuery<'a> {
    pub model: &'a LevyModel,
    pub rule: &'a TaxRule,
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub theta: f64,
    pub y: f64,
    pub z: f64,
}

fn check_base(rule: &TaxRule, x: f64) -> Result<()> {
    if rule.base() != x {
        return Err(Error::invalid(
            "query",
            format!("tax rule base level {} differs from initial surplus {x}", rule.base()),
        ));
    }
    Ok(())
}

fn check_rate(what: &'static str, q: f64) -> Result<()> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::domain(
            what,
            format!("discount rate {q} must be finite and nonnegative"),
        ));
    }
    Ok(())
}

/// `E_x[e^{−q τ_a^+}; τ_a^+ < τ_0^−] = exp(−I_q(a))`.
pub fn two_sided_exit(query: &ExitQuery<'_>, opts: &QuadOptions) -> Result<f64> {
    let ExitQuery { model, rule, q, x, a } = *query;
    check_base(rule, x)?;
    check_rate("two-sided exit", q)?;
    if !(x > 0.0 && a > x) || !a.is_finite() {
        return Err(Error::domain(
            "two-sided exit",
            format!("need 0 < x < a, got x = {x}, a = {a}"),
        ));
    }
    let engine = ScaleEngine::new(model, q)?;
    let breaks: Vec<f64> = rule.retained_breakpoints().into_iter().filter(|&b| b < a).collect();
    let exponent = try_integrate(|u| exponent_integrand(&engine, rule, u), x, a, &breaks, opts)?;
    Ok((-exponent.value).exp())
}

/// Builds the cumulative exponent far enough out that
/// `e^{−I(u)} · scale ≤ tol`, using `W'/W ≥ Φ(q)` and `1/(1−γ) ≥ 1`
/// to bound everything beyond. `scale(u)` multiplies the decay bound.
fn table_until<F>(
    engine: ScaleEngine,
    rule: &TaxRule,
    tol: f64,
    what: &'static str,
    mut scale: F,
) -> Result<CumulativeExponent>
where
    F: FnMut(f64) -> Result<f64>,
{
    let x = rule.base();
    let mut table = CumulativeExponent::new(engine, rule.clone(), x + START_SPAN, tol)?;
    loop {
        let u = table.upper();
        let bound = (-table.eval(u)?).exp() * scale(u)?;
        if bound <= tol {
            return Ok(table);
        }
        let span = 2.0 * (u - x);
        if span > MAX_SPAN {
            return Err(Error::Accuracy {
                what,
                requested: tol,
                achieved: bound,
            });
        }
        table.extend_to(x + span)?;
    }
}

/// Present value of all tax paid before ruin,
/// `∫_x^∞ exp(−I_q(γ̄(t))) γ(t) dt`.
///
/// The integral is truncated where the tail bound
/// `e^{−I_q(γ̄(T))} γ_max / (Φ(q)(1 − γ_max))` drops below the tolerance.
/// `Φ(q) = 0` happens only at `q = 0` with `ψ'(0+) ≥ 0`; ruin then fails with
/// positive probability, tax accrues forever and the value is refused as
/// divergent.
pub fn tax_npv(model: &LevyModel, rule: &TaxRule, q: f64, x: f64, opts: &QuadOptions) -> Result<f64> {
    check_base(rule, x)?;
    check_rate("tax NPV", q)?;
    if rule.is_untaxed() {
        return Ok(0.0);
    }
    let engine = ScaleEngine::new(model, q)?;
    let phi = engine.phi();
    if !(phi > 0.0) {
        return Err(Error::Divergent {
            what: "tax NPV",
            detail: format!("Φ({q}) = 0, so the discounted tax stream cannot be bounded"),
        });
    }
    let gmax = rule.max_rate();
    let tail_scale = gmax / (phi * (1.0 - gmax));
    let table = table_until(engine, rule, opts.abs_tol, "tax NPV truncation", |_| Ok(tail_scale))?;
    let horizon = rule.gamma_bar_inv(table.upper())?;
    let breaks = rule.breakpoints_above_base();
    let body = try_integrate(
        |t| {
            let g = rule.gamma(t)?;
            if g == 0.0 {
                return Ok(0.0);
            }
            Ok((-table.eval(rule.gamma_bar(t)?)?).exp() * g)
        },
        x,
        horizon,
        &breaks,
        opts,
    )?;
    Ok(body.value)
}

/// Half-open box `(lo, hi]` in each of the post-tax maximum at ruin `θ`,
/// the surplus prior to ruin `y` and the deficit at ruin `z`.
/// Upper ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsRegion {
    pub theta: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl GsRegion {
    /// Every ruin by a jump.
    pub fn full() -> Self {
        GsRegion {
            theta: (0.0, f64::INFINITY),
            y: (0.0, f64::INFINITY),
            z: (0.0, f64::INFINITY),
        }
    }

    pub fn contains(&self, theta: f64, y: f64, z: f64) -> bool {
        let inside = |(lo, hi): (f64, f64), v: f64| lo < v && v <= hi;
        inside(self.theta, theta) && inside(self.y, y) && inside(self.z, z)
    }

    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("theta", self.theta), ("y", self.y), ("z", self.z)] {
            if !(lo >= 0.0 && lo.is_finite() && hi >= lo) {
                return Err(Error::domain(
                    "Gerber-Shiu region",
                    format!("{name} range ({lo}, {hi}] is malformed"),
                ));
            }
        }
        Ok(())
    }
}

/// Discounted mass of ruin events split by how ruin happens.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GsMass {
    /// Ruin by a claim arriving while `U` is strictly below its maximum.
    pub overshoot: f64,
    /// Ruin by a claim arriving while `U` sits at its maximum (`y = θ`);
    /// only present for bounded variation, where `W^(β)(0) > 0`.
    pub atom: f64,
}

impl GsMass {
    pub fn total(&self) -> f64 {
        self.overshoot + self.atom
    }
}

/// Evaluator for `E_x[e^{−ακ − β(τ_0^− − κ)}; S^U ∈ dθ, U_{τ−} ∈ dy, −U_τ ∈ dz]`
/// where `κ` is the last time tax was paid before ruin.
///
/// The weight splits as `P(θ) · n_β(θ; y, z)`: `P(θ) = e^{−I_α(θ)}/(1−γ(γ̄⁻¹θ))`
/// is the discounted density of reaching `θ` and `n_β` the discounted law of
/// the first excursion below the maximum that is deep enough to cause ruin.
#[derive(Debug, Clone)]
pub struct GerberShiu {
    alpha: f64,
    beta: f64,
    table: CumulativeExponent,
    beta_engine: ScaleEngine,
    opts: QuadOptions,
}

impl GerberShiu {
    pub fn new(model: &LevyModel, rule: &TaxRule, alpha: f64, beta: f64, opts: &QuadOptions) -> Result<Self> {
        check_rate("Gerber-Shiu", alpha)?;
        check_rate("Gerber-Shiu", beta)?;
        let alpha_engine = ScaleEngine::new(model, alpha)?;
        let beta_engine = ScaleEngine::new(model, beta)?;
        let table = CumulativeExponent::new(alpha_engine, rule.clone(), rule.base() + START_SPAN, opts.abs_tol)?;
        Ok(GerberShiu {
            alpha,
            beta,
            table,
            beta_engine,
            opts: *opts,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn rule(&self) -> &TaxRule {
        self.table.rule()
    }

    fn model(&self) -> &LevyModel {
        self.beta_engine.model()
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        let x = self.rule().base();
        if !(theta >= x && theta.is_finite()) {
            return Err(Error::domain(
                "Gerber-Shiu",
                format!("theta = {theta} below initial surplus {x}"),
            ));
        }
        Ok(())
    }

    /// `P(θ) = e^{−I_α(θ)} / (1 − γ(γ̄⁻¹(θ)))`.
    pub fn reach_density(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok((-self.table.eval(theta)?).exp() * self.rule().gamma_bar_inv_slope(theta)?)
    }

    /// `W^(β)'(θ−y) − W^(β)'(θ) W^(β)(θ−y) / W^(β)(θ)` for `0 < y < θ`.
    pub fn bracket(&self, theta: f64, y: f64) -> Result<f64> {
        bracket(&self.beta_engine, theta, y)
    }

    /// Joint density in `(θ, y, z)` of ruin by a claim from below the maximum.
    pub fn density(&self, theta: f64, y: f64, z: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.reach_density(theta)? * excursion_overshoot_density(&self.beta_engine, theta, y, z)?)
    }

    /// Density in `(θ, z)` of the atom at `y = θ`: ruin by a claim while `U`
    /// is at its maximum. Zero with a Gaussian component.
    pub fn atom_density(&self, theta: f64, z: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.reach_density(theta)? * excursion_jump_atom(&self.beta_engine, theta, z)?)
    }

    /// Density in `θ` of ruin by creeping; identically zero when `σ = 0`.
    pub fn creep(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        if self.model().sigma() == 0.0 {
            return Ok(0.0);
        }
        Ok(self.reach_density(theta)? * excursion_creep_term(&self.beta_engine, theta)?)
    }

    /// Clips `(lo, hi]` in θ to `[x, ·]`, truncating an infinite upper end
    /// where the remaining mass is below tolerance.
    fn theta_range(&self, (lo, hi): (f64, f64)) -> Result<Option<(f64, f64)>> {
        let x = self.rule().base();
        let lo = lo.max(x);
        if hi <= lo {
            return Ok(None);
        }
        if hi.is_finite() {
            return Ok(Some((lo, hi)));
        }
        // Beyond Θ: P(θ) ≤ e^{−I_α(Θ) − Φ(α)(θ−Θ)}/(1−γ_max), and the total
        // discounted mass of ruin from maximum θ is at most n(ε̄ > θ), which
        // decreases in θ.
        let phi = self.table.engine().phi();
        if !(phi > 0.0) {
            return Err(Error::Divergent {
                what: "Gerber-Shiu truncation",
                detail: "Φ(α) = 0, so the θ range must be bounded".into(),
            });
        }
        let undiscounted = ScaleEngine::new(self.model(), 0.0)?;
        let gmax = self.rule().max_rate();
        let tol = self.opts.abs_tol;
        let mut upper = lo.max(x + START_SPAN);
        loop {
            let bound = (-self.table.eval(upper)?).exp() * undiscounted.log_derivative(upper)? / ((1.0 - gmax) * phi);
            if bound <= tol {
                return Ok(Some((lo, upper)));
            }
            if upper - x > MAX_SPAN {
                return Err(Error::Accuracy {
                    what: "Gerber-Shiu truncation",
                    requested: tol,
                    achieved: bound,
                });
            }
            upper = x + 2.0 * (upper - x);
        }
    }

    fn theta_breaks(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .rule()
            .retained_breakpoints()
            .into_iter()
            .chain(extra.iter().copied())
            .filter(|&v| v > lo && v < hi)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Discounted mass of ruin by a jump with `(θ, y, z)` in `region`.
    pub fn mass(&self, region: &GsRegion) -> Result<GsMass> {
        region.validate()?;
        let Some((t_lo, t_hi)) = self.theta_range(region.theta)? else {
            return Ok(GsMass::default());
        };
        let nu = self.model().jump_measure();
        let (z_lo, z_hi) = region.z;
        let (y_lo, y_hi) = region.y;
        let inner_opts = QuadOptions {
            abs_tol: self.opts.abs_tol * 0.1,
            rel_tol: self.opts.rel_tol * 0.1,
            ..self.opts
        };
        let breaks = self.theta_breaks(t_lo, t_hi, &[y_lo, y_hi]);
        let w0 = self.beta_engine.w_at_zero();

        let overshoot = try_integrate(
            |theta| {
                let top = y_hi.min(theta);
                if top <= y_lo {
                    return Ok(0.0);
                }
                let inner = try_integrate(
                    |y| Ok(self.bracket(theta, y)? * nu.interval(y + z_lo, y + z_hi)),
                    y_lo,
                    top,
                    &[],
                    &inner_opts,
                )?;
                Ok(self.reach_density(theta)? * inner.value)
            },
            t_lo,
            t_hi,
            &breaks,
            &self.opts,
        )?
        .value;

        let atom = if w0 > 0.0 {
            let (a_lo, a_hi) = (t_lo.max(y_lo), t_hi.min(y_hi));
            if a_hi > a_lo {
                try_integrate(
                    |theta| Ok(self.reach_density(theta)? * w0 * nu.interval(theta + z_lo, theta + z_hi)),
                    a_lo,
                    a_hi,
                    &self.theta_breaks(a_lo, a_hi, &[]),
                    &self.opts,
                )?
                .value
            } else {
                0.0
            }
        } else {
            0.0
        };
        Ok(GsMass { overshoot, atom })
    }

    /// Discounted mass of ruin by creeping with `θ ∈ (lo, hi]`.
    pub fn creep_mass(&self, theta: (f64, f64)) -> Result<f64> {
        if self.model().sigma() == 0.0 {
            return Ok(0.0);
        }
        let Some((lo, hi)) = self.theta_range(theta)? else {
            return Ok(0.0);
        };
        Ok(try_integrate(|t| self.creep(t), lo, hi, &self.theta_breaks(lo, hi, &[]), &self.opts)?.value)
    }

    /// `E_x[e^{−ακ − β(τ_0^− − κ)}; τ_0^− < ∞]`, all ways of ruin.
    pub fn total_mass(&self) -> Result<f64> {
        let full = GsRegion::full();
        Ok(self.mass(&full)?.total() + self.creep_mass(full.theta)?)
    }
}

pub(crate) fn bracket(engine: &ScaleEngine, theta: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y < theta) {
        return Err(Error::domain(
            "Gerber-Shiu bracket",
            format!("need 0 < y < theta, got y = {y}, theta = {theta}"),
        ));
    }
    let ratio = engine.log_derivative(theta)?;
    Ok(engine.w_prime(theta - y)? - ratio * engine.w(theta - y)?)
}

/// Single-point Gerber–Shiu density; builds the exponent table each call, so
/// prefer [`GerberShiu`] for repeated evaluation.
pub fn gerber_shiu_density(query: &GerberShiuQuery<'_>, opts: &QuadOptions) -> Result<f64> {
    check_base(query.rule, query.x)?;
    GerberShiu::new(query.model, query.rule, query.alpha, query.beta, opts)?.density(query.theta, query.y, query.z)
}

/// Single-point creep density in `θ`.
pub fn gerber_shiu_creep(
    model: &LevyModel,
    rule: &TaxRule,
    alpha: f64,
    beta: f64,
    x: f64,
    theta: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    check_base(rule, x)?;
    GerberShiu::new(model, rule, alpha, beta, opts)?.creep(theta)
}

#[cfg(test)]
mod tests;
