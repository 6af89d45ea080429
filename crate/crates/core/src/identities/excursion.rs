//! Discounted law of the first excursion of `X` below its maximum that
//! reaches depth `a`, under the excursion measure `n` of `S − X`.
//!
//! With `ρ_a` the first time the excursion exceeds `a`, the overshoot part is
//!
//! ```text
//! n(e^{−qρ_a}; a − ε(ρ_a−) ∈ dy, ε(ρ_a) − a ∈ dz)
//!     = {W'(a−y) − W'(a) W(a−y) / W(a)} ν(y + dz) dy,    0 < y < a,
//! ```
//!
//! plus, for bounded variation, an atom `W(0) ν(a + dz)` at `y = a` (a jump
//! starting from the maximum itself) and, with a Gaussian part, the creeping
//! mass `(σ²/2){W'(a)²/W(a) − W''(a)}`. At `q = 0` the three add up to
//! `n(ε̄ > a) = W'(a)/W(a)`.

use super::bracket;
use crate::error::{Error, Result};
use crate::quad::{try_integrate, QuadOptions};
use crate::scale::{ScaleEngine, ScaleFunction};

/// `(y, z)`-density of the overshoot part, `0 < y < a`, `z > 0`.
pub fn excursion_overshoot_density(engine: &ScaleEngine, a: f64, y: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain(
            "excursion overshoot",
            format!("z = {z} must be positive"),
        ));
    }
    Ok(bracket(engine, a, y)? * engine.model().jump_measure().density(y + z))
}

/// `z`-density of the atom at `y = a`; zero unless `W(0) > 0`.
pub fn excursion_jump_atom(engine: &ScaleEngine, a: f64, z: f64) -> Result<f64> {
    if !(a > 0.0 && z > 0.0) {
        return Err(Error::domain(
            "excursion atom",
            format!("need a, z > 0, got a = {a}, z = {z}"),
        ));
    }
    Ok(engine.w_at_zero() * engine.model().jump_measure().density(a + z))
}

/// Creeping mass `(σ²/2){W'(a)²/W(a) − W''(a)}`; zero when `σ = 0`.
pub fn excursion_creep_term(engine: &ScaleEngine, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain("excursion creep", format!("a = {a} must be positive")));
    }
    let sigma = engine.model().sigma();
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let w = engine.w(a)?;
    let w1 = engine.w_prime(a)?;
    Ok(0.5 * sigma * sigma * (w1 * w1 / w - engine.w_second(a)?))
}

/// The three parts of the discounted excursion mass at depth `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionMass {
    pub overshoot: f64,
    pub atom: f64,
    pub creep: f64,
}

impl ExcursionMass {
    pub fn total(&self) -> f64 {
        self.overshoot + self.atom + self.creep
    }
}

/// Integrates the overshoot density over `y ∈ (0, a)`, `z > 0`.
pub fn excursion_mass(engine: &ScaleEngine, a: f64, opts: &QuadOptions) -> Result<ExcursionMass> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("excursion mass", format!("a = {a} must be positive")));
    }
    let nu = engine.model().jump_measure();
    let overshoot = try_integrate(|y| Ok(bracket(engine, a, y)? * nu.tail(y)), 0.0, a, &[], opts)?.value;
    Ok(ExcursionMass {
        overshoot,
        atom: engine.w_at_zero() * nu.tail(a),
        creep: excursion_creep_term(engine, a)?,
    })
}
