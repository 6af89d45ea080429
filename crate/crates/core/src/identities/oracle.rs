//! Closed forms for a constant tax rate `γ`.
//!
//! Then `γ̄(s) = x + (1 − γ)(s − x)` and the exponent collapses to
//! `I_q(u) = ln(W^(q)(u)/W^(q)(x)) / (1 − γ)`, so every identity is a power
//! of a scale-function ratio. Nothing here touches the cumulative-exponent
//! table, which makes these independent checks of the general code path.

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::quad::{try_integrate, QuadOptions};
use crate::scale::{ScaleEngine, ScaleFunction};

#[derive(Debug, Clone)]
pub struct ConstantGammaOracle {
    model: LevyModel,
    gamma: f64,
    x: f64,
}

impl ConstantGammaOracle {
    pub fn new(model: &LevyModel, gamma: f64, x: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("constant tax rate", format!("{gamma} outside [0, 1)")));
        }
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::domain(
                "constant tax oracle",
                format!("x = {x} must be positive"),
            ));
        }
        Ok(ConstantGammaOracle {
            model: model.clone(),
            gamma,
            x,
        })
    }

    fn power(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    /// `(W(x)/W(u))^{1/(1−γ)}`, evaluated through logarithms.
    fn decay(&self, engine: &ScaleEngine, u: f64) -> Result<f64> {
        Ok((self.power() * (engine.w(self.x)?.ln() - engine.w(u)?.ln())).exp())
    }

    /// Two-sided exit: `(W^(q)(x)/W^(q)(a))^{1/(1−γ)}`.
    pub fn exit(&self, q: f64, a: f64) -> Result<f64> {
        if !(a > self.x) {
            return Err(Error::domain(
                "constant tax exit",
                format!("a = {a} must exceed x = {}", self.x),
            ));
        }
        self.decay(&ScaleEngine::new(&self.model, q)?, a)
    }

    /// Tax NPV: `γ/(1−γ) ∫_x^∞ (W^(q)(x)/W^(q)(u))^{1/(1−γ)} du`.
    pub fn npv(&self, q: f64, opts: &QuadOptions) -> Result<f64> {
        if self.gamma == 0.0 {
            return Ok(0.0);
        }
        let engine = ScaleEngine::new(&self.model, q)?;
        let phi = engine.phi();
        if !(phi > 0.0) {
            return Err(Error::Divergent {
                what: "constant tax NPV",
                detail: format!("Φ({q}) = 0"),
            });
        }
        let p = self.power();
        // Since W'/W ≥ Φ, the tail beyond U is at most decay(U)/(pΦ).
        let mut total = 0.0;
        let mut lo = self.x;
        let mut len = 4.0;
        loop {
            let hi = lo + len;
            total += try_integrate(|u| self.decay(&engine, u), lo, hi, &[], opts)?.value;
            let tail = self.decay(&engine, hi)? / (p * phi);
            if tail <= opts.abs_tol {
                break;
            }
            if hi - self.x > 1e4 {
                return Err(Error::Accuracy {
                    what: "constant tax NPV truncation",
                    requested: opts.abs_tol,
                    achieved: tail,
                });
            }
            lo = hi;
            len *= 2.0;
        }
        Ok(self.gamma / (1.0 - self.gamma) * total)
    }

    /// Gerber–Shiu density at `(θ, y, z)`:
    /// `(1/(1−γ)) (W^(α)(x)/W^(α)(θ))^{1/(1−γ)} {W^(β)'(θ−y) − W^(β)'(θ)W^(β)(θ−y)/W^(β)(θ)} ν(y+z)`.
    pub fn gs_density(&self, alpha: f64, beta: f64, theta: f64, y: f64, z: f64) -> Result<f64> {
        if !(theta >= self.x && y > 0.0 && y < theta && z > 0.0) {
            return Err(Error::domain(
                "constant tax Gerber-Shiu",
                "need x <= theta, 0 < y < theta, z > 0",
            ));
        }
        let wa = ScaleEngine::new(&self.model, alpha)?;
        let wb = ScaleEngine::new(&self.model, beta)?;
        let bracket = wb.w_prime(theta - y)? - wb.w_prime(theta)? * wb.w(theta - y)? / wb.w(theta)?;
        Ok(self.power() * self.decay(&wa, theta)? * bracket * self.model.jump_measure().density(y + z))
    }

    /// Creeping density in `θ`:
    /// `(1/(1−γ)) (W^(α)(x)/W^(α)(θ))^{1/(1−γ)} (σ²/2){W^(β)'(θ)²/W^(β)(θ) − W^(β)''(θ)}`.
    pub fn gs_creep(&self, alpha: f64, beta: f64, theta: f64) -> Result<f64> {
        if !(theta >= self.x) {
            return Err(Error::domain(
                "constant tax creep",
                format!("theta = {theta} below x = {}", self.x),
            ));
        }
        let sigma = self.model.sigma();
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let wa = ScaleEngine::new(&self.model, alpha)?;
        let wb = ScaleEngine::new(&self.model, beta)?;
        let w1 = wb.w_prime(theta)?;
        let creep = 0.5 * sigma * sigma * (w1 * w1 / wb.w(theta)? - wb.w_second(theta)?);
        Ok(self.power() * self.decay(&wa, theta)? * creep)
    }
}
