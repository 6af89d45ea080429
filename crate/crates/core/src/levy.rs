//! Spectrally negative Lévy processes with hyperexponential claims.
//!
//! The pre-tax surplus is
//!
//! ```text
//! X_t = x + c t + σ B_t − Σ_{i ≤ N_t} C_i
//! ```
//!
//! with `N` a Poisson process of rate `λ` and claims `C_i` drawn from a finite
//! mixture of exponentials. Its Laplace exponent
//!
//! ```text
//! ψ(θ) = c θ + σ²θ²/2 − λ (1 − Σ_i w_i r_i / (r_i + θ))
//! ```
//!
//! is rational in `θ`, which is what makes closed-form scale functions and
//! exact path simulation possible.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::roots::{bisect, newton_polish};

/// Parametric family the model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Premium drift minus compound Poisson claims, no Gaussian part.
    CramerLundberg,
    /// Linear drift plus Brownian motion, no jumps.
    BrownianDrift,
    /// Cramér–Lundberg surplus perturbed by a Brownian motion.
    BrownianPerturbedCL,
}

/// One exponential component of a hyperexponential claim law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimComponent {
    pub weight: f64,
    pub rate: f64,
}

impl ClaimComponent {
    pub fn new(weight: f64, rate: f64) -> Self {
        ClaimComponent { weight, rate }
    }
}

/// Sign of `ψ'(0+)`: drift to `+∞`, oscillation, or drift to `−∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetProfit {
    Positive,
    Zero,
    Negative,
}

/// A spectrally negative Lévy process from the supported family.
///
/// Immutable after construction. Claim components are kept sorted by rate
/// with equal rates merged, so `−rate` values are distinct poles of `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    variant: Variant,
    drift: f64,
    sigma: f64,
    jump_rate: f64,
    claims: Vec<ClaimComponent>,
}

fn normalize_claims(claims: &[ClaimComponent]) -> Result<Vec<ClaimComponent>> {
    if claims.is_empty() {
        return Err(Error::invalid("claim law", "at least one component is required"));
    }
    for c in claims {
        if !(c.weight > 0.0 && c.weight.is_finite()) {
            return Err(Error::invalid(
                "claim law",
                format!("weight {} must be positive", c.weight),
            ));
        }
        if !(c.rate > 0.0 && c.rate.is_finite()) {
            return Err(Error::invalid("claim law", format!("rate {} must be positive", c.rate)));
        }
    }
    let total: f64 = claims.iter().map(|c| c.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "claim law",
            format!("weights sum to {total}, expected 1"),
        ));
    }
    let mut sorted: Vec<ClaimComponent> = claims.to_vec();
    sorted.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    let mut merged: Vec<ClaimComponent> = Vec::with_capacity(sorted.len());
    for c in sorted {
        match merged.last_mut() {
            Some(last) if last.rate == c.rate => last.weight += c.weight,
            _ => merged.push(c),
        }
    }
    for c in &mut merged {
        c.weight /= total;
    }
    Ok(merged)
}

impl LevyModel {
    /// Validating constructor shared by the named constructors.
    pub fn new(variant: Variant, drift: f64, sigma: f64, jump_rate: f64, claims: &[ClaimComponent]) -> Result<Self> {
        if !drift.is_finite() || !sigma.is_finite() || !jump_rate.is_finite() {
            return Err(Error::invalid("model", "parameters must be finite"));
        }
        if sigma < 0.0 {
            return Err(Error::invalid("model", "sigma must be nonnegative"));
        }
        let claims = match variant {
            Variant::BrownianDrift => {
                if sigma <= 0.0 {
                    return Err(Error::invalid("model", "BrownianDrift needs sigma > 0"));
                }
                if jump_rate != 0.0 || !claims.is_empty() {
                    return Err(Error::invalid("model", "BrownianDrift has no jumps"));
                }
                Vec::new()
            }
            Variant::CramerLundberg | Variant::BrownianPerturbedCL => {
                if variant == Variant::CramerLundberg && sigma != 0.0 {
                    return Err(Error::invalid("model", "CramerLundberg has sigma = 0"));
                }
                if variant == Variant::BrownianPerturbedCL && sigma <= 0.0 {
                    return Err(Error::invalid("model", "BrownianPerturbedCL needs sigma > 0"));
                }
                if drift <= 0.0 {
                    return Err(Error::invalid("model", "premium rate must be positive"));
                }
                if jump_rate <= 0.0 {
                    return Err(Error::invalid("model", "claim arrival rate must be positive"));
                }
                normalize_claims(claims)?
            }
        };
        Ok(LevyModel {
            variant,
            drift,
            sigma,
            jump_rate,
            claims,
        })
    }

    pub fn cramer_lundberg(premium: f64, jump_rate: f64, claims: &[ClaimComponent]) -> Result<Self> {
        Self::new(Variant::CramerLundberg, premium, 0.0, jump_rate, claims)
    }

    /// Cramér–Lundberg model with a single exponential claim law of the given rate.
    pub fn cramer_lundberg_exp(premium: f64, jump_rate: f64, claim_rate: f64) -> Result<Self> {
        Self::cramer_lundberg(premium, jump_rate, &[ClaimComponent::new(1.0, claim_rate)])
    }

    pub fn brownian_drift(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Variant::BrownianDrift, mu, sigma, 0.0, &[])
    }

    pub fn brownian_perturbed_cl(premium: f64, sigma: f64, jump_rate: f64, claims: &[ClaimComponent]) -> Result<Self> {
        Self::new(Variant::BrownianPerturbedCL, premium, sigma, jump_rate, claims)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn drift(&self) -> f64 {
        self.drift
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }
    pub fn claims(&self) -> &[ClaimComponent] {
        &self.claims
    }

    /// Paths of bounded variation (no Gaussian part).
    pub fn has_bounded_variation(&self) -> bool {
        self.sigma == 0.0
    }

    /// Mean claim size, `Σ w_i / r_i` (zero without jumps).
    pub fn mean_claim(&self) -> f64 {
        self.claims.iter().map(|c| c.weight / c.rate).sum()
    }

    /// `ψ(θ)` on the real half-line `θ ≥ 0`.
    pub fn laplace_exponent(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::domain("laplace exponent", format!("theta = {theta} < 0")));
        }
        Ok(self.psi(theta))
    }

    /// `ψ` on the real line, valid to the right of `−min rate` (and
    /// everywhere between poles for the rational continuation).
    pub(crate) fn psi(&self, theta: f64) -> f64 {
        let jumps: f64 = self.claims.iter().map(|c| c.weight * c.rate / (c.rate + theta)).sum();
        let jump_part = if self.claims.is_empty() {
            0.0
        } else {
            -self.jump_rate * (1.0 - jumps)
        };
        self.drift * theta + 0.5 * self.sigma * self.sigma * theta * theta + jump_part
    }

    /// k-th derivative of `ψ` (k ≥ 1) on the real line.
    pub(crate) fn psi_derivative(&self, theta: f64, k: u32) -> f64 {
        debug_assert!(k >= 1);
        let s2 = self.sigma * self.sigma;
        let diffusion = match k {
            1 => self.drift + s2 * theta,
            2 => s2,
            _ => 0.0,
        };
        // d^k/dθ^k [λ Σ w r/(r+θ)] = λ Σ w r (−1)^k k!/(r+θ)^{k+1}
        let mut fact = 1.0;
        for j in 2..=k {
            fact *= j as f64;
        }
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let jumps: f64 = self
            .claims
            .iter()
            .map(|c| c.weight * c.rate / (c.rate + theta).powi(k as i32 + 1))
            .sum();
        diffusion + self.jump_rate * sign * fact * jumps
    }

    /// `ψ` continued to the complex plane (right of all poles).
    pub(crate) fn psi_complex(&self, s: Complex64) -> Complex64 {
        let mut jumps = Complex64::new(0.0, 0.0);
        for c in &self.claims {
            jumps += c.weight * c.rate / (c.rate + s);
        }
        let jump_part = if self.claims.is_empty() {
            Complex64::new(0.0, 0.0)
        } else {
            -self.jump_rate * (1.0 - jumps)
        };
        self.drift * s + 0.5 * self.sigma * self.sigma * s * s + jump_part
    }

    /// `ψ'(0+) = c − λ Σ w_i / r_i`.
    pub fn mean_increment(&self) -> f64 {
        self.drift - self.jump_rate * self.mean_claim()
    }

    /// Sign of `ψ'(0+)`, with a relative zero band of a few ulps.
    pub fn net_profit_sign(&self) -> NetProfit {
        let m = self.mean_increment();
        let scale = self.drift.abs() + self.jump_rate * self.mean_claim();
        if m.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            NetProfit::Zero
        } else if m > 0.0 {
            NetProfit::Positive
        } else {
            NetProfit::Negative
        }
    }

    /// Minimiser of `ψ` on `[0, ∞)`; zero unless `ψ'(0+) < 0`.
    fn argmin_nonneg(&self) -> f64 {
        if self.net_profit_sign() != NetProfit::Negative {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.psi_derivative(hi, 1) <= 0.0 {
            hi *= 2.0;
        }
        bisect(|t| self.psi_derivative(t, 1), 0.0, hi)
    }

    /// `Φ(q)`: the largest root of `ψ(θ) = q`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::domain("phi", format!("q = {q} must be finite and nonnegative")));
        }
        let lo = self.argmin_nonneg();
        if q == 0.0 && lo == 0.0 {
            return Ok(0.0);
        }
        let mut hi = lo.max(1.0);
        while self.psi(hi) <= q {
            hi *= 2.0;
        }
        let f = |t: f64| self.psi(t) - q;
        let root = bisect(f, lo, hi);
        Ok(newton_polish(f, |t| self.psi_derivative(t, 1), root, lo, hi))
    }

    /// The model under the exponentially tilted measure `P^ϑ`.
    ///
    /// `ψ_ϑ(λ) = ψ(λ + ϑ) − ψ(ϑ)`: rates shift to `r_i + ϑ`, weights are
    /// reweighted by `r_i / (r_i + ϑ)`, the arrival rate shrinks accordingly
    /// and the drift picks up `σ²ϑ`.
    pub fn tilt(&self, theta: f64) -> Result<LevyModel> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::domain(
                "tilt",
                format!("theta = {theta} must be finite and nonnegative"),
            ));
        }
        if theta == 0.0 {
            return Ok(self.clone());
        }
        let drift = self.drift + self.sigma * self.sigma * theta;
        if self.claims.is_empty() {
            return Ok(LevyModel { drift, ..self.clone() });
        }
        let raw: Vec<f64> = self
            .claims
            .iter()
            .map(|c| c.weight * c.rate / (c.rate + theta))
            .collect();
        let mass: f64 = raw.iter().sum();
        let claims = self
            .claims
            .iter()
            .zip(&raw)
            .map(|(c, &m)| ClaimComponent::new(m / mass, c.rate + theta))
            .collect();
        Ok(LevyModel {
            variant: self.variant,
            drift,
            sigma: self.sigma,
            jump_rate: self.jump_rate * mass,
            claims,
        })
    }

    /// View of the Lévy measure `ν` of `−X`.
    pub fn jump_measure(&self) -> JumpMeasure<'_> {
        JumpMeasure { model: self }
    }
}

/// The Lévy measure of `−X`: `ν(dz) = λ Σ w_i r_i e^{−r_i z} dz` on `z > 0`.
#[derive(Debug, Clone, Copy)]
pub struct JumpMeasure<'a> {
    model: &'a LevyModel,
}

impl JumpMeasure<'_> {
    pub fn density(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.model.jump_rate
            * self
                .model
                .claims
                .iter()
                .map(|c| c.weight * c.rate * (-c.rate * z).exp())
                .sum::<f64>()
    }

    /// `ν(z, ∞)`; equals the total mass for `z ≤ 0`.
    pub fn tail(&self, z: f64) -> f64 {
        let z = z.max(0.0);
        self.model.jump_rate
            * self
                .model
                .claims
                .iter()
                .map(|c| c.weight * (-c.rate * z).exp())
                .sum::<f64>()
    }

    /// `ν(lo, hi]` for `0 ≤ lo ≤ hi ≤ ∞`.
    pub fn interval(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let upper = if hi.is_infinite() { 0.0 } else { self.tail(hi) };
        self.tail(lo) - upper
    }

    pub fn total_mass(&self) -> f64 {
        if self.model.claims.is_empty() {
            0.0
        } else {
            self.model.jump_rate
        }
    }
}
