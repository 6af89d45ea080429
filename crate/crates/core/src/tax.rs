//! Piecewise-constant tax rates paid out of increments of the running maximum.
//!
//! With rate `γ(s)` charged on `dS` while the pre-tax maximum sits at level
//! `s`, the post-tax maximum reached when the pre-tax maximum is `s` is
//!
//! ```text
//! γ̄(s) = x + ∫_x^s (1 − γ(y)) dy,    s ≥ x,
//! ```
//!
//! a continuous strictly increasing piecewise-linear map. Both it and its
//! inverse are computed exactly from the breakpoints.

use crate::error::{Error, Result};

/// Tax rate function `γ` plus the base level `x` fixing the domain of `γ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxRule {
    /// `(s_k, γ_k)`, strictly increasing `s_k`, `s_0 = 0`.
    pieces: Vec<(f64, f64)>,
    base: f64,
    /// Breakpoints strictly above `base` with `γ̄` at each: `(s_k, γ̄(s_k))`.
    knots: Vec<(f64, f64)>,
}

impl TaxRule {
    /// Builds a rule from `(breakpoint, rate)` pairs.
    ///
    /// The first breakpoint must be `0`, breakpoints must increase strictly
    /// and every rate must lie in `[0, 1)`. The last rate extends to infinity,
    /// so `∫₀^∞ (1 − γ) = ∞` holds automatically.
    pub fn new(base: f64, pieces: &[(f64, f64)]) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::invalid(
                "tax rule",
                format!("base level {base} must be positive"),
            ));
        }
        let Some(&(first, _)) = pieces.first() else {
            return Err(Error::invalid("tax rule", "at least one piece is required"));
        };
        if first != 0.0 {
            return Err(Error::invalid("tax rule", "first breakpoint must be 0"));
        }
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(Error::invalid("tax rule", "breakpoints must increase strictly"));
            }
        }
        for &(_, g) in pieces {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::invalid("tax rule", format!("rate {g} outside [0, 1)")));
            }
        }

        let mut knots = Vec::new();
        let mut level = base;
        let mut value = base;
        for (k, &(s, _)) in pieces.iter().enumerate() {
            if s <= base {
                continue;
            }
            let g_prev = pieces[k - 1].1;
            value += (1.0 - g_prev) * (s - level);
            level = s;
            knots.push((s, value));
        }
        Ok(TaxRule {
            pieces: pieces.to_vec(),
            base,
            knots,
        })
    }

    /// Constant rate `γ` on `[0, ∞)`.
    pub fn constant(base: f64, rate: f64) -> Result<Self> {
        Self::new(base, &[(0.0, rate)])
    }

    /// No taxation.
    pub fn untaxed(base: f64) -> Result<Self> {
        Self::constant(base, 0.0)
    }

    /// Same rate function re-anchored at a new base level.
    pub fn rebased(&self, base: f64) -> Result<Self> {
        Self::new(base, &self.pieces)
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// `Some(γ)` when the rule has a single rate.
    pub fn constant_rate(&self) -> Option<f64> {
        match self.pieces.as_slice() {
            [(_, g)] => Some(*g),
            _ => None,
        }
    }

    pub fn is_untaxed(&self) -> bool {
        self.pieces.iter().all(|&(_, g)| g == 0.0)
    }

    pub fn max_rate(&self) -> f64 {
        self.pieces.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    fn piece_index(&self, s: f64) -> usize {
        // last k with s_k <= s
        self.pieces.partition_point(|p| p.0 <= s) - 1
    }

    /// `γ(s)`, right-continuous at breakpoints.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::domain("tax rate", format!("s = {s} < 0")));
        }
        Ok(self.pieces[self.piece_index(s)].1)
    }

    /// Next breakpoint strictly above `s`, if any.
    pub fn next_breakpoint(&self, s: f64) -> Option<f64> {
        let i = self.pieces.partition_point(|p| p.0 <= s);
        self.pieces.get(i).map(|p| p.0)
    }

    /// `γ̄(s) = x + ∫_x^s (1 − γ)`.
    pub fn gamma_bar(&self, s: f64) -> Result<f64> {
        if !(s >= self.base) {
            return Err(Error::domain(
                "gamma bar",
                format!("s = {s} below base level {}", self.base),
            ));
        }
        let i = self.knots.partition_point(|k| k.0 <= s);
        let (level, value) = if i == 0 {
            (self.base, self.base)
        } else {
            self.knots[i - 1]
        };
        let g = self.pieces[self.piece_index(level)].1;
        Ok(value + (1.0 - g) * (s - level))
    }

    /// Inverse of [`gamma_bar`](Self::gamma_bar) on `[x, ∞)`.
    pub fn gamma_bar_inv(&self, y: f64) -> Result<f64> {
        if !(y >= self.base) {
            return Err(Error::domain(
                "gamma bar inverse",
                format!("y = {y} below base level {}", self.base),
            ));
        }
        let i = self.knots.partition_point(|k| k.1 <= y);
        let (level, value) = if i == 0 {
            (self.base, self.base)
        } else {
            self.knots[i - 1]
        };
        let g = self.pieces[self.piece_index(level)].1;
        Ok(level + (y - value) / (1.0 - g))
    }

    /// `d/dy γ̄⁻¹(y) = 1 / (1 − γ(γ̄⁻¹(y)))`, right derivative at knots.
    pub fn gamma_bar_inv_slope(&self, y: f64) -> Result<f64> {
        let s = self.gamma_bar_inv(y)?;
        Ok(1.0 / (1.0 - self.gamma(s)?))
    }

    /// Tax accumulated while the running maximum climbs from `x` to `s`:
    /// `∫_x^s γ = s − γ̄(s)`.
    pub fn tax_paid(&self, s: f64) -> Result<f64> {
        Ok(s - self.gamma_bar(s)?)
    }

    /// Breakpoints above the base level, in pre-tax (`s`) coordinates.
    pub fn breakpoints_above_base(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.0).collect()
    }

    /// Breakpoints above the base level mapped through `γ̄`, i.e. the levels
    /// of the post-tax maximum where the effective rate changes.
    pub fn retained_breakpoints(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.1).collect()
    }
}
