//! The exponent shared by the exit, tax and Gerber–Shiu identities,
//!
//! ```text
//! I(u) = ∫_x^u W^(q)'(v) / [W^(q)(v) (1 − γ(γ̄⁻¹(v)))] dv,
//! ```
//!
//! tabulated once on an adaptive grid and interpolated with cubic Hermite
//! polynomials, using the integrand itself as the slope at each knot.

use crate::error::{Error, Result};
use crate::quad::{gk21, try_integrate, QuadOptions};
use crate::scale::{ScaleEngine, ScaleFunction};
use crate::tax::TaxRule;

// Initial cell width before refinement.
const START_WIDTH: f64 = 0.5;
const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: f64,
    hi: f64,
    value: f64,
    slope_lo: f64,
    slope_hi: f64,
}

/// Integrand `W'(u) / W(u) / (1 − γ(γ̄⁻¹(u)))` at `u`, with the rate taken on
/// the piece containing `γ̄⁻¹(u)` (right-continuous).
pub fn exponent_integrand(engine: &ScaleEngine, rule: &TaxRule, u: f64) -> Result<f64> {
    Ok(engine.log_derivative(u)? * rule.gamma_bar_inv_slope(u)?)
}

/// Cumulative exponent `I(u)` on `[x, upper]` for one scale engine and rule.
#[derive(Debug, Clone)]
pub struct CumulativeExponent {
    engine: ScaleEngine,
    rule: TaxRule,
    cells: Vec<Cell>,
    upper: f64,
    total: f64,
    cell_tol: f64,
}

impl CumulativeExponent {
    /// Tabulates `I` up to `upper` with interpolation error per cell below
    /// `tol / 100`.
    pub fn new(engine: ScaleEngine, rule: TaxRule, upper: f64, tol: f64) -> Result<Self> {
        let x = rule.base();
        if !(upper > x) {
            return Err(Error::domain(
                "cumulative exponent",
                format!("upper {upper} must exceed {x}"),
            ));
        }
        let mut table = CumulativeExponent {
            engine,
            rule,
            cells: Vec::new(),
            upper: x,
            total: 0.0,
            cell_tol: tol * 1e-2,
        };
        table.extend_to(upper)?;
        Ok(table)
    }

    pub fn engine(&self) -> &ScaleEngine {
        &self.engine
    }

    pub fn rule(&self) -> &TaxRule {
        &self.rule
    }

    /// Right end of the tabulated range.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Grows the table so that it covers `[x, upper]`.
    pub fn extend_to(&mut self, upper: f64) -> Result<()> {
        if upper <= self.upper {
            return Ok(());
        }
        let mut edges = vec![self.upper];
        edges.extend(
            self.rule
                .retained_breakpoints()
                .into_iter()
                .filter(|&b| b > self.upper && b < upper),
        );
        edges.push(upper);
        for w in edges.windows(2) {
            let n = ((w[1] - w[0]) / START_WIDTH).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / n as f64;
            for i in 0..n {
                let lo = w[0] + i as f64 * h;
                let hi = if i + 1 == n { w[1] } else { lo + h };
                self.refine(lo, hi, 0)?;
            }
        }
        self.upper = upper;
        Ok(())
    }

    fn refine(&mut self, lo: f64, hi: f64, depth: u32) -> Result<()> {
        let mid = 0.5 * (lo + hi);
        // The rate is constant inside a cell, as cells never straddle knots.
        let weight = self.rule.gamma_bar_inv_slope(mid)?;
        let engine = &self.engine;
        let mut g = |u: f64| Ok(engine.log_derivative(u)? * weight);
        let whole = gk21(&mut g, lo, hi)?;
        let left = gk21(&mut g, lo, mid)?;
        let slope_lo = g(lo)?;
        let slope_hi = g(hi)?;
        let h = hi - lo;
        // Hermite cubic through (0, 0, slope_lo) and (h, whole, slope_hi) at h/2.
        let herm_mid = 0.5 * whole.value + 0.125 * h * (slope_lo - slope_hi);
        let interp_err = (herm_mid - left.value).abs();
        if (interp_err <= self.cell_tol && whole.error <= self.cell_tol) || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && interp_err > self.cell_tol {
                return Err(Error::Accuracy {
                    what: "cumulative exponent table",
                    requested: self.cell_tol,
                    achieved: interp_err,
                });
            }
            self.cells.push(Cell {
                lo,
                hi,
                value: self.total,
                slope_lo,
                slope_hi,
            });
            self.total += whole.value;
            return Ok(());
        }
        self.refine(lo, mid, depth + 1)?;
        self.refine(mid, hi, depth + 1)
    }

    /// `I(u)` for `u ≥ x`. Beyond the table the remainder is integrated
    /// directly.
    pub fn eval(&self, u: f64) -> Result<f64> {
        let x = self.rule.base();
        if !(u >= x) {
            return Err(Error::domain(
                "cumulative exponent",
                format!("u = {u} below base level {x}"),
            ));
        }
        if u > self.upper {
            let rest = try_integrate(
                |v| exponent_integrand(&self.engine, &self.rule, v),
                self.upper,
                u,
                &self.rule.retained_breakpoints(),
                &QuadOptions::with_tol(self.cell_tol),
            )?;
            return Ok(self.total + rest.value);
        }
        if u == x {
            return Ok(0.0);
        }
        let i = self.cells.partition_point(|c| c.lo < u) - 1;
        let c = &self.cells[i];
        let h = c.hi - c.lo;
        let next = self.cells.get(i + 1).map_or(self.total, |n| n.value);
        let t = (u - c.lo) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * c.value
            + (t3 - 2.0 * t2 + t) * h * c.slope_lo
            + (-2.0 * t3 + 3.0 * t2) * next
            + (t3 - t2) * h * c.slope_hi)
    }

    /// Number of interpolation cells (diagnostic).
    pub fn cells(&self) -> usize {
        self.cells.len()
    }

    #[cfg(test)]
    fn edges(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.lo).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyModel;

    #[test]
    fn matches_direct_quadrature() {
        let m = LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).unwrap();
        let rule = TaxRule::new(2.0, &[(0.0, 0.2), (3.0, 0.5)]).unwrap();
        let e = ScaleEngine::new(&m, 0.1).unwrap();
        let table = CumulativeExponent::new(e.clone(), rule.clone(), 12.0, 1e-10).unwrap();
        let opts = QuadOptions::with_tol(1e-13);
        for i in 0..=97 {
            let u = 2.0 + i as f64 * 0.1;
            let direct = try_integrate(
                |v| exponent_integrand(&e, &rule, v),
                2.0,
                u,
                &rule.retained_breakpoints(),
                &opts,
            )
            .unwrap()
            .value;
            assert!((table.eval(u).unwrap() - direct).abs() < 1e-10, "u={u}");
        }
        // beyond the table
        let direct = try_integrate(
            |v| exponent_integrand(&e, &rule, v),
            2.0,
            15.0,
            &rule.retained_breakpoints(),
            &opts,
        )
        .unwrap()
        .value;
        assert!((table.eval(15.0).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn untaxed_exponent_is_log_ratio() {
        let m = LevyModel::brownian_perturbed_cl(2.0, 0.5, 1.0, &[crate::levy::ClaimComponent::new(1.0, 1.5)]).unwrap();
        let rule = TaxRule::untaxed(0.5).unwrap();
        let e = ScaleEngine::new(&m, 0.3).unwrap();
        let table = CumulativeExponent::new(e.clone(), rule, 10.0, 1e-10).unwrap();
        for &u in &[0.5, 0.7, 3.3, 9.99] {
            let exact = (e.w(u).unwrap() / e.w(0.5).unwrap()).ln();
            assert!((table.eval(u).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn cells_never_straddle_breakpoints() {
        let m = LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).unwrap();
        let rule = TaxRule::new(1.0, &[(0.0, 0.1), (2.0, 0.6), (4.0, 0.3)]).unwrap();
        let table = CumulativeExponent::new(ScaleEngine::new(&m, 0.0).unwrap(), rule.clone(), 8.0, 1e-9).unwrap();
        let edges = table.edges();
        for knot in rule.retained_breakpoints() {
            assert!(edges.contains(&knot), "{knot} is not a cell edge");
        }
        assert!(table.cells() > 10);
    }
}
