//! q-scale functions `W^(q)` and their derivatives.
//!
//! `W^(q)` vanishes on the negative half-line and is characterised on
//! `[0, ∞)` by
//!
//! ```text
//! ∫₀^∞ e^{−λx} W^(q)(x) dx = 1 / (ψ(λ) − q),   λ > Φ(q).
//! ```
//!
//! For the hyperexponential family `ψ` is rational, every root `λ_j` of
//! `ψ(λ) = q` is real and simple (up to the double root at zero when `q = 0`
//! and `ψ'(0+) = 0`), and the partial-fraction expansion gives
//!
//! ```text
//! W^(q)(x) = Σ_j e^{λ_j x} / ψ'(λ_j).
//! ```
//!
//! [`Method::LaplaceInversion`] recovers the same values from the transform
//! alone and serves as the generic route and as a cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inversion::{euler_invert, InversionParams};
use crate::levy::{LevyModel, NetProfit};
use crate::roots::{bisect, newton_polish};

/// How an engine evaluates `W^(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    LaplaceInversion,
}

/// Anything that can evaluate a q-scale function of a known model.
///
/// Checks that only need values of `W^(q)` are written against this trait so
/// they can be run on deliberately broken implementations as well.
pub trait ScaleFunction {
    fn model(&self) -> &LevyModel;
    /// The discount rate `q`.
    fn rate(&self) -> f64;
    /// `Φ(q)`.
    fn phi(&self) -> f64;
    /// `W^(q)` (order 0), `W^(q)'` (1) or `W^(q)''` (2) at `x`.
    fn eval(&self, x: f64, order: u8) -> Result<f64>;

    fn w(&self, x: f64) -> Result<f64> {
        self.eval(x, 0)
    }
    fn w_prime(&self, x: f64) -> Result<f64> {
        self.eval(x, 1)
    }
    fn w_second(&self, x: f64) -> Result<f64> {
        self.eval(x, 2)
    }

    /// `W^(q)'(x) / W^(q)(x)`; for `q = 0` this is the excursion tail `n(ε̄ > x)`.
    fn log_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain("log derivative", format!("x = {x} must be positive")));
        }
        Ok(self.eval(x, 1)? / self.eval(x, 0)?)
    }
}

#[derive(Debug, Clone)]
enum Expansion {
    /// `(2/σ²) e^{m x} sinh(d x) / d`.
    Hyperbolic { m: f64, d: f64, scale: f64 },
    /// `Σ c_j e^{λ_j x}` plus an optional double-root term `e^{λ₀x}(A x + B)`.
    Residues {
        simple: Vec<(f64, f64)>,
        double: Option<(f64, f64, f64)>,
    },
    Inversion {
        params: InversionParams,
        /// `W^(q)'(0+)`, needed to invert the derivative transforms.
        w1_zero: f64,
    },
}

/// Evaluator for `W^(q)` of a fixed model and rate.
///
/// All root and residue tables are computed at construction; evaluation is
/// pure and the engine can be shared across threads.
#[derive(Debug, Clone)]
pub struct ScaleEngine {
    model: LevyModel,
    q: f64,
    phi: f64,
    method: Method,
    w_at_zero: f64,
    expansion: Expansion,
}

impl ScaleEngine {
    /// Closed-form engine.
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        Self::with_method(model, q, Method::ClosedForm, InversionParams::default())
    }

    /// Engine for the model tilted by `ϑ`, evaluated at rate `q`.
    pub fn tilted(model: &LevyModel, theta: f64, q: f64) -> Result<Self> {
        Self::new(&model.tilt(theta)?, q)
    }

    pub fn with_method(model: &LevyModel, q: f64, method: Method, params: InversionParams) -> Result<Self> {
        let phi = model.phi(q)?;
        let w_at_zero = if model.has_bounded_variation() {
            1.0 / model.drift()
        } else {
            0.0
        };
        let expansion = match method {
            Method::ClosedForm if model.claims().is_empty() => hyperbolic(model, q),
            Method::ClosedForm => residues(model, q, phi)?,
            Method::LaplaceInversion => {
                if !(params.terms > 0 && params.target_rel_tol > 0.0 && params.target_rel_tol < 1.0) {
                    return Err(Error::invalid("inversion parameters", "need terms > 0 and 0 < tol < 1"));
                }
                let w1_zero = if model.has_bounded_variation() {
                    (q + model.jump_measure().total_mass()) / (model.drift() * model.drift())
                } else {
                    2.0 / (model.sigma() * model.sigma())
                };
                Expansion::Inversion { params, w1_zero }
            }
        };
        Ok(ScaleEngine {
            model: model.clone(),
            q,
            phi,
            method,
            w_at_zero,
            expansion,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `W^(q)(0)`: `1/c` for bounded variation, `0` with a Gaussian part.
    pub fn w_at_zero(&self) -> f64 {
        self.w_at_zero
    }

    /// Real roots of `ψ(λ) = q` used by the closed form (empty otherwise).
    pub fn roots(&self) -> Vec<f64> {
        match &self.expansion {
            Expansion::Hyperbolic { m, d, .. } => vec![m + d, m - d],
            Expansion::Residues { simple, double } => {
                let mut r: Vec<f64> = simple.iter().map(|p| p.0).collect();
                if let Some((l, _, _)) = double {
                    r.push(*l);
                    r.push(*l);
                }
                r
            }
            Expansion::Inversion { .. } => Vec::new(),
        }
    }

    fn eval_nonneg(&self, x: f64, order: u8) -> f64 {
        let k = order as i32;
        match &self.expansion {
            Expansion::Hyperbolic { m, d, scale } => {
                let (m, d) = (*m, *d);
                let s = if d == 0.0 { x } else { (d * x).sinh() / d };
                let ch = (d * x).cosh();
                let inner = match order {
                    0 => s,
                    1 => m * s + ch,
                    _ => m * m * s + 2.0 * m * ch + d * d * s,
                };
                scale * (m * x).exp() * inner
            }
            Expansion::Residues { simple, double } => {
                let mut v: f64 = simple.iter().map(|&(l, c)| c * l.powi(k) * (l * x).exp()).sum();
                if let Some((l, a, b)) = *double {
                    let base = a * x + b;
                    let poly = match order {
                        0 => base,
                        1 => l * base + a,
                        _ => l * l * base + 2.0 * l * a,
                    };
                    v += (l * x).exp() * poly;
                }
                v
            }
            Expansion::Inversion { params, w1_zero } => self.invert(x, order, params, *w1_zero),
        }
    }

    fn invert(&self, x: f64, order: u8, params: &InversionParams, w1_zero: f64) -> f64 {
        let s2 = self.model.sigma() * self.model.sigma();
        if x == 0.0 {
            return match order {
                0 => self.w_at_zero,
                1 => w1_zero,
                _ => -4.0 * self.model.drift() / (s2 * s2),
            };
        }
        // Invert the transform of V(x) = e^{−Φx} W(x), which stays bounded
        // (or grows linearly in the oscillating q = 0 case).
        let c = self.phi;
        let q = self.q;
        let v0 = self.w_at_zero;
        let v1 = w1_zero - c * v0;
        let g = |s: Complex64| 1.0 / (self.model.psi_complex(s + c) - q);
        let v = euler_invert(|s| g(s).re, x, params);
        if order == 0 {
            return (c * x).exp() * v;
        }
        let dv = euler_invert(|s| (s * g(s) - v0).re, x, params);
        if order == 1 {
            return (c * x).exp() * (c * v + dv);
        }
        let ddv = euler_invert(|s| (s * s * g(s) - s * v0 - v1).re, x, params);
        (c * x).exp() * (c * c * v + 2.0 * c * dv + ddv)
    }
}

impl ScaleFunction for ScaleEngine {
    fn model(&self) -> &LevyModel {
        &self.model
    }
    fn rate(&self) -> f64 {
        self.q
    }
    fn phi(&self) -> f64 {
        self.phi
    }

    fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::domain("scale function", format!("order {order} not in 0..=2")));
        }
        if order == 2 && self.model.has_bounded_variation() {
            return Err(Error::UnsupportedSmoothness);
        }
        if x.is_nan() {
            return Err(Error::domain("scale function", "x is NaN"));
        }
        if x < 0.0 {
            return if order == 0 {
                Ok(0.0)
            } else {
                Err(Error::domain("scale function", format!("derivative at x = {x} < 0")))
            };
        }
        if x == 0.0 && order == 0 {
            return Ok(self.w_at_zero);
        }
        Ok(self.eval_nonneg(x, order))
    }
}

fn hyperbolic(model: &LevyModel, q: f64) -> Expansion {
    let s2 = model.sigma() * model.sigma();
    let mu = model.drift();
    let delta = (mu * mu + 2.0 * q * s2).sqrt();
    Expansion::Hyperbolic {
        m: -mu / s2,
        d: delta / s2,
        scale: 2.0 / s2,
    }
}

/// Locates every real root of `ψ(λ) = q` for a model with jumps.
///
/// Poles of `ψ` sit at `−r_i`. On `(−r_min, ∞)` `ψ` is convex and carries
/// two roots (left of and right of its minimiser); each gap between
/// consecutive poles carries one; with a Gaussian part one more lies below
/// the last pole.
fn residues(model: &LevyModel, q: f64, phi: f64) -> Result<Expansion> {
    let poles: Vec<f64> = model.claims().iter().map(|c| -c.rate).collect();
    let first_pole = poles[0];
    let f = |l: f64| model.psi(l) - q;
    let df = |l: f64| model.psi_derivative(l, 1);

    let mut hi = 1.0;
    while df(hi) <= 0.0 {
        hi *= 2.0;
    }
    let argmin = bisect(df, first_pole, hi);

    let mut simple = Vec::new();
    let mut double = None;
    let degenerate = q == 0.0 && model.net_profit_sign() == NetProfit::Zero;
    if degenerate {
        // ψ(λ) ≈ a₂λ² + a₃λ³ near 0: residue of e^{λx}/ψ is x/a₂ − a₃/a₂².
        let a2 = 0.5 * model.psi_derivative(0.0, 2);
        let a3 = model.psi_derivative(0.0, 3) / 6.0;
        double = Some((0.0, 1.0 / a2, -a3 / (a2 * a2)));
    } else {
        simple.push(phi);
        let left = if q == 0.0 && phi > 0.0 {
            0.0
        } else {
            let r = bisect(f, first_pole, argmin);
            newton_polish(f, df, r, first_pole, argmin)
        };
        simple.push(left);
    }
    for w in poles.windows(2) {
        let (right, left) = (w[0], w[1]);
        let r = bisect(f, left, right);
        simple.push(newton_polish(f, df, r, left, right));
    }
    if !model.has_bounded_variation() {
        let last = *poles.last().unwrap();
        let mut lo = last - 1.0;
        while f(lo) <= 0.0 {
            lo = last - 2.0 * (last - lo);
        }
        let r = bisect(f, lo, last);
        simple.push(newton_polish(f, df, r, lo, last));
    }

    let expected = poles.len() + if model.has_bounded_variation() { 1 } else { 2 };
    let found = simple.len() + if double.is_some() { 2 } else { 0 };
    if found != expected {
        return Err(Error::invalid(
            "scale expansion",
            format!("found {found} roots, expected {expected}"),
        ));
    }
    let simple = simple
        .into_iter()
        .map(|l| (l, 1.0 / model.psi_derivative(l, 1)))
        .collect();
    Ok(Expansion::Residues { simple, double })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::ClaimComponent;
    use crate::quad::{integrate, QuadOptions};

    fn cl() -> LevyModel {
        LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).unwrap()
    }
    fn bm() -> LevyModel {
        LevyModel::brownian_drift(0.0, 2f64.sqrt()).unwrap()
    }
    fn perturbed() -> LevyModel {
        LevyModel::brownian_perturbed_cl(
            2.0,
            0.5,
            1.2,
            &[ClaimComponent::new(0.4, 0.8), ClaimComponent::new(0.6, 3.0)],
        )
        .unwrap()
    }
    fn hyperexp_cl() -> LevyModel {
        LevyModel::cramer_lundberg(
            1.3,
            1.0,
            &[
                ClaimComponent::new(0.2, 0.5),
                ClaimComponent::new(0.5, 2.0),
                ClaimComponent::new(0.3, 6.0),
            ],
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn brownian_q0_is_identity() {
        let e = ScaleEngine::new(&bm(), 0.0).unwrap();
        for &x in &[0.0, 0.5, 3.0, 10.0] {
            assert!((e.w(x).unwrap() - x).abs() < 1e-14);
            assert!((e.w_prime(x).unwrap() - 1.0).abs() < 1e-14);
            assert!(e.w_second(x).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn brownian_q1_is_sinh() {
        let e = ScaleEngine::new(&bm(), 1.0).unwrap();
        for &x in &[0.5, 1.0, 4.0] {
            assert!(rel(e.w(x).unwrap(), x.sinh()) < 1e-14);
            assert!(rel(e.w_prime(x).unwrap(), x.cosh()) < 1e-14);
            assert!(rel(e.log_derivative(x).unwrap(), x.cosh() / x.sinh()) < 1e-14);
        }
    }

    #[test]
    fn cramer_lundberg_boundary_values() {
        for q in [0.0, 0.1, 2.0] {
            let e = ScaleEngine::new(&cl(), q).unwrap();
            assert!((e.w(0.0).unwrap() - 1.0 / 1.5).abs() < 1e-15);
            // sum of residues reproduces W(0+) = 1/c
            assert!((e.eval_nonneg(0.0, 0) - 1.0 / 1.5).abs() < 1e-13);
            assert!((e.w_prime(0.0).unwrap() - (q + 1.0) / 2.25).abs() < 1e-12);
        }
        let e = ScaleEngine::new(&perturbed(), 0.3).unwrap();
        assert!(e.eval_nonneg(0.0, 0).abs() < 1e-13);
        assert!((e.w_prime(0.0).unwrap() - 2.0 / 0.25).abs() < 1e-10);
        assert!((e.w_second(0.0).unwrap() + 4.0 * 2.0 / 0.0625).abs() < 1e-8);
    }

    #[test]
    fn cramer_lundberg_exp_closed_form() {
        // Two-exponential form from the quadratic 1.5λ² + (0.5 − q)λ − q = 0.
        let q = 0.1;
        let e = ScaleEngine::new(&cl(), q).unwrap();
        let disc = ((0.5f64 - q).powi(2) + 6.0 * q).sqrt();
        let (r1, r2) = ((-(0.5 - q) + disc) / 3.0, (-(0.5 - q) - disc) / 3.0);
        let dpsi = |l: f64| 1.5 - 1.0 / (1.0 + l).powi(2);
        let w = |x: f64| (r1 * x).exp() / dpsi(r1) + (r2 * x).exp() / dpsi(r2);
        assert!(rel(e.w(2.0).unwrap(), w(2.0)) < 1e-13);
    }

    #[test]
    fn oscillating_double_root() {
        // c = λ/μ: ψ(θ) = θ − θ/(1+θ) = θ²/(1+θ), so 1/ψ = 1/θ² + 1/θ and W(x) = x + 1.
        let m = LevyModel::cramer_lundberg_exp(1.0, 1.0, 1.0).unwrap();
        let e = ScaleEngine::new(&m, 0.0).unwrap();
        for &x in &[0.0, 1.0, 7.5] {
            assert!((e.w(x).unwrap() - (x + 1.0)).abs() < 1e-13);
            assert!((e.w_prime(x).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn second_derivative_requires_gaussian_part() {
        let e = ScaleEngine::new(&cl(), 0.1).unwrap();
        assert_eq!(e.w_second(1.0), Err(Error::UnsupportedSmoothness));
        assert!(matches!(e.w_prime(-1.0), Err(Error::Domain { .. })));
        assert_eq!(e.w(-1.0).unwrap(), 0.0);
        assert!(matches!(e.log_derivative(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in [cl(), perturbed(), hyperexp_cl(), bm()] {
            let e = ScaleEngine::new(&m, 0.2).unwrap();
            for &x in &[0.3f64, 1.0, 2.5, 6.0] {
                let h = 1e-5 * x.max(1.0);
                let fd = (e.w(x + h).unwrap() - e.w(x - h).unwrap()) / (2.0 * h);
                assert!(rel(e.w_prime(x).unwrap(), fd) < 1e-6);
                if !m.has_bounded_variation() {
                    let fd2 = (e.w_prime(x + h).unwrap() - e.w_prime(x - h).unwrap()) / (2.0 * h);
                    assert!(rel(e.w_second(x).unwrap(), fd2) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn monotone_and_nonnegative() {
        for m in [cl(), perturbed(), hyperexp_cl()] {
            let e = ScaleEngine::new(&m, 0.05).unwrap();
            let mut last = e.w(0.0).unwrap();
            assert!(last >= 0.0);
            for i in 1..200 {
                let v = e.w(i as f64 * 0.1).unwrap();
                assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn log_derivative_tends_to_phi() {
        let e = ScaleEngine::new(&cl(), 0.1).unwrap();
        let phi = e.phi();
        let d20 = e.log_derivative(20.0).unwrap();
        let d40 = e.log_derivative(40.0).unwrap();
        assert!(d20 >= d40 && d40 >= phi);
        assert!((d40 - phi).abs() < 1e-4);
    }

    #[test]
    fn closed_form_matches_inversion() {
        for m in [cl(), perturbed(), hyperexp_cl(), bm()] {
            for q in [0.0, 0.1, 1.0] {
                let cf = ScaleEngine::new(&m, q).unwrap();
                let inv =
                    ScaleEngine::with_method(&m, q, Method::LaplaceInversion, InversionParams::default()).unwrap();
                for i in 0..=40 {
                    let x = 0.1 + i as f64 * (19.9 / 40.0);
                    for order in 0..=1u8 {
                        let a = cf.eval(x, order).unwrap();
                        let b = inv.eval(x, order).unwrap();
                        assert!(
                            rel(b, a) <= 1e-6,
                            "{:?} q={q} x={x} order={order}: {a} vs {b}",
                            m.variant()
                        );
                    }
                    if !m.has_bounded_variation() {
                        let a = cf.w_second(x).unwrap();
                        let b = inv.w_second(x).unwrap();
                        // W'' crosses zero when q = 0, so measure it against the size of W.
                        assert!(
                            (a - b).abs() <= 1e-6 * a.abs().max(cf.w(x).unwrap()),
                            "second {:?} q={q} x={x}: {a} vs {b} (W {})",
                            m.variant(),
                            cf.w(x).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn laplace_transform_matches_exponent() {
        let opts = QuadOptions::with_tol(1e-12);
        for m in [hyperexp_cl(), perturbed()] {
            for q in [0.0, 0.5] {
                let e = ScaleEngine::new(&m, q).unwrap();
                let lambda = 2.0 * e.phi() + 1.0;
                let upper = 60.0 / (lambda - e.phi());
                let r = integrate(|x| (-lambda * x).exp() * e.w(x).unwrap(), 0.0, upper, &[], &opts).unwrap();
                let exact = 1.0 / (m.psi(lambda) - q);
                assert!(rel(r.value, exact) < 1e-8);
            }
        }
    }

    #[test]
    fn tilting_identity() {
        for m in [cl(), bm(), perturbed(), hyperexp_cl()] {
            for q in [0.1, 1.0] {
                let e = ScaleEngine::new(&m, q).unwrap();
                let t = ScaleEngine::tilted(&m, e.phi(), 0.0).unwrap();
                for i in 1..=20 {
                    let x = 0.5 * i as f64;
                    let lhs = e.w(x).unwrap();
                    let rhs = (e.phi() * x).exp() * t.w(x).unwrap();
                    assert!(rel(lhs, rhs) < 1e-8);
                    let shift = e.log_derivative(x).unwrap() - e.phi();
                    assert!((t.log_derivative(x).unwrap() - shift).abs() < 1e-8);
                }
            }
        }
    }
}
