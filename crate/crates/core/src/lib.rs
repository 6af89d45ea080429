//! Ruin identities for a spectrally negative Lévy surplus that pays tax at a
//! level-dependent rate whenever it reaches a new maximum.
//!
//! - [`levy`]: the risk models, their Laplace exponent `ψ` and `Φ`.
//! - [`scale`]: q-scale functions in closed form or by Laplace inversion.
//! - [`tax`]: piecewise constant tax rules and the retained-level map `γ̄`.
//! - [`identities`]: two-sided exit, present value of tax, and the joint law
//!   at ruin of the last payment time, maximum, pre-ruin surplus and deficit.
//! - [`montecarlo`]: exact and Euler simulation of the taxed surplus.
//! - [`verify`]: the acceptance checks behind `taxed-ruin verify`.
//!
//! ```
//! use taxed_ruin::identities::{tax_npv, two_sided_exit, ExitQuery};
//! use taxed_ruin::quad::QuadOptions;
//! use taxed_ruin::{LevyModel, TaxRule};
//!
//! let model = LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0)?;
//! let rule = TaxRule::new(2.0, &[(0.0, 0.2), (3.0, 0.5)])?;
//! let opts = QuadOptions::default();
//! let reach = two_sided_exit(&ExitQuery { model: &model, rule: &rule, q: 0.05, x: 2.0, a: 5.0 }, &opts)?;
//! let npv = tax_npv(&model, &rule, 0.1, 2.0, &opts)?;
//! assert!(reach > 0.0 && reach < 1.0 && npv > 0.0);
//! # Ok::<(), taxed_ruin::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod identities;
pub mod inversion;
pub mod levy;
pub mod montecarlo;
pub mod quad;
pub mod roots;
pub mod scale;
pub mod tax;
pub mod verify;

pub use error::{Error, Result};
pub use levy::{ClaimComponent, JumpMeasure, LevyModel, NetProfit, Variant};
pub use scale::{Method, ScaleEngine, ScaleFunction};
pub use tax::TaxRule;

// The book's code listings run as doctests; one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/scale_functions.md")]
    mod scale_functions {}
    #[doc = include_str!("../../../book/src/tax_rule.md")]
    mod tax_rule {}
    #[doc = include_str!("../../../book/src/exit.md")]
    mod exit {}
    #[doc = include_str!("../../../book/src/npv.md")]
    mod npv {}
    #[doc = include_str!("../../../book/src/gerber_shiu.md")]
    mod gerber_shiu {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
