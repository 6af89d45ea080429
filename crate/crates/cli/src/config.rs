//! JSON run configuration.
//!
//! ```json
//! {
//!   "model": {"variant": "cramer_lundberg", "premium": 1.5, "jump_rate": 1.0, "claims": [[1.0, 1.0]]},
//!   "tax": {"x": 2.0, "pieces": [[0.0, 0.2], [3.0, 0.5]]},
//!   "query": {"functional": "exit", "q": [0.05], "a": {"from": 3.0, "to": 8.0, "n": 6}},
//!   "sim": {"n_paths": 100000, "seed": 7},
//!   "output": {"tolerance": 1e-9}
//! }
//! ```
//!
//! Claims are `[weight, rate]` pairs of an exponential mixture; tax pieces
//! are `[breakpoint, rate]`. Grids are either explicit lists or
//! `{from, to, n}` with `n` evenly spaced points including both ends.

use std::path::Path;

use serde::{Deserialize, Serialize};
use taxed_ruin::{ClaimComponent, LevyModel, TaxRule};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tax: Option<TaxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QueryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    CramerLundberg {
        premium: f64,
        jump_rate: f64,
        claims: Vec<[f64; 2]>,
    },
    BrownianDrift {
        drift: f64,
        sigma: f64,
    },
    BrownianPerturbedCl {
        premium: f64,
        sigma: f64,
        jump_rate: f64,
        claims: Vec<[f64; 2]>,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<LevyModel, CliError> {
        let claims = |c: &[[f64; 2]]| c.iter().map(|&[w, r]| ClaimComponent::new(w, r)).collect::<Vec<_>>();
        let model = match self {
            ModelConfig::CramerLundberg {
                premium,
                jump_rate,
                claims: c,
            } => LevyModel::cramer_lundberg(*premium, *jump_rate, &claims(c)),
            ModelConfig::BrownianDrift { drift, sigma } => LevyModel::brownian_drift(*drift, *sigma),
            ModelConfig::BrownianPerturbedCl {
                premium,
                sigma,
                jump_rate,
                claims: c,
            } => LevyModel::brownian_perturbed_cl(*premium, *sigma, *jump_rate, &claims(c)),
        };
        model.map_err(|e| CliError::Config(format!("model: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxConfig {
    pub x: f64,
    pub pieces: Vec<[f64; 2]>,
}

impl TaxConfig {
    pub fn build(&self) -> Result<TaxRule, CliError> {
        let pieces: Vec<(f64, f64)> = self.pieces.iter().map(|&[s, g]| (s, g)).collect();
        TaxRule::new(self.x, &pieces).map_err(|e| CliError::Config(format!("tax: {e}")))
    }
}

/// Explicit list of values or `n` evenly spaced points on `[from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { from: f64, to: f64, n: usize },
}

impl Grid {
    pub fn points(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { from, to, n } => match n {
                0 => Vec::new(),
                1 => vec![*from],
                _ => (0..*n)
                    .map(|i| {
                        if i + 1 == *n {
                            *to
                        } else {
                            from + (to - from) * i as f64 / (*n - 1) as f64
                        }
                    })
                    .collect(),
            },
        };
        if pts.is_empty() {
            return Err(CliError::Config(format!("{field}: grid is empty")));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("{field}: grid values must be finite")));
        }
        Ok(pts)
    }
}

/// Half-open box `(lo, hi]` per coordinate; `null` upper ends mean infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub theta: (f64, Option<f64>),
    pub y: (f64, Option<f64>),
    pub z: (f64, Option<f64>),
}

impl RegionConfig {
    pub fn build(&self) -> taxed_ruin::identities::GsRegion {
        let r = |(lo, hi): (f64, Option<f64>)| (lo, hi.unwrap_or(f64::INFINITY));
        taxed_ruin::identities::GsRegion {
            theta: r(self.theta),
            y: r(self.y),
            z: r(self.z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case", deny_unknown_fields)]
pub enum QueryConfig {
    /// Two-sided exit transform over a grid of rates and barriers.
    Exit {
        q: Grid,
        a: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
    },
    /// Present value of tax paid until ruin.
    Npv {
        q: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
    },
    /// Gerber–Shiu density on a `(θ, y, z)` grid.
    GsDensity {
        alpha: f64,
        beta: f64,
        theta: Grid,
        y: Grid,
        z: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
    },
    /// Creeping density on a `θ` grid.
    GsCreep {
        alpha: f64,
        beta: f64,
        theta: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
    },
    /// Gerber–Shiu masses of a box, of creeping and of all ruin.
    GsMass {
        alpha: f64,
        beta: f64,
        region: RegionConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
    },
}

impl QueryConfig {
    pub fn x(&self) -> Option<f64> {
        match self {
            QueryConfig::Exit { x, .. }
            | QueryConfig::Npv { x, .. }
            | QueryConfig::GsDensity { x, .. }
            | QueryConfig::GsCreep { x, .. }
            | QueryConfig::GsMass { x, .. } => *x,
        }
    }
}

fn default_paths() -> u64 {
    100_000
}
fn default_step() -> f64 {
    1e-2
}
fn default_horizon() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_paths")]
    pub n_paths: u64,
    #[serde(default)]
    pub seed: u64,
    /// Euler step for models with a Gaussian part.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub acknowledge_horizon: bool,
    /// Also write every path to `paths.csv`.
    #[serde(default)]
    pub dump_paths: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    ClosedForm,
    LaplaceInversion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSection {
    pub q: Grid,
    pub x: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<ScaleMethod>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Full acceptance sizes.
    Default,
    /// Small sample sizes for smoke tests.
    Quick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Restrict to these check groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Absolute and relative quadrature tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        if let (Some(tax), Some(query)) = (&self.tax, &self.query) {
            if let Some(x) = query.x() {
                if x != tax.x {
                    return Err(CliError::Config(format!("query.x ({x}) must equal tax.x ({})", tax.x)));
                }
            }
        }
        if let Some(tol) = self.output.as_ref().and_then(|o| o.tolerance) {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Config(format!("output.tolerance: {tol} must be positive")));
            }
        }
        if let Some(sim) = &self.sim {
            if sim.n_paths == 0 {
                return Err(CliError::Config("sim.n_paths: must be at least 1".into()));
            }
            if !(sim.step > 0.0 && sim.horizon > 0.0) {
                return Err(CliError::Config("sim: step and horizon must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<LevyModel, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config("model: section is required".into()))?
            .build()
    }

    pub fn rule(&self) -> Result<TaxRule, CliError> {
        self.tax
            .as_ref()
            .ok_or_else(|| CliError::Config("tax: section is required".into()))?
            .build()
    }

    pub fn query(&self) -> Result<&QueryConfig, CliError> {
        self.query
            .as_ref()
            .ok_or_else(|| CliError::Config("query: section is required".into()))
    }
}
