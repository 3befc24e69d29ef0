//! JSON experiment configuration for `solve` and `uniqueness`.
//!
//! Every field except `grid` and `map` has a default. The normalized echo
//! written next to the results spells out all of them, so feeding it back
//! reproduces the run.

use std::path::Path;

use planimm_core::solver::SolverOptions;
use planimm_core::{AnalyticMap, Grid2};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(#[from] planimm_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
    #[serde(default = "one")]
    pub x1: f64,
    #[serde(default = "one")]
    pub y1: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    pub fn to_grid(&self) -> planimm_core::Result<Grid2> {
        Grid2::new(self.nx, self.ny, self.x0, self.y0, self.x1, self.y1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl MapSpec {
    pub fn to_map(&self) -> planimm_core::Result<AnalyticMap> {
        AnalyticMap::from_name(&self.name, &self.params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub max_iterations: usize,
    pub residual: f64,
    pub step: f64,
    pub compat_threshold: f64,
    /// Largest pairwise distance accepted between converged starts.
    pub uniqueness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            max_iterations: s.max_iterations,
            residual: s.residual_tol,
            step: s.step_tol,
            compat_threshold: s.compat_threshold,
            uniqueness: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub map: MapSpec,
    #[serde(default = "default_starts")]
    pub n_starts: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_starts() -> usize {
    10
}

fn default_sigma() -> f64 {
    0.1
}

/// Checked form of [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: Grid2,
    pub map: AnalyticMap,
    pub n_starts: usize,
    pub sigma: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub uniqueness_tol: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Pretty JSON with every default filled in.
    pub fn normalized_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let invalid = |m: &str| ConfigError::Invalid(planimm_core::Error::InvalidArgument(m.into()));
        let t = &self.tolerances;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid("sigma must be finite and non-negative"));
        }
        for (name, v) in [("residual", t.residual), ("step", t.step), ("compat_threshold", t.compat_threshold), ("uniqueness", t.uniqueness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(&format!("tolerance {name} must be positive")));
            }
        }
        Ok(Experiment {
            grid: self.grid.to_grid()?,
            map: self.map.to_map()?,
            n_starts: self.n_starts,
            sigma: self.sigma,
            seed: self.seed,
            solver: SolverOptions {
                max_iterations: t.max_iterations,
                residual_tol: t.residual,
                step_tol: t.step,
                compat_threshold: t.compat_threshold,
                ..SolverOptions::default()
            },
            uniqueness_tol: t.uniqueness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_in() {
        let c = ExperimentConfig::from_json(r#"{"grid": {"nx": 9, "ny": 9}, "map": {"name": "rotation", "params": [0.3]}}"#)
            .unwrap();
        assert_eq!(c.n_starts, 10);
        assert_eq!(c.sigma, 0.1);
        assert_eq!(c.grid.x1, 1.0);
        let echoed = ExperimentConfig::from_json(&c.normalized_json()).unwrap();
        assert_eq!(echoed, c);
        let e = c.validate().unwrap();
        assert_eq!(e.map, AnalyticMap::Rotation { theta: 0.3 });
        assert_eq!(e.solver, SolverOptions::default());
    }

    #[test]
    fn strict_schema() {
        for bad in [
            r#"{"grid": {"nx": 9, "ny": 9}, "map": {"name": "identity"}, "extra": 1}"#,
            r#"{"grid": {"nx": 9, "ny": 9, "n": 3}, "map": {"name": "identity"}}"#,
            r#"{"grid": {"nx": 9, "ny": 9}, "map": {"name": "identity"}, "tolerances": {"tol": 1}}"#,
            r#"{"map": {"name": "identity"}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(ConfigError::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn semantic_validation() {
        let unknown = ExperimentConfig::from_json(r#"{"grid": {"nx": 9, "ny": 9}, "map": {"name": "twist"}}"#).unwrap();
        let err = unknown.validate().unwrap_err().to_string();
        assert!(err.contains("sinusoidal"), "{err}");
        let small = ExperimentConfig::from_json(r#"{"grid": {"nx": 2, "ny": 9}, "map": {"name": "identity"}}"#).unwrap();
        assert!(small.validate().is_err());
        let sigma = ExperimentConfig::from_json(r#"{"grid": {"nx": 9, "ny": 9}, "map": {"name": "identity"}, "sigma": -1}"#)
            .unwrap();
        assert!(sigma.validate().is_err());
    }
}
