//! User-defined grid problems read from TOML.
//!
//! ```toml
//! dim = 2
//! diffusion = 1.0
//! lambda = 0.5
//! min_cost = 0.0
//! max_drifts = [[0.0, 0.0], [1.0, 0.0]]
//! min_drifts = [[0.0, 0.0], [0.0, 1.0]]
//! running_reward = { kind = "const", value = 1.0 }
//! boundary = { kind = "zero" }
//! # optional: max_stop, min_stop, exact
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::functions::NamedFn;
use super::grid::GridSpec;
use super::tabular_grid::{build_tabular_grid, TabularGridSpec};
use crate::error::{Error, Result};
use crate::game_model::GameInstance;

fn default_diffusion() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub dim: usize,
    #[serde(default = "default_diffusion")]
    pub diffusion: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Weight of MIN's quadratic control cost `|b|^2 / 2`.
    #[serde(default)]
    pub min_cost: f64,
    pub max_drifts: Vec<Vec<f64>>,
    pub min_drifts: Vec<Vec<f64>>,
    pub running_reward: NamedFn,
    pub boundary: NamedFn,
    #[serde(default)]
    pub max_stop: Option<NamedFn>,
    #[serde(default)]
    pub min_stop: Option<NamedFn>,
    #[serde(default)]
    pub exact: Option<NamedFn>,
}

impl CustomProblem {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let p: CustomProblem = toml::from_str(s).map_err(|e| Error::Config(format!("custom problem: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 2 {
            return Err(Error::Config(format!("custom problems support dim 1 or 2, got {}", self.dim)));
        }
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) || !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("diffusion must be positive and lambda non-negative".into()));
        }
        if !(self.min_cost >= 0.0 && self.min_cost.is_finite()) {
            return Err(Error::Config("min_cost must be non-negative".into()));
        }
        for f in [&self.running_reward, &self.boundary]
            .into_iter()
            .chain(self.max_stop.iter())
            .chain(self.min_stop.iter())
            .chain(self.exact.iter())
        {
            f.validate(self.dim)?;
        }
        Ok(())
    }

    pub fn build(&self, grid: &GridSpec) -> Result<GameInstance> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: grid.dim() });
        }
        let reward = |x: &[f64]| self.running_reward.eval(x);
        let boundary = |x: &[f64]| self.boundary.eval(x);
        let max_stop = self.max_stop.as_ref().map(|f| move |x: &[f64]| f.eval(x));
        let min_stop = self.min_stop.as_ref().map(|f| move |x: &[f64]| f.eval(x));
        build_tabular_grid(&TabularGridSpec {
            grid: *grid,
            diffusion: self.diffusion,
            lambda: self.lambda,
            max_drifts: &self.max_drifts,
            min_drifts: &self.min_drifts,
            min_cost: self.min_cost,
            reward: &reward,
            boundary: &boundary,
            max_stop: max_stop.as_ref().map(|f| f as &(dyn Fn(&[f64]) -> f64 + Sync)),
            min_stop: min_stop.as_ref().map(|f| f as &(dyn Fn(&[f64]) -> f64 + Sync)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::Game;

    const CONFIG: &str = r#"
dim = 1
lambda = 1.0
max_drifts = [[0.0]]
min_drifts = [[0.0]]
running_reward = { kind = "const", value = 1.0 }
boundary = { kind = "const", value = 1.0 }
"#;

    #[test]
    fn parse_and_build() {
        let p = CustomProblem::from_toml_str(CONFIG).unwrap();
        assert_eq!(p.diffusion, 1.0);
        let game = p.build(&GridSpec::new(1, 4).unwrap()).unwrap();
        assert_eq!(game.n_states(), 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_dims() {
        assert!(CustomProblem::from_toml_str(&format!("{CONFIG}\nfoo = 1")).is_err());
        let bad = CONFIG.replace("dim = 1", "dim = 3");
        assert!(CustomProblem::from_toml_str(&bad).is_err());
        let p = CustomProblem::from_toml_str(CONFIG).unwrap();
        assert!(p.build(&GridSpec::new(2, 4).unwrap()).is_err());
    }
}
