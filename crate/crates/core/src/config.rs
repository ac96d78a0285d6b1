use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical knobs shared by every sampling, zero-testing and rank decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub seed: u64,
    pub samples: usize,
    pub atol: f64,
    pub rtol: f64,
    /// Singular values below `rank_threshold * largest` count as zero.
    pub rank_threshold: f64,
    /// Retries per requested sample point before giving up on a domain.
    pub max_retries: usize,
    /// Fan sample-point loops out over the rayon pool (only with the
    /// `parallel` feature; otherwise ignored).
    pub parallel: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            samples: 64,
            atol: 1e-10,
            rtol: 1e-9,
            rank_threshold: 1e-8,
            max_retries: 1000,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError("samples must be positive".into()));
        }
        for (name, v) in [("atol", self.atol), ("rtol", self.rtol), ("rank_threshold", self.rank_threshold)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!("{name} must be a positive finite number")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }
}
