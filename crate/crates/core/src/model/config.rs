use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for one penalized SBLR fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Component budget `K`.
    pub k: usize,
    /// Overall penalty factor.
    pub delta: f64,
    /// Fraction of the penalty that is L1.
    pub eta: f64,
    /// Stop when the relative change of the loss over one full cycle falls below this.
    pub tolerance: f64,
    pub max_cycles: usize,
    /// Number of random initializations; the lowest final loss wins.
    pub restarts: usize,
    pub seed: u64,
    /// Reject coordinate steps that increase the loss, halving toward the old value.
    pub safeguard: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            k: 5,
            delta: 0.1,
            eta: 0.5,
            tolerance: 1e-5,
            max_cycles: 1000,
            restarts: 20,
            seed: 0,
            safeguard: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.k < 1 {
            return fail("k must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return fail("delta must be positive and finite");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail("eta must lie in [0, 1]");
        }
        if !(self.tolerance > 0.0) {
            return fail("tolerance must be positive");
        }
        if self.max_cycles < 1 {
            return fail("max_cycles must be at least 1");
        }
        if self.restarts < 1 {
            return fail("restarts must be at least 1");
        }
        Ok(())
    }
}
