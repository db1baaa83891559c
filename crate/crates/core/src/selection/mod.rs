//! Penalty grids, k-fold cross-validation on held-out deviance, and the
//! one-standard-error selection rule.

mod cv;
mod grid;
mod rule;

pub use cv::{
    cross_validate, fold_designs, stratified_folds, CvConfig, CvTable, CvCell, StandardizationMode,
};
pub use grid::{find_delta_max, log_spaced, make_penalty_grid, GridSpec, PenaltyGrid};
pub use rule::{one_se_select, EtaChoice, Selection};

use crate::data::DesignTriple;
use crate::error::Result;
use crate::method::FittedModel;
use crate::numeric::log_likelihood;

/// `-2` times the mean Bernoulli log-likelihood of `labels` under `logits`.
pub fn deviance_from_logits(logits: &[f64], labels: &[f64]) -> f64 {
    let total: f64 = logits.iter().zip(labels).map(|(&l, &y)| log_likelihood(y, l)).sum();
    -2.0 * total / labels.len() as f64
}

pub fn deviance(model: &dyn FittedModel, designs: &[DesignTriple], labels: &[f64]) -> Result<f64> {
    Ok(deviance_from_logits(&model.logits(designs)?, labels))
}
