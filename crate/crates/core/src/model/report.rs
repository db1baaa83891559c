use serde::{Deserialize, Serialize};

use super::config::FitConfig;
use super::fit::FitResult;
use super::interpret::{extract_subgraphs, normalize_components, recover_age_effect, AgeEffect, Edge, WeightedEdge};
use crate::data::StandardizationStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub index: usize,
    pub empty: bool,
    pub beta: Vec<f64>,
    pub age_effect_standardized: AgeEffect,
    /// Absent when the age spread is zero or no statistics were supplied.
    pub age_effect_original: Option<AgeEffect>,
    pub normalized_beta: Vec<f64>,
    pub normalized_age_effect_standardized: AgeEffect,
    pub normalized_age_effect_original: Option<AgeEffect>,
    /// Lower-triangular entries `(u, v, value)` of the normalized component matrix.
    pub edges: Vec<WeightedEdge>,
}

/// Serializable summary of one SBLR fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub intercept: f64,
    pub components: Vec<ComponentReport>,
    pub selected_edges: Vec<Edge>,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
    pub cycles_used: usize,
    pub converged: bool,
    pub restart_index: usize,
    pub config: FitConfig,
    pub seed: u64,
    pub standardization: Option<StandardizationStats>,
}

impl FitReport {
    pub fn new(result: &FitResult, config: &FitConfig, stats: Option<&StandardizationStats>) -> Self {
        let params = &result.params;
        let normalized = normalize_components(params);
        let subgraphs = extract_subgraphs(params);
        let original = |e: AgeEffect| stats.and_then(|s| recover_age_effect(e, s).ok());
        let components = params
            .components
            .iter()
            .zip(normalized)
            .zip(subgraphs)
            .map(|((c, nc), edges)| {
                let standardized = AgeEffect::of(c);
                ComponentReport {
                    index: nc.index,
                    empty: nc.empty,
                    beta: c.beta.clone(),
                    age_effect_standardized: standardized,
                    age_effect_original: original(standardized),
                    normalized_beta: nc.beta,
                    normalized_age_effect_standardized: nc.age_effect,
                    normalized_age_effect_original: original(nc.age_effect),
                    edges,
                }
            })
            .collect();
        FitReport {
            method: "sblr".into(),
            intercept: params.intercept,
            components,
            selected_edges: super::interpret::selected_edges(params).into_iter().collect(),
            final_loss: result.final_loss,
            loss_trace: result.loss_trace.clone(),
            cycles_used: result.cycles_used,
            converged: result.converged,
            restart_index: result.restart_index,
            config: config.clone(),
            seed: config.seed,
            standardization: stats.cloned(),
        }
    }
}
