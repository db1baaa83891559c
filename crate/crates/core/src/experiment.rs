//! Cross-validated selection followed by a full-data refit, and the
//! replicate study that summarizes deviance and edge recovery per method.

use serde::{Deserialize, Serialize};

use crate::data::{build_design, standardize, Dataset, DesignTriple, StandardizationStats};
use crate::error::{Error, Result};
use crate::method::{FitRequest, FittedModel, Method, MethodRegistry, MethodSettings};
use crate::numeric::{mean, sample_sd};
use crate::rng::{child_seed, Purpose};
use crate::selection::{cross_validate, make_penalty_grid, CvConfig, CvTable, GridSpec};
use crate::synthetic::{evaluate_recovery, generate, GeneratorConfig, Recovery};

/// Outcome of grid construction, cross-validation and the refit at the
/// selected penalty.
#[derive(Debug)]
pub struct SelectedModel {
    pub table: CvTable,
    pub model: Box<dyn FittedModel>,
    pub stats: StandardizationStats,
    pub designs: Vec<DesignTriple>,
}

/// Builds the grid on the fully standardized data, cross-validates over it and
/// refits on all subjects at the selected `(delta, eta)`.
pub fn select_and_fit(method: &dyn Method, dataset: &Dataset, grid_spec: &GridSpec, cv: &CvConfig) -> Result<SelectedModel> {
    let (std_data, stats) = standardize(dataset);
    let designs = build_design(&std_data);
    let labels = dataset.labels();
    let grid = make_penalty_grid(method, &designs, &labels, cv.seed, grid_spec)?;
    let table = cross_validate(method, dataset, &grid, cv)?;
    let (delta, eta) = table.selected_penalty();
    let model = method.fit(&FitRequest::new(&designs, &labels, delta, eta, cv.seed))?;
    Ok(SelectedModel { table, model, stats, designs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Generator settings; its seed is replaced per replicate.
    pub generator: GeneratorConfig,
    pub methods: Vec<String>,
    pub settings: MethodSettings,
    pub grid: GridSpec,
    pub cv: CvConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            replicates: 30,
            seed: 0,
            generator: GeneratorConfig::default(),
            methods: vec!["sblr".into(), "lr".into()],
            settings: MethodSettings::default(),
            grid: GridSpec::default(),
            cv: CvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub data_seed: u64,
    pub method: String,
    pub delta: f64,
    pub eta: f64,
    pub cv_deviance: f64,
    pub cv_standard_error: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub selected_edges: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        MeanSd { mean: mean(values), sd: if values.len() > 1 { sample_sd(values) } else { 0.0 } }
    }
}

impl std::fmt::Display for MeanSd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4}±{:.4}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub cv_deviance: MeanSd,
    pub tpr: MeanSd,
    pub fpr: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub outcomes: Vec<ReplicateOutcome>,
    pub summaries: Vec<MethodSummary>,
}

impl StudyReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Plain-text table with one row per method and mean±SD columns.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>17} {:>17} {:>17}\n", "method", "cv deviance", "TPR", "FPR");
        for s in &self.summaries {
            out.push_str(&format!(
                "{:<8} {:>17} {:>17} {:>17}\n",
                s.method,
                s.cv_deviance.to_string(),
                s.tpr.to_string(),
                s.fpr.to_string()
            ));
        }
        out
    }
}

/// Runs one method on one synthetic replicate.
pub fn run_replicate(
    method: &dyn Method,
    dataset: &Dataset,
    signal: &std::collections::BTreeSet<crate::model::Edge>,
    grid: &GridSpec,
    cv: &CvConfig,
) -> Result<(SelectedModel, Recovery)> {
    let selected = select_and_fit(method, dataset, grid, cv)?;
    let recovery = evaluate_recovery(&selected.model.selected_edges(), signal, dataset.nodes());
    Ok((selected, recovery))
}

/// Generates `replicates` datasets and evaluates every method on each.
/// `progress` is called after each finished (replicate, method) pair.
pub fn run_study(
    config: &StudyConfig,
    registry: &MethodRegistry,
    mut progress: impl FnMut(&ReplicateOutcome),
) -> Result<StudyReport> {
    if config.replicates == 0 {
        return Err(Error::InvalidConfig("at least one replicate is required".into()));
    }
    let methods: Vec<Box<dyn Method>> = config
        .methods
        .iter()
        .map(|m| registry.build(m, &config.settings))
        .collect::<Result<_>>()?;
    let mut outcomes = Vec::new();
    for r in 0..config.replicates {
        let data_seed = child_seed(config.seed, Purpose::Replicate, r as u64);
        let data = generate(&GeneratorConfig { seed: data_seed, ..config.generator.clone() })?;
        let cv = CvConfig { seed: data_seed, ..config.cv.clone() };
        for method in &methods {
            let (selected, recovery) = run_replicate(method.as_ref(), &data.dataset, &data.truth.signal_edges, &config.grid, &cv)?;
            let (delta, eta) = selected.table.selected_penalty();
            let outcome = ReplicateOutcome {
                replicate: r,
                data_seed,
                method: method.name().to_string(),
                delta,
                eta,
                cv_deviance: selected.table.selected().mean_deviance,
                cv_standard_error: selected.table.selected().standard_error,
                tpr: recovery.tpr,
                fpr: recovery.fpr,
                selected_edges: selected.model.selected_edges().len(),
                converged: selected.model.converged(),
            };
            progress(&outcome);
            outcomes.push(outcome);
        }
    }
    let summaries = methods
        .iter()
        .map(|m| {
            let rows: Vec<&ReplicateOutcome> = outcomes.iter().filter(|o| o.method == m.name()).collect();
            let col = |f: fn(&ReplicateOutcome) -> f64| rows.iter().map(|o| f(o)).collect::<Vec<f64>>();
            MethodSummary {
                method: m.name().to_string(),
                cv_deviance: MeanSd::of(&col(|o| o.cv_deviance)),
                tpr: MeanSd::of(&col(|o| o.tpr)),
                fpr: MeanSd::of(&col(|o| o.fpr)),
            }
        })
        .collect();
    Ok(StudyReport { config: config.clone(), outcomes, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_formatting() {
        let s = MeanSd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.to_string(), "2.0000±1.0000");
    }

    #[test]
    fn tiny_study_runs_and_is_deterministic() {
        let config = StudyConfig {
            replicates: 1,
            generator: GeneratorConfig { n: 40, nodes: 12, ..Default::default() },
            settings: MethodSettings { k: 2, restarts: 1, max_cycles: 50, ..Default::default() },
            grid: GridSpec { etas: vec![0.5, 1.0], n_deltas: 3, ..Default::default() },
            cv: CvConfig { folds: 2, ..Default::default() },
            ..Default::default()
        };
        let reg = MethodRegistry::builtin();
        let a = run_study(&config, &reg, |_| {}).unwrap();
        let b = run_study(&config, &reg, |_| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 2);
        assert!(a.table().contains("sblr"));
    }
}
