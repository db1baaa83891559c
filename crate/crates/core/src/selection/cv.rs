use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::PenaltyGrid;
use super::rule::{one_se_select, Selection};
use super::deviance;
use crate::data::{build_design, standardize, standardize_with, Dataset, DesignTriple};
use crate::error::{Error, Result};
use crate::method::{FitRequest, FittedModel, Method};
use crate::numeric::{mean, sample_sd};
use crate::rng::{stream, Purpose};

/// Where standardization statistics come from during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StandardizationMode {
    /// Training-fold statistics, applied to the held-out fold.
    #[default]
    Fold,
    /// Statistics of the full dataset, computed once before splitting.
    Global,
}

impl std::str::FromStr for StandardizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fold" => Ok(StandardizationMode::Fold),
            "global" => Ok(StandardizationMode::Global),
            other => Err(Error::InvalidConfig(format!("unknown standardization mode '{other}' (fold, global)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub mode: StandardizationMode,
    /// Start each fit from the solution at the previous (larger) delta.
    pub warm_start: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, seed: 0, mode: StandardizationMode::Fold, warm_start: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub delta_index: usize,
    pub eta_index: usize,
    pub delta: f64,
    pub eta: f64,
    pub fold_deviances: Vec<f64>,
    pub mean_deviance: f64,
    /// Sample standard deviation of the fold deviances over the square root of
    /// the fold count.
    pub standard_error: f64,
    /// Nonzero parameter count of each fold's fit.
    pub fold_nonzero: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub method: String,
    pub mode: StandardizationMode,
    pub seed: u64,
    pub grid: PenaltyGrid,
    /// Fold index of every subject.
    pub folds: Vec<usize>,
    /// Eta-major, delta-minor.
    pub cells: Vec<CvCell>,
    pub selection: Selection,
}

impl CvTable {
    pub fn cell(&self, eta_index: usize, delta_index: usize) -> &CvCell {
        &self.cells[eta_index * self.grid.deltas.len() + delta_index]
    }

    pub fn selected(&self) -> &CvCell {
        self.cell(self.selection.eta_index, self.selection.delta_index)
    }

    pub fn selected_penalty(&self) -> (f64, f64) {
        let c = self.selected();
        (c.delta, c.eta)
    }

    /// One row per cell and fold.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["delta_index", "eta_index", "delta", "eta", "fold", "deviance", "nonzero"])?;
        for c in &self.cells {
            for (f, (d, nz)) in c.fold_deviances.iter().zip(&c.fold_nonzero).enumerate() {
                w.write_record(&[
                    c.delta_index.to_string(),
                    c.eta_index.to_string(),
                    c.delta.to_string(),
                    c.eta.to_string(),
                    f.to_string(),
                    d.to_string(),
                    nz.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Fold index per subject: each class is shuffled separately, the classes are
/// concatenated, and position `j` goes to fold `j mod k`.
pub fn stratified_folds(labels: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidConfig("at least 2 folds are required".into()));
    }
    if k > labels.len() {
        return Err(Error::InvalidConfig(format!("{k} folds for {} subjects", labels.len())));
    }
    let mut rng = stream(seed, Purpose::Folds, 0);
    let mut order = Vec::with_capacity(labels.len());
    for class in [0.0, 1.0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    let mut folds = vec![0; labels.len()];
    for (j, &i) in order.iter().enumerate() {
        folds[i] = j % k;
    }
    for f in 0..k {
        let ys: Vec<f64> = (0..labels.len()).filter(|&i| folds[i] == f).map(|i| labels[i]).collect();
        let pos = ys.iter().filter(|&&y| y == 1.0).count();
        if pos == 0 || pos == ys.len() {
            return Err(Error::FoldSingleClass { fold: f });
        }
    }
    Ok(folds)
}

/// Designs and labels for one split.
pub struct FoldData {
    pub train: Vec<DesignTriple>,
    pub train_labels: Vec<f64>,
    pub test: Vec<DesignTriple>,
    pub test_labels: Vec<f64>,
}

/// Training and held-out designs for `fold` under `mode`. `global` must hold
/// the designs of the full dataset when the mode is global.
pub fn fold_designs(
    dataset: &Dataset,
    folds: &[usize],
    fold: usize,
    mode: StandardizationMode,
    global: Option<&[DesignTriple]>,
) -> FoldData {
    let train_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != fold).collect();
    let test_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == fold).collect();
    let labels = dataset.labels();
    let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<f64>>();
    let (train, test) = match (mode, global) {
        (StandardizationMode::Global, Some(all)) => (
            train_idx.iter().map(|&i| all[i].clone()).collect(),
            test_idx.iter().map(|&i| all[i].clone()).collect(),
        ),
        _ => {
            let train_set = dataset.subset(&train_idx);
            let (train_std, stats) = standardize(&train_set);
            let test_std = standardize_with(&dataset.subset(&test_idx), &stats);
            (build_design(&train_std), build_design(&test_std))
        }
    };
    FoldData { train, train_labels: pick(&train_idx), test, test_labels: pick(&test_idx) }
}

/// K-fold cross-validation over every `(delta, eta)` cell of `grid`.
///
/// Each `(eta, fold)` lane walks the deltas from largest to smallest, warm
/// starting from the previous cell when enabled. Lanes run in parallel and
/// results are keyed by position, so the table does not depend on scheduling.
pub fn cross_validate(method: &dyn Method, dataset: &Dataset, grid: &PenaltyGrid, config: &CvConfig) -> Result<CvTable> {
    let labels = dataset.labels();
    let folds = stratified_folds(&labels, config.folds, config.seed)?;
    let global = match config.mode {
        StandardizationMode::Global => Some(build_design(&standardize(dataset).0)),
        StandardizationMode::Fold => None,
    };
    let fold_data: Vec<FoldData> = (0..config.folds)
        .map(|f| fold_designs(dataset, &folds, f, config.mode, global.as_deref()))
        .collect();

    let lanes: Vec<(usize, usize)> = (0..grid.etas.len())
        .flat_map(|e| (0..config.folds).map(move |f| (e, f)))
        .collect();
    let results: Vec<Vec<(f64, usize)>> = lanes
        .par_iter()
        .map(|&(e, f)| {
            let data = &fold_data[f];
            let mut prev: Option<Box<dyn FittedModel>> = None;
            let mut out = Vec::with_capacity(grid.deltas.len());
            for &delta in &grid.deltas {
                let request = FitRequest {
                    warm: if config.warm_start { prev.as_deref() } else { None },
                    ..FitRequest::new(&data.train, &data.train_labels, delta, grid.etas[e], config.seed)
                };
                let model = method.fit(&request)?;
                out.push((deviance(model.as_ref(), &data.test, &data.test_labels)?, model.nonzero_count()));
                prev = Some(model);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let k = config.folds;
    let mut cells = Vec::with_capacity(grid.etas.len() * grid.deltas.len());
    for (e, &eta) in grid.etas.iter().enumerate() {
        for (d, &delta) in grid.deltas.iter().enumerate() {
            let fold_deviances: Vec<f64> = (0..k).map(|f| results[e * k + f][d].0).collect();
            let fold_nonzero: Vec<usize> = (0..k).map(|f| results[e * k + f][d].1).collect();
            cells.push(CvCell {
                delta_index: d,
                eta_index: e,
                delta,
                eta,
                mean_deviance: mean(&fold_deviances),
                standard_error: sample_sd(&fold_deviances) / (k as f64).sqrt(),
                fold_deviances,
                fold_nonzero,
            });
        }
    }
    let nd = grid.deltas.len();
    let means: Vec<Vec<f64>> = cells.chunks(nd).map(|r| r.iter().map(|c| c.mean_deviance).collect()).collect();
    let ses: Vec<Vec<f64>> = cells.chunks(nd).map(|r| r.iter().map(|c| c.standard_error).collect()).collect();
    let selection = one_se_select(&means, &ses);
    Ok(CvTable {
        method: method.name().to_string(),
        mode: config.mode,
        seed: config.seed,
        grid: grid.clone(),
        folds,
        cells,
        selection,
    })
}
