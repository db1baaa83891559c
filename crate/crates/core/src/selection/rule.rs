use serde::{Deserialize, Serialize};

/// Per-`eta` step of the one-standard-error rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub eta_index: usize,
    /// Cell with the smallest mean deviance for this `eta`.
    pub min_delta_index: usize,
    pub min_mean: f64,
    /// Minimum mean plus the standard error of the minimizing cell.
    pub threshold: f64,
    pub chosen_delta_index: usize,
    pub chosen_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub delta_index: usize,
    pub eta_index: usize,
    pub mean_deviance: f64,
    pub standard_error: f64,
    pub trace: Vec<EtaChoice>,
}

/// One-standard-error rule over `means[eta][delta]` and `ses[eta][delta]`,
/// with deltas ordered from largest to smallest.
///
/// For each `eta`, take the largest `delta` whose mean deviance is within one
/// standard error of that row's minimum. Across rows, the smallest mean wins;
/// ties go to the larger `delta`, then the larger `eta` (`etas` increasing).
pub fn one_se_select(means: &[Vec<f64>], ses: &[Vec<f64>]) -> Selection {
    assert!(!means.is_empty() && means.len() == ses.len(), "table must be nonempty");
    let trace: Vec<EtaChoice> = means
        .iter()
        .zip(ses)
        .enumerate()
        .map(|(eta_index, (row, se_row))| {
            let (min_delta_index, &min_mean) = row
                .iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| a.total_cmp(b).then(i.cmp(j)))
                .expect("row must be nonempty");
            let threshold = min_mean + se_row[min_delta_index];
            let chosen_delta_index = row
                .iter()
                .position(|&m| m <= threshold)
                .expect("the minimizing cell is always within threshold");
            EtaChoice {
                eta_index,
                min_delta_index,
                min_mean,
                threshold,
                chosen_delta_index,
                chosen_mean: row[chosen_delta_index],
            }
        })
        .collect();
    let best = trace
        .iter()
        .min_by(|a, b| {
            a.chosen_mean
                .total_cmp(&b.chosen_mean)
                .then(a.chosen_delta_index.cmp(&b.chosen_delta_index))
                .then(b.eta_index.cmp(&a.eta_index))
        })
        .expect("at least one eta");
    Selection {
        delta_index: best.chosen_delta_index,
        eta_index: best.eta_index,
        mean_deviance: best.chosen_mean,
        standard_error: ses[best.eta_index][best.chosen_delta_index],
        trace,
    }
}
