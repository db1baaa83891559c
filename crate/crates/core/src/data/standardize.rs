use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Pooled statistics over every `(subject, visit)` observation.
///
/// Population moments (divisor = number of observations) are used for both
/// edges and ages. Squared ages are standardized from the raw squared ages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub edge_means: Vec<Vec<f64>>,
    pub edge_sds: Vec<Vec<f64>>,
    pub age_mean: f64,
    pub age_sd: f64,
    pub agesq_mean: f64,
    pub agesq_sd: f64,
}

impl StandardizationStats {
    pub fn compute(dataset: &Dataset) -> Self {
        let v = dataset.nodes();
        let count = dataset.subjects().iter().map(|s| s.visits.len()).sum::<usize>() as f64;

        let mut sum = Array2::<f64>::zeros((v, v));
        let mut ages = Vec::with_capacity(count as usize);
        for visit in dataset.subjects().iter().flat_map(|s| &s.visits) {
            sum += &visit.network;
            ages.push(visit.age);
        }
        let means = sum / count;

        let mut ss = Array2::<f64>::zeros((v, v));
        for visit in dataset.subjects().iter().flat_map(|s| &s.visits) {
            for u in 0..v {
                for w in 0..u {
                    let d = visit.network[[u, w]] - means[[u, w]];
                    ss[[u, w]] += d * d;
                }
            }
        }

        let mut edge_means = vec![vec![0.0; v]; v];
        let mut edge_sds = vec![vec![0.0; v]; v];
        for u in 0..v {
            for w in 0..u {
                let m = means[[u, w]];
                let sd = (ss[[u, w]] / count).sqrt();
                edge_means[u][w] = m;
                edge_means[w][u] = m;
                edge_sds[u][w] = sd;
                edge_sds[w][u] = sd;
            }
        }

        let squares: Vec<f64> = ages.iter().map(|g| g * g).collect();
        let (age_mean, age_sd) = population_moments(&ages);
        let (agesq_mean, agesq_sd) = population_moments(&squares);
        StandardizationStats {
            edge_means,
            edge_sds,
            age_mean,
            age_sd,
            agesq_mean,
            agesq_sd,
        }
    }

    pub fn nodes(&self) -> usize {
        self.edge_means.len()
    }

    /// Standardized age; zero when ages have no spread.
    pub fn age(&self, g: f64) -> f64 {
        scale(g, self.age_mean, self.age_sd)
    }

    /// Standardized squared age.
    pub fn age_sq(&self, g: f64) -> f64 {
        scale(g * g, self.agesq_mean, self.agesq_sd)
    }

    /// Standardizes one network; zero-variance edges map to zero.
    pub fn network(&self, w: &Array2<f64>) -> Array2<f64> {
        let v = self.nodes();
        let mut out = Array2::<f64>::zeros((v, v));
        for u in 0..v {
            for x in 0..u {
                let z = scale(w[[u, x]], self.edge_means[u][x], self.edge_sds[u][x]);
                out[[u, x]] = z;
                out[[x, u]] = z;
            }
        }
        out
    }
}

fn scale(x: f64, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        (x - mean) / sd
    } else {
        0.0
    }
}

fn population_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedVisit {
    /// Standardized age.
    pub age: f64,
    /// Standardized squared age.
    pub age_sq: f64,
    pub network: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSubject {
    pub label: u8,
    pub visits: Vec<StandardizedVisit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDataset {
    pub nodes: usize,
    pub subjects: Vec<StandardizedSubject>,
}

impl StandardizedDataset {
    pub fn labels(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| f64::from(s.label)).collect()
    }
}

/// Standardizes `dataset` with statistics pooled over its own observations.
pub fn standardize(dataset: &Dataset) -> (StandardizedDataset, StandardizationStats) {
    let stats = StandardizationStats::compute(dataset);
    (standardize_with(dataset, &stats), stats)
}

/// Applies previously computed statistics, e.g. training-fold statistics to a
/// held-out fold.
pub fn standardize_with(dataset: &Dataset, stats: &StandardizationStats) -> StandardizedDataset {
    let subjects = dataset
        .subjects()
        .iter()
        .map(|s| StandardizedSubject {
            label: s.label,
            visits: s
                .visits
                .iter()
                .map(|visit| StandardizedVisit {
                    age: stats.age(visit.age),
                    age_sq: stats.age_sq(visit.age),
                    network: stats.network(&visit.network),
                })
                .collect(),
        })
        .collect();
    StandardizedDataset {
        nodes: dataset.nodes(),
        subjects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LongitudinalSubject, Visit};

    fn two_node(value: f64, age: f64) -> Visit {
        let mut w = Array2::zeros((2, 2));
        w[[0, 1]] = value;
        w[[1, 0]] = value;
        Visit { age, network: w }
    }

    #[test]
    fn two_point_edge_maps_to_unit_values() {
        let ds = Dataset::new(vec![
            LongitudinalSubject { label: 0, visits: vec![two_node(1.0, 60.0)] },
            LongitudinalSubject { label: 1, visits: vec![two_node(3.0, 90.0)] },
        ])
        .unwrap();
        let (z, stats) = standardize(&ds);
        assert_eq!(z.subjects[0].visits[0].network[[1, 0]], -1.0);
        assert_eq!(z.subjects[1].visits[0].network[[0, 1]], 1.0);
        assert_eq!(z.subjects[0].visits[0].age, -1.0);
        assert_eq!(z.subjects[1].visits[0].age, 1.0);
        assert_eq!(stats.age_mean, 75.0);
        assert_eq!(stats.age_sd, 15.0);
        // g^2 is standardized from raw squares: {3600, 8100} -> {-1, 1}
        assert_eq!(z.subjects[0].visits[0].age_sq, -1.0);
    }

    #[test]
    fn constant_edge_maps_to_zero() {
        let ds = Dataset::new(vec![
            LongitudinalSubject { label: 0, visits: vec![two_node(2.0, 60.0), two_node(2.0, 61.0)] },
            LongitudinalSubject { label: 1, visits: vec![two_node(2.0, 70.0)] },
        ])
        .unwrap();
        let (z, stats) = standardize(&ds);
        assert_eq!(stats.edge_sds[1][0], 0.0);
        for visit in z.subjects.iter().flat_map(|s| &s.visits) {
            assert_eq!(visit.network[[1, 0]], 0.0);
        }
    }
}
