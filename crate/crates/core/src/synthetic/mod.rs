//! Synthetic benchmark: networks built from random clique bases, labels driven
//! by two of those cliques with age-varying effects, and edge-recovery metrics.

mod recovery;

pub use recovery::{evaluate_recovery, Recovery};

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset, LongitudinalSubject, StandardizationStats, Visit};
use crate::error::{Error, Result};
use crate::model::{AgeEffect, Edge};
use crate::numeric::sigmoid;
use crate::rng::{stream, Purpose, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n: usize,
    pub nodes: usize,
    pub seed: u64,
    /// Half-width of the relative uniform noise applied to first-visit edges.
    pub noise_frac: f64,
    pub basis_count: usize,
    pub age_low: f64,
    pub age_high: f64,
    pub max_visits: usize,
    /// Standard deviation of the relative per-edge change between visits.
    pub followup_sd: f64,
    /// One-based indices of the basis vectors that drive the response.
    pub signal_indices: Vec<usize>,
    /// Raw-age effect for each entry of `signal_indices`.
    pub age_effects: Vec<AgeEffect>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n: 100,
            nodes: 20,
            seed: 0,
            noise_frac: 0.05,
            basis_count: 11,
            age_low: 60.0,
            age_high: 90.0,
            max_visits: 5,
            followup_sd: 0.01,
            signal_indices: vec![3, 11],
            age_effects: vec![
                AgeEffect { gamma: 0.0, rho: 0.1, alpha: -7.5 },
                AgeEffect { gamma: 0.0, rho: 0.0, alpha: -1.0 },
            ],
        }
    }
}

impl GeneratorConfig {
    /// Multiplies every signal's age effect by `factor`, keeping its shape.
    pub fn with_effect_scale(mut self, factor: f64) -> Self {
        for e in &mut self.age_effects {
            *e = AgeEffect { gamma: e.gamma * factor, rho: e.rho * factor, alpha: e.alpha * factor };
        }
        self
    }

    /// Support size of the one-based basis vector `h`.
    pub fn support_size(&self, h: usize) -> usize {
        if h == self.basis_count && h > 1 {
            4
        } else {
            h + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        // one spare node beyond the largest support
        let required = (1..=self.basis_count).map(|h| self.support_size(h)).max().unwrap_or(1) + 1;
        if self.nodes < required {
            return Err(Error::TooFewNodes { nodes: self.nodes, required });
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("at least 2 subjects are required".into()));
        }
        if self.max_visits == 0 {
            return Err(Error::InvalidConfig("max_visits must be at least 1".into()));
        }
        if !(self.age_low <= self.age_high) || !self.age_low.is_finite() || !self.age_high.is_finite() {
            return Err(Error::InvalidConfig("age range must be finite with age_low <= age_high".into()));
        }
        if !(0.0..1.0).contains(&self.noise_frac) || !(self.followup_sd >= 0.0) {
            return Err(Error::InvalidConfig("noise levels must satisfy 0 <= noise_frac < 1, followup_sd >= 0".into()));
        }
        if self.signal_indices.len() != self.age_effects.len() {
            return Err(Error::InvalidConfig("each signal index needs exactly one age effect".into()));
        }
        if let Some(&h) = self.signal_indices.iter().find(|&&h| h == 0 || h > self.basis_count) {
            return Err(Error::InvalidConfig(format!("signal index {h} is outside 1..={}", self.basis_count)));
        }
        Ok(())
    }
}

/// Binary basis vectors; `vectors[h - 1]` is basis vector `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub vectors: Vec<Vec<f64>>,
}

impl Basis {
    pub fn support(&self, h: usize) -> Vec<usize> {
        self.vectors[h - 1]
            .iter()
            .enumerate()
            .filter_map(|(u, &x)| (x != 0.0).then_some(u))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalComponent {
    pub basis_index: usize,
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub age_effect: AgeEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub signal_edges: BTreeSet<Edge>,
    pub components: Vec<SignalComponent>,
}

impl GroundTruth {
    pub fn from_basis(basis: &Basis, config: &GeneratorConfig) -> Self {
        let components: Vec<SignalComponent> = config
            .signal_indices
            .iter()
            .zip(&config.age_effects)
            .map(|(&h, &age_effect)| SignalComponent {
                basis_index: h,
                beta: basis.vectors[h - 1].clone(),
                support: basis.support(h),
                age_effect,
            })
            .collect();
        let signal_edges = components
            .iter()
            .flat_map(|c| {
                let s = &c.support;
                s.iter()
                    .flat_map(move |&a| s.iter().filter(move |&&b| b < a).map(move |&b| Edge::new(a, b)))
            })
            .collect();
        GroundTruth { signal_edges, components }
    }
}

/// Sidecar record written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub basis_supports: Vec<Vec<usize>>,
    pub truth: GroundTruth,
    /// Success probability used to draw each label.
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub basis: Basis,
    pub truth: GroundTruth,
    pub probabilities: Vec<f64>,
    pub stats: StandardizationStats,
}

impl SyntheticData {
    pub fn truth_record(&self, config: &GeneratorConfig) -> TruthRecord {
        TruthRecord {
            seed: config.seed,
            config: config.clone(),
            basis_supports: (1..=self.basis.vectors.len()).map(|h| self.basis.support(h)).collect(),
            truth: self.truth.clone(),
            probabilities: self.probabilities.clone(),
        }
    }
}

pub fn gen_basis(config: &GeneratorConfig) -> Result<Basis> {
    config.validate()?;
    let mut rng = stream(config.seed, Purpose::Basis, 0);
    let vectors = (1..=config.basis_count)
        .map(|h| {
            let mut q = vec![0.0; config.nodes];
            for u in sample(&mut rng, config.nodes, config.support_size(h)) {
                q[u] = 1.0;
            }
            q
        })
        .collect();
    Ok(Basis { vectors })
}

/// First-visit network `sum_h loading_h q_h q_h^T` with relative noise and a
/// zeroed diagonal. `noise` holds one uniform draw in `[-1, 1)` per lower pair.
pub fn first_network(basis: &Basis, loadings: &[f64], noise: &[f64], noise_frac: f64) -> Array2<f64> {
    let v = basis.vectors.first().map_or(0, Vec::len);
    let mut w = Array2::zeros((v, v));
    let mut t = 0;
    for a in 1..v {
        for b in 0..a {
            let base: f64 = basis
                .vectors
                .iter()
                .zip(loadings)
                .map(|(q, l)| l * q[a] * q[b])
                .sum();
            let x = base * (1.0 + noise_frac * noise[t]);
            w[[a, b]] = x;
            w[[b, a]] = x;
            t += 1;
        }
    }
    w
}

/// Draws one subject from its own stream. The label is left at 0.
///
/// Draw order: visit count, first age, one loading per basis vector, one
/// noise draw per lower pair, then one normal per lower pair per follow-up.
pub fn gen_subject(config: &GeneratorConfig, basis: &Basis, index: usize) -> LongitudinalSubject {
    let mut rng = stream(config.seed, Purpose::Subject, index as u64);
    gen_subject_from(config, basis, &mut rng)
}

fn gen_subject_from(config: &GeneratorConfig, basis: &Basis, rng: &mut StreamRng) -> LongitudinalSubject {
    let v = config.nodes;
    let pairs = v * (v - 1) / 2;
    let visits = rng.random_range(1..=config.max_visits);
    let first_age = if config.age_low < config.age_high {
        rng.random_range(config.age_low..config.age_high)
    } else {
        config.age_low
    };
    let loadings: Vec<f64> = (0..basis.vectors.len()).map(|_| rng.random::<f64>()).collect();
    let noise: Vec<f64> = (0..pairs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut w = first_network(basis, &loadings, &noise, config.noise_frac);
    let mut out = Vec::with_capacity(visits);
    out.push(Visit { age: first_age, network: w.clone() });
    for s in 1..visits {
        for a in 1..v {
            for b in 0..a {
                let z: f64 = StandardNormal.sample(rng);
                let x = w[[a, b]] * (1.0 + config.followup_sd * z);
                w[[a, b]] = x;
                w[[b, a]] = x;
            }
        }
        out.push(Visit { age: first_age + s as f64, network: w.clone() });
    }
    LongitudinalSubject { label: 0, visits: out }
}

/// True-model logit of every subject, evaluated on networks standardized
/// with `stats`.
pub fn response_logits(
    subjects: &[LongitudinalSubject],
    truth: &GroundTruth,
    stats: &StandardizationStats,
) -> Vec<f64> {
    subjects
        .iter()
        .map(|s| {
            truth
                .components
                .iter()
                .map(|c| {
                    s.visits
                        .iter()
                        .map(|visit| {
                            let w = stats.network(&visit.network);
                            let form: f64 = c
                                .support
                                .iter()
                                .flat_map(|&a| c.support.iter().map(move |&b| (a, b)))
                                .map(|(a, b)| c.beta[a] * w[[a, b]] * c.beta[b])
                                .sum();
                            c.age_effect.eval(visit.age) * form
                        })
                        .sum::<f64>()
                        / s.visits.len() as f64
                })
                .sum()
        })
        .collect()
}

pub fn response_probabilities(
    subjects: &[LongitudinalSubject],
    truth: &GroundTruth,
    stats: &StandardizationStats,
) -> Vec<f64> {
    response_logits(subjects, truth, stats).into_iter().map(sigmoid).collect()
}

/// Draws one Bernoulli label per probability, each from its own stream.
pub fn gen_labels(seed: u64, probabilities: &[f64]) -> Vec<u8> {
    probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| u8::from(stream(seed, Purpose::Label, i as u64).random::<f64>() < p))
        .collect()
}

/// Labels for `subjects` under `truth`, after pooled standardization of the
/// observed networks.
pub fn gen_response(
    subjects: &[LongitudinalSubject],
    truth: &GroundTruth,
    config: &GeneratorConfig,
) -> Result<(Vec<u8>, Vec<f64>, StandardizationStats)> {
    let dataset = Dataset::with_nodes(config.nodes, subjects.to_vec())?;
    let (_, stats) = standardize(&dataset);
    let probabilities = response_probabilities(subjects, truth, &stats);
    Ok((gen_labels(config.seed, &probabilities), probabilities, stats))
}

/// Generates a full labelled dataset with its ground truth.
pub fn generate(config: &GeneratorConfig) -> Result<SyntheticData> {
    let basis = gen_basis(config)?;
    let truth = GroundTruth::from_basis(&basis, config);
    let mut subjects: Vec<LongitudinalSubject> = (0..config.n)
        .into_par_iter()
        .map(|i| gen_subject(config, &basis, i))
        .collect();
    let (labels, probabilities, stats) = gen_response(&subjects, &truth, config)?;
    for (s, y) in subjects.iter_mut().zip(labels) {
        s.label = y;
    }
    let dataset = Dataset::with_nodes(config.nodes, subjects)?;
    Ok(SyntheticData { dataset, basis, truth, probabilities, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig { n: 30, ..GeneratorConfig::default() }
    }

    #[test]
    fn basis_supports_have_prescribed_sizes() {
        let basis = gen_basis(&small()).unwrap();
        for h in 1..=10 {
            assert_eq!(basis.support(h).len(), h + 1);
        }
        assert_eq!(basis.support(11).len(), 4);
        assert_eq!(basis, gen_basis(&small()).unwrap());
    }

    #[test]
    fn too_few_nodes_is_rejected() {
        let cfg = GeneratorConfig { nodes: 11, ..small() };
        assert!(matches!(gen_basis(&cfg), Err(Error::TooFewNodes { required: 12, .. })));
        assert!(gen_basis(&GeneratorConfig { nodes: 12, ..small() }).is_ok());
    }

    #[test]
    fn single_term_expansion() {
        let mut q = vec![0.0; 4];
        q[1] = 1.0;
        q[2] = 1.0;
        let basis = Basis { vectors: vec![q] };
        let w = first_network(&basis, &[1.0], &[0.3; 6], 0.0);
        let mut expected = Array2::zeros((4, 4));
        expected[[1, 2]] = 1.0;
        expected[[2, 1]] = 1.0;
        assert_eq!(w, expected);
    }

    #[test]
    fn generated_networks_are_valid_and_ages_step_by_year() {
        let data = generate(&small()).unwrap();
        for s in data.dataset.subjects() {
            assert!((1..=5).contains(&s.visits.len()));
            assert!((60.0..90.0).contains(&s.visits[0].age));
            for (t, v) in s.visits.iter().enumerate() {
                assert_eq!(v.age, s.visits[0].age + t as f64);
                assert_eq!(v.network, v.network.t());
                assert!(v.network.diag().iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn signal_subgraphs_are_four_node_cliques() {
        let data = generate(&small()).unwrap();
        assert_eq!(data.truth.components.len(), 2);
        for c in &data.truth.components {
            assert_eq!(c.support.len(), 4);
        }
        let expected: BTreeSet<Edge> = data
            .truth
            .components
            .iter()
            .flat_map(|c| {
                let s = c.support.clone();
                (0..4).flat_map(move |i| (0..i).map({
                    let s = s.clone();
                    move |j| Edge::new(s[i], s[j])
                }))
            })
            .collect();
        assert_eq!(data.truth.signal_edges, expected);
    }

    #[test]
    fn zero_effects_give_even_odds() {
        let cfg = GeneratorConfig {
            age_effects: vec![AgeEffect { gamma: 0.0, rho: 0.0, alpha: 0.0 }; 2],
            ..small()
        };
        let data = generate(&cfg).unwrap();
        assert!(data.probabilities.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.probabilities, b.probabilities);
    }

    #[test]
    fn followups_change_edges_by_about_one_percent() {
        let cfg = GeneratorConfig { n: 200, max_visits: 5, ..GeneratorConfig::default() };
        let data = generate(&cfg).unwrap();
        let mut ratios = Vec::new();
        for s in data.dataset.subjects() {
            for pair in s.visits.windows(2) {
                for a in 1..cfg.nodes {
                    for b in 0..a {
                        let prev = pair[0].network[[a, b]];
                        if prev != 0.0 {
                            ratios.push(pair[1].network[[a, b]] / prev - 1.0);
                        }
                    }
                }
            }
        }
        let sd = crate::numeric::sample_sd(&ratios);
        assert!((sd - 0.01).abs() < 0.001, "sd = {sd}");
    }
}
