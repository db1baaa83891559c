//! Reading a fit: normalized components, original-scale age effects and the
//! selected clique subgraphs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::params::{Component, SblrParams};
use crate::data::StandardizationStats;
use crate::error::{Error, Result};

/// Undirected edge stored with `u > v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Edge {
        assert_ne!(a, b, "self loops are not edges");
        Edge { u: a.max(b), v: a.min(b) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// `lambda(g) = gamma g^2 + rho g + alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeEffect {
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
}

impl AgeEffect {
    pub fn of(c: &Component) -> Self {
        AgeEffect {
            gamma: c.gamma,
            rho: c.rho,
            alpha: c.alpha,
        }
    }

    /// Evaluates at raw age `g`.
    pub fn eval(&self, g: f64) -> f64 {
        self.gamma * g * g + self.rho * g + self.alpha
    }

    /// Evaluates on the standardized scale, where age and squared age are
    /// standardized separately.
    pub fn eval_standardized(&self, age: f64, age_sq: f64) -> f64 {
        self.gamma * age_sq + self.rho * age + self.alpha
    }

    fn scaled(&self, factor: f64) -> Self {
        AgeEffect {
            gamma: self.gamma * factor,
            rho: self.rho * factor,
            alpha: self.alpha * factor,
        }
    }
}

/// Component rescaled so the largest off-diagonal entry of `b b'` has
/// magnitude one, with the age effect scaled inversely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedComponent {
    pub index: usize,
    pub empty: bool,
    pub beta: Vec<f64>,
    pub age_effect: AgeEffect,
    /// Largest `|b_u b_v|`, `u != v`, before scaling (zero when empty).
    pub scale: f64,
}

impl NormalizedComponent {
    /// Entry `(u, v)` of the normalized component matrix.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.beta[u] * self.beta[v]
    }
}

fn top_two_magnitudes(beta: &[f64]) -> (f64, f64) {
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for &b in beta {
        let a = b.abs();
        if a > first {
            second = first;
            first = a;
        } else if a > second {
            second = a;
        }
    }
    (first, second)
}

pub fn normalize_components(params: &SblrParams) -> Vec<NormalizedComponent> {
    params
        .components
        .iter()
        .enumerate()
        .map(|(index, c)| {
            if c.is_empty() {
                return NormalizedComponent {
                    index,
                    empty: true,
                    beta: c.beta.clone(),
                    age_effect: AgeEffect::of(c),
                    scale: 0.0,
                };
            }
            let (first, second) = top_two_magnitudes(&c.beta);
            let scale = first * second;
            let root = scale.sqrt();
            NormalizedComponent {
                index,
                empty: false,
                beta: c.beta.iter().map(|b| b / root).collect(),
                age_effect: AgeEffect::of(c).scaled(scale),
                scale,
            }
        })
        .collect()
}

/// Maps a standardized-scale age effect back to raw ages.
pub fn recover_age_effect(effect: AgeEffect, stats: &StandardizationStats) -> Result<AgeEffect> {
    if stats.age_sd == 0.0 || stats.agesq_sd == 0.0 {
        return Err(Error::DegenerateAges);
    }
    Ok(AgeEffect {
        gamma: effect.gamma / stats.agesq_sd,
        rho: effect.rho / stats.age_sd,
        alpha: effect.alpha
            - effect.rho * stats.age_mean / stats.age_sd
            - effect.gamma * stats.agesq_mean / stats.agesq_sd,
    })
}

pub fn recover_age_effects(params: &SblrParams, stats: &StandardizationStats) -> Result<Vec<AgeEffect>> {
    params
        .components
        .iter()
        .map(|c| recover_age_effect(AgeEffect::of(c), stats))
        .collect()
}

/// Per component, the clique over the loading support with weights from the
/// normalized component matrix. Empty components yield no edges.
pub fn extract_subgraphs(params: &SblrParams) -> Vec<Vec<WeightedEdge>> {
    normalize_components(params)
        .into_iter()
        .map(|nc| {
            if nc.empty {
                return Vec::new();
            }
            let support: Vec<usize> = (0..nc.beta.len()).filter(|&u| nc.beta[u] != 0.0).collect();
            let original = &params.components[nc.index].beta;
            let mut edges = Vec::new();
            for (a, &u) in support.iter().enumerate() {
                for &v in &support[..a] {
                    edges.push(WeightedEdge {
                        u,
                        v,
                        weight: original[u] * original[v] / nc.scale,
                    });
                }
            }
            edges
        })
        .collect()
}

/// Union of the selected cliques.
pub fn selected_edges(params: &SblrParams) -> BTreeSet<Edge> {
    extract_subgraphs(params)
        .into_iter()
        .flatten()
        .map(|e| Edge::new(e.u, e.v))
        .collect()
}
