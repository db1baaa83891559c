//! Unstructured elastic-net logistic regression on the vectorized lower
//! triangles of the three design matrices.
//!
//! Every edge gets its own coefficient in each of `B1, B2, B3`, so the
//! selected edges carry no clique structure. The solver is cyclic coordinate
//! descent with the same quadratic surrogate, soft-threshold step and descent
//! safeguard as the SBLR solver; the intercept is never penalized.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::DesignTriple;
use crate::error::Result;
use crate::model::{validate_inputs, Edge, Surrogate, WeightedEdge};
use crate::numeric::{clamp_prob, sigmoid, softplus};

const MAX_HALVINGS: usize = 30;

/// Number of strictly-lower-triangular entries of a `V x V` matrix.
pub fn pair_count(nodes: usize) -> usize {
    nodes * (nodes - 1) / 2
}

/// `(u, v)` with `u > v` for every lower-triangular position, in feature order.
pub fn pair_index(nodes: usize) -> Vec<(usize, usize)> {
    (1..nodes).flat_map(|u| (0..u).map(move |v| (u, v))).collect()
}

/// Column-major stack of the lower-triangular features of `x0, x1, x2`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    nodes: usize,
    rows: usize,
    columns: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_designs(designs: &[DesignTriple]) -> Self {
        let nodes = designs.first().map_or(0, DesignTriple::nodes);
        let pairs = pair_index(nodes);
        let rows = designs.len();
        let p = 3 * pairs.len();
        let mut columns = vec![0.0; p * rows];
        for (i, d) in designs.iter().enumerate() {
            for m in 0..3 {
                for (t, &(u, v)) in pairs.iter().enumerate() {
                    columns[(m * pairs.len() + t) * rows + i] = d.row(m, u)[v];
                }
            }
        }
        FeatureMatrix { nodes, rows, columns }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn num_features(&self) -> usize {
        3 * pair_count(self.nodes)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.rows..(j + 1) * self.rows]
    }
}

/// Intercept plus the stacked lower triangles of `B1, B2, B3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstructuredParams {
    pub nodes: usize,
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl UnstructuredParams {
    pub fn zeros(nodes: usize) -> Self {
        UnstructuredParams {
            nodes,
            intercept: 0.0,
            coefs: vec![0.0; 3 * pair_count(nodes)],
        }
    }

    /// Coefficient of edge `(u, v)` in matrix `m` (`0` for `B1`).
    pub fn coef(&self, m: usize, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        let (u, v) = (u.max(v), u.min(v));
        self.coefs[m * pair_count(self.nodes) + u * (u - 1) / 2 + v]
    }

    /// Full symmetric coefficient matrix `B_{m+1}`.
    pub fn matrix(&self, m: usize) -> ndarray::Array2<f64> {
        let mut b = ndarray::Array2::zeros((self.nodes, self.nodes));
        for (u, v) in pair_index(self.nodes) {
            let c = self.coef(m, u, v);
            b[[u, v]] = c;
            b[[v, u]] = c;
        }
        b
    }

    /// Intercept plus the coefficient-weighted lower-triangular features.
    pub fn logit(&self, design: &DesignTriple) -> f64 {
        let mut eta = self.intercept;
        let p = pair_count(self.nodes);
        for (j, &c) in self.coefs.iter().enumerate() {
            if c != 0.0 {
                let (m, t) = (j / p, j % p);
                let (u, v) = pair_from_index(t);
                eta += c * design.row(m, u)[v];
            }
        }
        eta
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefs.iter().filter(|&&c| c != 0.0).count()
    }

    /// Nonzero entries `(u, v, value)` of `B_{m+1}`.
    pub fn edges(&self, m: usize) -> Vec<WeightedEdge> {
        pair_index(self.nodes)
            .into_iter()
            .filter_map(|(u, v)| {
                let w = self.coef(m, u, v);
                (w != 0.0).then_some(WeightedEdge { u, v, weight: w })
            })
            .collect()
    }

    /// Union of nonzero entries across the three matrices.
    pub fn selected_edges(&self) -> BTreeSet<Edge> {
        (0..3)
            .flat_map(|m| self.edges(m))
            .map(|e| Edge::new(e.u, e.v))
            .collect()
    }
}

/// Inverse of `u (u - 1) / 2 + v`.
fn pair_from_index(t: usize) -> (usize, usize) {
    let mut u = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0) as usize;
    while u * (u - 1) / 2 > t {
        u -= 1;
    }
    while (u + 1) * u / 2 <= t {
        u += 1;
    }
    (u, t - u * (u - 1) / 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub tolerance: f64,
    pub max_cycles: usize,
    pub safeguard: bool,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            tolerance: 1e-5,
            max_cycles: 1000,
            safeguard: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrFitResult {
    pub params: UnstructuredParams,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
    pub cycles_used: usize,
    pub converged: bool,
}

/// Penalized objective of the unstructured model.
pub fn objective(params: &UnstructuredParams, designs: &[DesignTriple], labels: &[f64], delta: f64, eta: f64) -> f64 {
    let nll: f64 = designs
        .iter()
        .zip(labels)
        .map(|(d, &y)| {
            let l = params.logit(d);
            softplus(l) - y * l
        })
        .sum::<f64>()
        / labels.len() as f64;
    let pen: f64 = params
        .coefs
        .iter()
        .map(|c| eta * c.abs() + (1.0 - eta) * c * c / 2.0)
        .sum();
    nll + delta * pen
}

pub fn fit_unstructured(
    designs: &[DesignTriple],
    labels: &[f64],
    delta: f64,
    eta: f64,
    config: &LrConfig,
    warm: Option<&UnstructuredParams>,
) -> Result<LrFitResult> {
    let nodes = validate_inputs(designs, labels)?;
    let features = FeatureMatrix::from_designs(designs);
    let params = match warm {
        Some(w) if w.nodes == nodes => w.clone(),
        _ => UnstructuredParams::zeros(nodes),
    };
    let mut state = LrState::new(&features, labels, delta, eta, config.safeguard, params);
    let mut trace = Vec::new();
    let mut prev = state.loss;
    let mut converged = false;
    for _ in 0..config.max_cycles {
        let cur = state.cycle();
        trace.push(cur);
        if prev == 0.0 || ((prev - cur) / prev).abs() < config.tolerance {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(LrFitResult {
        final_loss: state.loss,
        params: state.params,
        cycles_used: trace.len(),
        loss_trace: trace,
        converged,
    })
}

struct LrState<'a> {
    features: &'a FeatureMatrix,
    labels: &'a [f64],
    delta: f64,
    eta: f64,
    safeguard: bool,
    params: UnstructuredParams,
    logits: Vec<f64>,
    probs: Vec<f64>,
    penalty: f64,
    loss: f64,
    trial: Vec<f64>,
}

impl<'a> LrState<'a> {
    fn new(
        features: &'a FeatureMatrix,
        labels: &'a [f64],
        delta: f64,
        eta: f64,
        safeguard: bool,
        params: UnstructuredParams,
    ) -> Self {
        let n = labels.len();
        let mut logits = vec![params.intercept; n];
        for (j, &c) in params.coefs.iter().enumerate() {
            if c != 0.0 {
                for (l, x) in logits.iter_mut().zip(features.column(j)) {
                    *l += c * x;
                }
            }
        }
        let probs = logits.iter().map(|&l| sigmoid(l)).collect();
        let penalty = delta
            * params
                .coefs
                .iter()
                .map(|c| eta * c.abs() + (1.0 - eta) * c * c / 2.0)
                .sum::<f64>();
        let mut state = LrState {
            features,
            labels,
            delta,
            eta,
            safeguard,
            params,
            logits,
            probs,
            penalty,
            loss: 0.0,
            trial: vec![0.0; n],
        };
        state.loss = state.nll_at(None, 0.0) + penalty;
        state
    }

    fn cycle(&mut self) -> f64 {
        for j in 0..self.params.coefs.len() {
            self.update(Some(j));
        }
        self.update(None);
        self.loss
    }

    fn nll_at(&mut self, column: Option<usize>, t: f64) -> f64 {
        match column {
            Some(j) => {
                for ((dst, &l), &x) in self.trial.iter_mut().zip(&self.logits).zip(self.features.column(j)) {
                    *dst = l + t * x;
                }
            }
            None => {
                for (dst, &l) in self.trial.iter_mut().zip(&self.logits) {
                    *dst = l + t;
                }
            }
        }
        self.trial
            .iter()
            .zip(self.labels)
            .map(|(&l, &y)| softplus(l) - y * l)
            .sum::<f64>()
            / self.trial.len() as f64
    }

    /// `None` is the intercept.
    fn update(&mut self, column: Option<usize>) {
        let n = self.labels.len() as f64;
        let (mut a, mut b) = (0.0, 0.0);
        let current = match column {
            Some(j) => {
                for ((&x, &p), &y) in self.features.column(j).iter().zip(&self.probs).zip(self.labels) {
                    let p = clamp_prob(p);
                    b -= (y - p) * x;
                    a += p * (1.0 - p) * x * x;
                }
                self.params.coefs[j]
            }
            None => {
                for (&p, &y) in self.probs.iter().zip(self.labels) {
                    let p = clamp_prob(p);
                    b -= y - p;
                    a += p * (1.0 - p);
                }
                self.params.intercept
            }
        };
        let penalized = column.is_some();
        let surrogate = Surrogate {
            current,
            a: a / n,
            b: b / n,
            d: if penalized { self.delta * self.eta } else { 0.0 },
            e: if penalized { self.delta * (1.0 - self.eta) } else { 0.0 },
            unpenalized: !penalized,
        };
        let step = surrogate.minimizer() - current;
        if step == 0.0 {
            return;
        }
        let (delta, eta) = (self.delta, self.eta);
        let pen_change = |t: f64| {
            if !penalized {
                return 0.0;
            }
            let new = current + t;
            delta * (eta * (new.abs() - current.abs()) + (1.0 - eta) * (new * new - current * current) / 2.0)
        };
        let mut t = step;
        for _ in 0..=MAX_HALVINGS {
            let dpen = pen_change(t);
            let candidate = self.nll_at(column, t) + self.penalty + dpen;
            if !self.safeguard || candidate <= self.loss {
                match column {
                    Some(j) => {
                        self.params.coefs[j] += t;
                        for ((l, p), &x) in self.logits.iter_mut().zip(&mut self.probs).zip(self.features.column(j)) {
                            *l += t * x;
                            *p = sigmoid(*l);
                        }
                    }
                    None => {
                        self.params.intercept += t;
                        for (l, p) in self.logits.iter_mut().zip(&mut self.probs) {
                            *l += t;
                            *p = sigmoid(*l);
                        }
                    }
                }
                self.penalty += dpen;
                self.loss = candidate;
                return;
            }
            t *= 0.5;
        }
    }
}

/// Serializable summary of an unstructured fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrReport {
    pub method: String,
    pub intercept: f64,
    /// Nonzero lower-triangular entries of `B1`, `B2`, `B3`.
    pub b1: Vec<WeightedEdge>,
    pub b2: Vec<WeightedEdge>,
    pub b3: Vec<WeightedEdge>,
    pub selected_edges: Vec<Edge>,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
    pub cycles_used: usize,
    pub converged: bool,
    pub delta: f64,
    pub eta: f64,
    pub config: LrConfig,
}

impl LrReport {
    pub fn new(result: &LrFitResult, delta: f64, eta: f64, config: &LrConfig) -> Self {
        let p = &result.params;
        LrReport {
            method: "lr".into(),
            intercept: p.intercept,
            b1: p.edges(0),
            b2: p.edges(1),
            b3: p.edges(2),
            selected_edges: p.selected_edges().into_iter().collect(),
            final_loss: result.final_loss,
            loss_trace: result.loss_trace.clone(),
            cycles_used: result.cycles_used,
            converged: result.converged,
            delta,
            eta,
            config: config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::solver::tests::random_problem;

    /// Proximal gradient with backtracking, run to a tight tolerance.
    fn proximal_reference(designs: &[DesignTriple], labels: &[f64], delta: f64, eta: f64) -> f64 {
        let x = FeatureMatrix::from_designs(designs);
        let n = labels.len() as f64;
        let p = x.num_features();
        let mut w = UnstructuredParams::zeros(x.nodes());
        let mut step = 1.0;
        let obj = |w: &UnstructuredParams| objective(w, designs, labels, delta, eta);
        for _ in 0..20_000 {
            let resid: Vec<f64> = designs
                .iter()
                .zip(labels)
                .map(|(d, &y)| sigmoid(w.logit(d)) - y)
                .collect();
            let g0 = resid.iter().sum::<f64>() / n;
            let g: Vec<f64> = (0..p)
                .map(|j| x.column(j).iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n)
                .collect();
            let smooth = |w: &UnstructuredParams| {
                obj(w) - delta * eta * w.coefs.iter().map(|c| c.abs()).sum::<f64>()
            };
            let f0 = smooth(&w);
            loop {
                let mut cand = w.clone();
                cand.intercept -= step * g0;
                for j in 0..p {
                    let z = w.coefs[j] - step * g[j];
                    cand.coefs[j] = crate::numeric::soft_threshold(z, step * delta * eta);
                }
                let diff: f64 = (cand.intercept - w.intercept).powi(2)
                    + cand.coefs.iter().zip(&w.coefs).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let lin = g0 * (cand.intercept - w.intercept)
                    + g.iter().zip(cand.coefs.iter().zip(&w.coefs)).map(|(gj, (a, b))| gj * (a - b)).sum::<f64>();
                if smooth(&cand) <= f0 + lin + diff / (2.0 * step) + 1e-15 {
                    w = cand;
                    break;
                }
                step *= 0.5;
            }
        }
        obj(&w)
    }

    #[test]
    fn coordinate_descent_matches_proximal_gradient() {
        let (designs, labels) = random_problem(40, 6, 3);
        let (delta, eta) = (0.02, 1.0);
        let config = LrConfig {
            tolerance: 1e-12,
            ..LrConfig::default()
        };
        let res = fit_unstructured(&designs, &labels, delta, eta, &config, None).unwrap();
        let reference = proximal_reference(&designs, &labels, delta, eta);
        let ours = objective(&res.params, &designs, &labels, delta, eta);
        assert!((ours - reference).abs() < 1e-4, "{ours} vs {reference}");
    }

    #[test]
    fn pair_indexing_round_trips() {
        for (t, (u, v)) in pair_index(9).into_iter().enumerate() {
            assert_eq!(pair_from_index(t), (u, v));
        }
    }

    #[test]
    fn selected_edges_invert_vectorization() {
        let mut p = UnstructuredParams::zeros(5);
        p.coefs[3] = 0.5; // B1 (3, 0)
        p.coefs[pair_count(5) + 9] = -1.0; // B2 (4, 3)
        p.coefs[2 * pair_count(5) + 3] = 0.1; // B3 (3, 0)
        let edges: Vec<Edge> = p.selected_edges().into_iter().collect();
        assert_eq!(edges, vec![Edge::new(3, 0), Edge::new(4, 3)]);
        assert_eq!(p.matrix(0)[[0, 3]], 0.5);
    }

    #[test]
    fn full_shrinkage_leaves_prevalence_intercept() {
        let (designs, _) = random_problem(40, 5, 1);
        let labels: Vec<f64> = (0..40).map(|i| f64::from(i % 5 == 0)).collect();
        let res = fit_unstructured(&designs, &labels, 1e3, 0.5, &LrConfig::default(), None).unwrap();
        assert_eq!(res.params.nonzero_count(), 0);
        assert!((res.params.intercept - (0.2f64 / 0.8).ln()).abs() < 1e-6);
    }

    #[test]
    fn strong_feature_gets_matching_sign() {
        let (mut designs, _) = random_problem(60, 5, 2);
        let labels: Vec<f64> = (0..60).map(|i| f64::from(i % 2 == 0)).collect();
        // make x0[(2,1)] track the label
        for (d, &y) in designs.iter_mut().zip(&labels) {
            let mut x0 = d.x0().to_owned();
            x0[[2, 1]] = if y == 1.0 { -1.0 } else { 1.0 };
            x0[[1, 2]] = x0[[2, 1]];
            *d = DesignTriple::from_parts(x0.view(), d.x1(), d.x2());
        }
        let res = fit_unstructured(&designs, &labels, 0.05, 1.0, &LrConfig::default(), None).unwrap();
        assert!(res.params.coef(0, 2, 1) < 0.0);
        let mut prev = f64::INFINITY;
        for &l in &res.loss_trace {
            assert!(l <= prev);
            prev = l;
        }
    }
}
