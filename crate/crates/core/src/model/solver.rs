//! Coordinate descent on the penalized SBLR objective.
//!
//! Each coordinate is updated by minimizing a quadratic expansion of the mean
//! negative log-likelihood at the current value plus the coordinate's exact
//! penalty, which for every coordinate has the form `d |theta| + e theta^2 / 2`.
//! The logit is affine in every single coordinate (the design matrices have a
//! zero diagonal), so cached logits and quadratic forms are refreshed exactly
//! after each step.

use std::borrow::Cow;

use super::loss::{mean_negative_log_likelihood, pair_sums, penalty};
use super::params::{AgeTerm, SblrParams};
use crate::data::DesignTriple;
use crate::error::{Error, Result};
use crate::numeric::{clamp_prob, sigmoid, soft_threshold};

/// Halvings tried before a rejected step falls back to the current value.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Beta { component: usize, node: usize },
    Age { component: usize, term: AgeTerm },
    Intercept,
}

/// One-dimensional model of the objective around `current`:
///
/// `b (t - current) + a/2 (t - current)^2 + d |t| + e t^2 / 2` (plus a constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surrogate {
    pub current: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub e: f64,
    /// The intercept carries no penalty and uses a plain Newton step.
    pub unpenalized: bool,
}

impl Surrogate {
    pub fn value(&self, t: f64) -> f64 {
        let s = t - self.current;
        self.b * s + 0.5 * self.a * s * s + self.d * t.abs() + 0.5 * self.e * t * t
    }

    /// Closed-form minimizer; zero when the surrogate has no curvature.
    pub fn minimizer(&self) -> f64 {
        if self.unpenalized {
            return if self.a > 0.0 {
                self.current - self.b / self.a
            } else {
                0.0
            };
        }
        let curvature = self.a + self.e;
        if curvature > 0.0 {
            soft_threshold(self.a * self.current - self.b, self.d) / curvature
        } else {
            0.0
        }
    }
}

/// Per-subject first and second derivative of the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub first: f64,
    pub second: f64,
}

/// Cached logits and the quadratic forms `b_h' x_m b_h` for every subject.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitCache {
    k: usize,
    pub logits: Vec<f64>,
    /// Index `i * K + h`, entries for `x0, x1, x2`.
    pub quad: Vec<[f64; 3]>,
}

impl LogitCache {
    /// Evaluates every quantity directly, accumulating sums in `order`.
    pub fn from_scratch(params: &SblrParams, designs: &[DesignTriple], order: &[usize]) -> Self {
        let k = params.k();
        let mut quad = vec![[0.0; 3]; designs.len() * k];
        let mut logits = vec![params.intercept; designs.len()];
        let supports: Vec<Vec<usize>> = params
            .components
            .iter()
            .map(|c| order.iter().copied().filter(|&u| c.beta[u] != 0.0).collect())
            .collect();
        for (i, design) in designs.iter().enumerate() {
            let x = design.as_slice();
            let v = design.nodes();
            for (h, c) in params.components.iter().enumerate() {
                let mut q = [0.0; 3];
                for &u in &supports[h] {
                    let mut r = [0.0; 3];
                    for &w in &supports[h] {
                        let b = c.beta[w];
                        for (m, rm) in r.iter_mut().enumerate() {
                            *rm += x[(m * v + u) * v + w] * b;
                        }
                    }
                    for m in 0..3 {
                        q[m] += c.beta[u] * r[m];
                    }
                }
                quad[i * k + h] = q;
                let coefs = c.coefs();
                logits[i] += coefs[0] * q[0] + coefs[1] * q[1] + coefs[2] * q[2];
            }
        }
        LogitCache { k, logits, quad }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn quad(&self, subject: usize, component: usize) -> [f64; 3] {
        self.quad[subject * self.k + component]
    }

    /// Largest absolute difference of the logits.
    pub fn max_logit_deviation(&self, other: &LogitCache) -> f64 {
        self.logits
            .iter()
            .zip(&other.logits)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Design rows regrouped node-major: for each node, the three rows of every
/// subject sit next to each other, so a loading update streams through one
/// contiguous block. Columns are stored in sweep order.
#[derive(Debug, Clone)]
pub struct NodeMajorDesigns {
    nodes: usize,
    subjects: usize,
    order: Vec<usize>,
    data: Vec<f64>,
}

impl NodeMajorDesigns {
    /// `order` must be a permutation of the nodes.
    pub fn new(designs: &[DesignTriple], order: &[usize]) -> Self {
        let nodes = designs.first().map_or(0, DesignTriple::nodes);
        let subjects = designs.len();
        let mut data = Vec::with_capacity(3 * nodes * nodes * subjects);
        for u in 0..nodes {
            for d in designs {
                for m in 0..3 {
                    let row = d.row(m, u);
                    data.extend(order.iter().map(|&w| row[w]));
                }
            }
        }
        NodeMajorDesigns { nodes, subjects, order: order.to_vec(), data }
    }

    /// Rows `u` of `x0, x1, x2` for every subject, subject-major.
    fn node_block(&self, u: usize) -> &[f64] {
        let len = 3 * self.nodes * self.subjects;
        &self.data[u * len..(u + 1) * len]
    }
}

/// Mutable coordinate-descent state for one penalized problem.
pub struct Solver<'a> {
    designs: &'a [DesignTriple],
    packed: Cow<'a, NodeMajorDesigns>,
    labels: &'a [f64],
    nodes: usize,
    delta: f64,
    eta: f64,
    safeguard: bool,
    order: Vec<usize>,
    params: SblrParams,
    cache: LogitCache,
    probs: Vec<f64>,
    penalty: f64,
    loss: f64,
    // scratch
    slopes: Vec<f64>,
    rows: Vec<[f64; 3]>,
    trial: Vec<f64>,
    trial_probs: Vec<f64>,
    support: Vec<usize>,
    support_beta: Vec<f64>,
    rejected_steps: usize,
}

impl<'a> Solver<'a> {
    /// `order` is the node sweep order for loading updates and the order in
    /// which every node sum is accumulated; `None` means `0..V`.
    pub fn new(
        designs: &'a [DesignTriple],
        labels: &'a [f64],
        delta: f64,
        eta: f64,
        init: SblrParams,
        order: Option<Vec<usize>>,
        safeguard: bool,
    ) -> Result<Self> {
        Self::build(designs, None, labels, delta, eta, init, order, safeguard)
    }

    /// Like [`Solver::new`], reusing a node-major copy of `designs`.
    #[allow(clippy::too_many_arguments)]
    pub fn with_packed(
        designs: &'a [DesignTriple],
        packed: &'a NodeMajorDesigns,
        labels: &'a [f64],
        delta: f64,
        eta: f64,
        init: SblrParams,
        order: Option<Vec<usize>>,
        safeguard: bool,
    ) -> Result<Self> {
        if packed.subjects != designs.len() || packed.nodes != init.nodes() {
            return Err(Error::DimensionMismatch {
                expected: designs.len(),
                found: packed.subjects,
            });
        }
        let identity: Vec<usize>;
        let wanted = match &order {
            Some(o) => o.as_slice(),
            None => {
                identity = (0..init.nodes()).collect();
                &identity
            }
        };
        if packed.order != wanted {
            return Err(Error::InvalidConfig("packed designs use a different sweep order".into()));
        }
        Self::build(designs, Some(packed), labels, delta, eta, init, order, safeguard)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        designs: &'a [DesignTriple],
        packed: Option<&'a NodeMajorDesigns>,
        labels: &'a [f64],
        delta: f64,
        eta: f64,
        init: SblrParams,
        order: Option<Vec<usize>>,
        safeguard: bool,
    ) -> Result<Self> {
        let nodes = init.nodes();
        if designs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: designs.len(),
                found: labels.len(),
            });
        }
        if let Some(d) = designs.iter().find(|d| d.nodes() != nodes) {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                found: d.nodes(),
            });
        }
        let order = order.unwrap_or_else(|| (0..nodes).collect());
        let mut seen = vec![false; nodes];
        if order.len() != nodes || order.iter().any(|&u| u >= nodes || std::mem::replace(&mut seen[u], true)) {
            return Err(Error::InvalidConfig("sweep order must be a permutation of the nodes".into()));
        }
        let n = designs.len();
        let packed = match packed {
            Some(p) => Cow::Borrowed(p),
            None => Cow::Owned(NodeMajorDesigns::new(designs, &order)),
        };
        let mut solver = Solver {
            designs,
            packed,
            labels,
            nodes,
            delta,
            eta,
            safeguard,
            order,
            cache: LogitCache {
                k: init.k(),
                logits: Vec::new(),
                quad: Vec::new(),
            },
            params: init,
            probs: vec![0.0; n],
            penalty: 0.0,
            loss: 0.0,
            slopes: vec![0.0; n],
            rows: vec![[0.0; 3]; n],
            trial: vec![0.0; n],
            trial_probs: vec![0.0; n],
            support: Vec::with_capacity(nodes),
            support_beta: Vec::with_capacity(nodes),
            rejected_steps: 0,
        };
        solver.refresh();
        Ok(solver)
    }

    /// Recomputes the cache, probabilities and loss from the parameters.
    pub fn refresh(&mut self) {
        self.cache = LogitCache::from_scratch(&self.params, self.designs, &self.order);
        for (p, &eta) in self.probs.iter_mut().zip(&self.cache.logits) {
            *p = sigmoid(eta);
        }
        self.penalty = self.penalty_in_order();
        self.loss = mean_negative_log_likelihood(&self.cache.logits, self.labels) + self.penalty;
    }

    fn penalty_in_order(&self) -> f64 {
        let mut total = 0.0;
        for c in &self.params.components {
            let (p1, p2) = pair_sums(&c.beta, self.order.iter().copied());
            let l1: f64 = c.coefs().iter().map(|x| x.abs()).sum();
            let l2: f64 = c.coefs().iter().map(|x| x * x).sum();
            total += self.delta * (self.eta * l1 * p1 + (1.0 - self.eta) * l2 * p2 / 2.0);
        }
        total
    }

    pub fn params(&self) -> &SblrParams {
        &self.params
    }

    pub fn into_params(self) -> SblrParams {
        self.params
    }

    pub fn cache(&self) -> &LogitCache {
        &self.cache
    }

    /// Running value of the penalized objective.
    pub fn loss(&self) -> f64 {
        self.loss
    }

    /// The objective re-evaluated from the parameters.
    pub fn loss_from_scratch(&self) -> f64 {
        let cache = LogitCache::from_scratch(&self.params, self.designs, &self.order);
        mean_negative_log_likelihood(&cache.logits, self.labels) + penalty(&self.params, self.delta, self.eta)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Number of coordinate steps the safeguard shortened or rejected.
    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Derivatives of each subject's log-likelihood with respect to `coord`.
    pub fn partials(&mut self, coord: Coordinate) -> Vec<Partial> {
        self.load_slopes(coord);
        self.slopes
            .iter()
            .zip(&self.probs)
            .zip(self.labels)
            .map(|((&s, &p), &y)| Partial {
                first: (y - p) * s,
                second: -p * (1.0 - p) * s * s,
            })
            .collect()
    }

    /// Quadratic-plus-penalty model of the objective along `coord`.
    pub fn surrogate(&mut self, coord: Coordinate) -> Surrogate {
        self.load_slopes(coord);
        let n = self.slopes.len() as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for ((&s, &p), &y) in self.slopes.iter().zip(&self.probs).zip(self.labels) {
            let p = clamp_prob(p);
            b -= (y - p) * s;
            a += p * (1.0 - p) * s * s;
        }
        let (d, e) = self.penalty_factors(coord);
        Surrogate {
            current: self.value(coord),
            a: a / n,
            b: b / n,
            d,
            e,
            unpenalized: coord == Coordinate::Intercept,
        }
    }

    pub fn value(&self, coord: Coordinate) -> f64 {
        match coord {
            Coordinate::Beta { component, node } => self.params.components[component].beta[node],
            Coordinate::Age { component, term } => self.params.components[component].coef(term),
            Coordinate::Intercept => self.params.intercept,
        }
    }

    /// Updates one coordinate and returns its new value.
    pub fn update(&mut self, coord: Coordinate) -> f64 {
        let surrogate = self.surrogate(coord);
        let current = surrogate.current;
        let proposal = surrogate.minimizer();
        let step = proposal - current;
        if step == 0.0 {
            return current;
        }
        let (l1_weight, l2_weight) = self.penalty_weights(coord);
        let (delta, eta) = (self.delta, self.eta);
        let penalty_change = |t: f64| {
            let new = current + t;
            delta
                * (eta * l1_weight * (new.abs() - current.abs())
                    + (1.0 - eta) * l2_weight * (new * new - current * current) / 2.0)
        };

        let mut t = step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let nll = self.trial_nll(t);
            let dpen = penalty_change(t);
            let candidate = nll + self.penalty + dpen;
            if !self.safeguard || candidate <= self.loss {
                accepted = Some((t, dpen, candidate));
                break;
            }
            t *= 0.5;
        }
        if t != step {
            self.rejected_steps += 1;
        }
        match accepted {
            Some((t, dpen, candidate)) => {
                let new = if t == step { proposal } else { current + t };
                self.apply(coord, t, new);
                self.penalty += dpen;
                self.loss = candidate;
                new
            }
            None => current,
        }
    }

    /// One full sweep: loadings (component-major, node-minor), then
    /// `alpha, rho, gamma` per component, then the intercept. Returns the loss.
    pub fn cycle(&mut self) -> f64 {
        let k = self.params.k();
        for h in 0..k {
            for idx in 0..self.nodes {
                let node = self.order[idx];
                self.update(Coordinate::Beta { component: h, node });
            }
        }
        for h in 0..k {
            for term in AgeTerm::ALL {
                self.update(Coordinate::Age { component: h, term });
            }
        }
        self.update(Coordinate::Intercept);
        self.loss
    }

    /// `(d, e)` of the coordinate's penalty `d |t| + e t^2 / 2`.
    fn penalty_factors(&self, coord: Coordinate) -> (f64, f64) {
        let (l1, l2) = self.penalty_weights(coord);
        (self.delta * self.eta * l1, self.delta * (1.0 - self.eta) * l2)
    }

    /// Coefficients multiplying `|t|` and `t^2 / 2` inside the penalty, before
    /// `delta * eta` and `delta * (1 - eta)`.
    fn penalty_weights(&self, coord: Coordinate) -> (f64, f64) {
        match coord {
            Coordinate::Beta { component, node } => {
                let c = &self.params.components[component];
                let l1: f64 = c.coefs().iter().map(|x| x.abs()).sum();
                let l2: f64 = c.coefs().iter().map(|x| x * x).sum();
                let (mut s1, mut s2) = (0.0, 0.0);
                for &v in &self.order {
                    let b = c.beta[v];
                    if v != node && b != 0.0 {
                        s1 += b.abs();
                        s2 += b * b;
                    }
                }
                (l1 * s1, l2 * s2)
            }
            Coordinate::Age { component, .. } => {
                pair_sums(&self.params.components[component].beta, self.order.iter().copied())
            }
            Coordinate::Intercept => (0.0, 0.0),
        }
    }

    /// Fills `slopes[i] = d logit_i / d coord` (and `rows` for loadings).
    fn load_slopes(&mut self, coord: Coordinate) {
        match coord {
            Coordinate::Intercept => self.slopes.fill(1.0),
            Coordinate::Age { component, term } => {
                let k = self.cache.k;
                let m = term.index();
                for (i, s) in self.slopes.iter_mut().enumerate() {
                    *s = self.cache.quad[i * k + component][m];
                }
            }
            Coordinate::Beta { component, node } => {
                let c = &self.params.components[component];
                // positions in sweep order; the updated node contributes nothing
                self.support.clear();
                self.support_beta.clear();
                for (pos, &v) in self.order.iter().enumerate() {
                    let b = if v == node { 0.0 } else { c.beta[v] };
                    if b != 0.0 {
                        self.support.push(pos);
                    }
                    self.support_beta.push(b);
                }
                let [c0, c1, c2] = c.coefs();
                let v = self.nodes;
                let block = self.packed.node_block(node);
                // Both branches add the same nonzero products in the same
                // order, so they agree bitwise.
                let dense = 2 * self.support.len() > v;
                for ((rows, slope), x) in self.rows.iter_mut().zip(&mut self.slopes).zip(block.chunks_exact(3 * v)) {
                    let (x0, rest) = x.split_at(v);
                    let (x1, x2) = rest.split_at(v);
                    let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
                    if dense {
                        for (((&a0, &a1), &a2), &b) in x0.iter().zip(x1).zip(x2).zip(&self.support_beta) {
                            r0 += a0 * b;
                            r1 += a1 * b;
                            r2 += a2 * b;
                        }
                    } else {
                        for &pos in &self.support {
                            let b = self.support_beta[pos];
                            r0 += x0[pos] * b;
                            r1 += x1[pos] * b;
                            r2 += x2[pos] * b;
                        }
                    }
                    *rows = [r0, r1, r2];
                    *slope = 2.0 * (c0 * r0 + c1 * r1 + c2 * r2);
                }
            }
        }
    }

    /// Mean negative log-likelihood after moving the loaded coordinate by `t`.
    /// Leaves the trial logits and their probabilities in scratch for `apply`.
    fn trial_nll(&mut self, t: f64) -> f64 {
        let mut total = 0.0;
        for ((((dst, p), &eta), &s), &y) in self
            .trial
            .iter_mut()
            .zip(&mut self.trial_probs)
            .zip(&self.cache.logits)
            .zip(&self.slopes)
            .zip(self.labels)
        {
            let x = eta + t * s;
            // one exponential serves both the loss and the probability
            let e = (-x.abs()).exp();
            *dst = x;
            *p = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            total += x.max(0.0) + e.ln_1p() - y * x;
        }
        total / self.trial.len() as f64
    }

    /// Moves `coord` by `t`; the last `trial_nll` call must have used the same `t`.
    /// Moves `coord` by `t` to `new`; `new` is passed separately so a full
    /// step stores the closed-form value without rounding.
    fn apply(&mut self, coord: Coordinate, t: f64, new: f64) {
        let k = self.cache.k;
        match coord {
            Coordinate::Beta { component, node } => {
                let c = &mut self.params.components[component];
                c.beta[node] = new;
                // Fewer than two loadings: the component matrix is exactly zero,
                // so drop accumulated rounding from its quadratic forms.
                if c.beta.iter().filter(|&&b| b != 0.0).count() < 2 {
                    let coefs = c.coefs();
                    for i in 0..self.slopes.len() {
                        let q = std::mem::take(&mut self.cache.quad[i * k + component]);
                        self.slopes[i] = -(coefs[0] * q[0] + coefs[1] * q[1] + coefs[2] * q[2]);
                    }
                    for ((eta, p), &s) in self.cache.logits.iter_mut().zip(&mut self.probs).zip(&self.slopes) {
                        *eta += s;
                        *p = sigmoid(*eta);
                    }
                    return;
                }
                for i in 0..self.slopes.len() {
                    let q = &mut self.cache.quad[i * k + component];
                    let r = self.rows[i];
                    q[0] += 2.0 * t * r[0];
                    q[1] += 2.0 * t * r[1];
                    q[2] += 2.0 * t * r[2];
                }
            }
            Coordinate::Age { component, term } => {
                *self.params.components[component].coef_mut(term) = new;
            }
            Coordinate::Intercept => self.params.intercept = new,
        }
        self.cache.logits.copy_from_slice(&self.trial);
        self.probs.copy_from_slice(&self.trial_probs);
    }
}
