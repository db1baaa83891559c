#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sblr::data::{build_design, standardize, Dataset, DesignTriple, LongitudinalSubject, Visit};
use sblr::model::{AgeTerm, Coordinate, SblrParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_network<R: Rng>(rng: &mut R, v: usize) -> Array2<f64> {
    let mut w = Array2::zeros((v, v));
    for a in 1..v {
        for b in 0..a {
            let z = rng.random_range(-2.0..2.0);
            w[[a, b]] = z;
            w[[b, a]] = z;
        }
    }
    w
}

/// Random valid dataset with both classes present.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, v: usize) -> Dataset {
    let subjects = (0..n)
        .map(|i| {
            let visits = rng.random_range(1..=4usize);
            let mut age = rng.random_range(55.0..85.0);
            let visits = (0..visits)
                .map(|_| {
                    age += rng.random_range(0.5..1.5);
                    Visit { age, network: random_network(rng, v) }
                })
                .collect();
            let label = if i < 2 { i as u8 } else { u8::from(rng.random::<bool>()) };
            LongitudinalSubject { label, visits }
        })
        .collect();
    Dataset::with_nodes(v, subjects).unwrap()
}

/// Standardized designs and labels of a random dataset.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, v: usize) -> (Vec<DesignTriple>, Vec<f64>) {
    let data = random_dataset(rng, n, v);
    (build_design(&standardize(&data).0), data.labels())
}

/// Random parameters with some loadings zeroed so supports vary.
pub fn random_params<R: Rng>(rng: &mut R, k: usize, v: usize) -> SblrParams {
    let mut p = SblrParams::zeros(k, v);
    p.intercept = rng.random_range(-1.0..1.0);
    for c in &mut p.components {
        for b in &mut c.beta {
            if rng.random::<f64>() < 0.7 {
                *b = rng.random_range(-1.0..1.0);
            }
        }
        c.alpha = rng.random_range(-1.0..1.0);
        c.rho = rng.random_range(-1.0..1.0);
        c.gamma = rng.random_range(-1.0..1.0);
    }
    p
}

pub fn random_coordinate<R: Rng>(rng: &mut R, k: usize, v: usize) -> Coordinate {
    match rng.random_range(0..10) {
        0 => Coordinate::Intercept,
        1..=3 => Coordinate::Age { component: rng.random_range(0..k), term: AgeTerm::ALL[rng.random_range(0..3)] },
        _ => Coordinate::Beta { component: rng.random_range(0..k), node: rng.random_range(0..v) },
    }
}

pub fn set_coordinate(params: &mut SblrParams, coord: Coordinate, value: f64) {
    match coord {
        Coordinate::Beta { component, node } => params.components[component].beta[node] = value,
        Coordinate::Age { component, term } => *params.components[component].coef_mut(term) = value,
        Coordinate::Intercept => params.intercept = value,
    }
}

/// Mean log-likelihood evaluated from scratch.
pub fn mean_log_likelihood(params: &SblrParams, designs: &[DesignTriple], labels: &[f64]) -> f64 {
    let logits = params.logits(designs).unwrap();
    -sblr::model::mean_negative_log_likelihood(&logits, labels)
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Random relabeling of `v` nodes.
pub fn random_permutation<R: Rng>(rng: &mut R, v: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..v).collect();
    perm.shuffle(rng);
    perm
}
