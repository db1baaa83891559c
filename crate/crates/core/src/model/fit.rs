use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::FitConfig;
use super::params::SblrParams;
use super::solver::{NodeMajorDesigns, Solver};
use crate::data::DesignTriple;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: SblrParams,
    pub final_loss: f64,
    pub initial_loss: f64,
    /// Loss after each full cycle.
    pub loss_trace: Vec<f64>,
    pub cycles_used: usize,
    pub converged: bool,
    /// Index of the winning initialization.
    pub restart_index: usize,
    /// Final loss of every initialization, by restart index.
    pub restart_losses: Vec<f64>,
}

/// Checks shapes, labels and finiteness shared by every estimator.
pub fn validate_inputs(designs: &[DesignTriple], labels: &[f64]) -> Result<usize> {
    if designs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: designs.len(),
            found: labels.len(),
        });
    }
    let nodes = designs.first().ok_or(Error::EmptyDataset)?.nodes();
    if nodes < 2 {
        return Err(Error::InvalidConfig("at least two nodes are required".into()));
    }
    for (i, d) in designs.iter().enumerate() {
        if d.nodes() != nodes {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                found: d.nodes(),
            });
        }
        if d.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { subject: i, visit: 0 });
        }
    }
    if let Some((i, y)) = labels.iter().enumerate().find(|(_, &y)| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidLabel {
            subject: i,
            value: y.to_string(),
        });
    }
    let positives = labels.iter().filter(|&&y| y == 1.0).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(nodes)
}

/// Fits from `config.restarts` random initializations.
pub fn fit(designs: &[DesignTriple], labels: &[f64], config: &FitConfig) -> Result<FitResult> {
    fit_with_start(designs, labels, config, None)
}

/// Like [`fit`], but restart 0 starts from `warm` when it has a nonempty
/// component (an all-zero start cannot leave zero).
///
/// Restart `r` draws its initialization from stream `r` of the configured
/// seed, so the outcome does not depend on how restarts are scheduled; the
/// winner is the smallest final loss, ties going to the smaller index.
pub fn fit_with_start(
    designs: &[DesignTriple],
    labels: &[f64],
    config: &FitConfig,
    warm: Option<&SblrParams>,
) -> Result<FitResult> {
    config.validate()?;
    let nodes = validate_inputs(designs, labels)?;
    let warm = warm.filter(|w| w.k() == config.k && w.nodes() == nodes && !w.all_empty());

    let identity: Vec<usize> = (0..nodes).collect();
    let packed = NodeMajorDesigns::new(designs, &identity);
    let runs: Vec<RunOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let init = match (r, warm) {
                (0, Some(w)) => w.clone(),
                _ => SblrParams::random(config.k, nodes, &mut stream(config.seed, Purpose::Restart, r as u64)),
            };
            run_single(designs, Some(&packed), labels, config, init, None)
        })
        .collect::<Result<_>>()?;

    let restart_losses: Vec<f64> = runs.iter().map(|r| r.final_loss).collect();
    let (best, _) = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.final_loss.total_cmp(&b.final_loss).then(i.cmp(j)))
        .expect("at least one restart");
    let run = runs.into_iter().nth(best).expect("index in range");
    Ok(FitResult {
        params: run.params,
        final_loss: run.final_loss,
        initial_loss: run.initial_loss,
        loss_trace: run.trace,
        cycles_used: run.cycles,
        converged: run.converged,
        restart_index: best,
        restart_losses,
    })
}

pub(crate) struct RunOutcome {
    pub params: SblrParams,
    pub final_loss: f64,
    pub initial_loss: f64,
    pub trace: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
}

/// One initialization run until the relative loss change drops below the
/// tolerance or the cycle cap is reached.
pub(crate) fn run_single(
    designs: &[DesignTriple],
    packed: Option<&NodeMajorDesigns>,
    labels: &[f64],
    config: &FitConfig,
    init: SblrParams,
    order: Option<Vec<usize>>,
) -> Result<RunOutcome> {
    let mut solver = match packed {
        Some(p) => Solver::with_packed(designs, p, labels, config.delta, config.eta, init, order, config.safeguard)?,
        None => Solver::new(designs, labels, config.delta, config.eta, init, order, config.safeguard)?,
    };
    let initial_loss = solver.loss();
    let mut trace = Vec::new();
    let mut prev = initial_loss;
    let mut converged = false;
    for _ in 0..config.max_cycles {
        let cur = solver.cycle();
        trace.push(cur);
        if prev == 0.0 || ((prev - cur) / prev).abs() < config.tolerance {
            converged = true;
            break;
        }
        prev = cur;
    }
    let final_loss = solver.loss();
    Ok(RunOutcome {
        params: solver.into_params(),
        final_loss,
        initial_loss,
        cycles: trace.len(),
        trace,
        converged,
    })
}

/// Runs one initialization with an explicit node sweep order.
pub fn fit_single_ordered(
    designs: &[DesignTriple],
    labels: &[f64],
    config: &FitConfig,
    init: SblrParams,
    order: Vec<usize>,
) -> Result<FitResult> {
    config.validate()?;
    validate_inputs(designs, labels)?;
    let run = run_single(designs, None, labels, config, init, Some(order))?;
    Ok(FitResult {
        params: run.params,
        final_loss: run.final_loss,
        initial_loss: run.initial_loss,
        loss_trace: run.trace,
        cycles_used: run.cycles,
        converged: run.converged,
        restart_index: 0,
        restart_losses: vec![run.final_loss],
    })
}
