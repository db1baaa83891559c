use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::Edge;

/// True and false positive rates of an estimated edge set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub tpr: f64,
    pub fpr: f64,
}

/// TPR over the signal edges and FPR over the remaining `V(V-1)/2` pairs.
/// An empty signal set has TPR 0; a signal set covering all pairs has FPR 0.
pub fn evaluate_recovery(estimated: &BTreeSet<Edge>, signal: &BTreeSet<Edge>, nodes: usize) -> Recovery {
    let total = nodes * nodes.saturating_sub(1) / 2;
    let hits = estimated.intersection(signal).count();
    let false_hits = estimated.len() - hits;
    let negatives = total - signal.len();
    Recovery {
        tpr: if signal.is_empty() { 0.0 } else { hits as f64 / signal.len() as f64 },
        fpr: if negatives == 0 { 0.0 } else { false_hits as f64 / negatives as f64 },
    }
}
