//! Longitudinal network data: subjects, validation, standardization and the
//! averaged design matrices fed to the estimators.

mod design;
pub mod io;
mod standardize;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use design::{build_design, DesignTriple};
pub use standardize::{
    standardize, standardize_with, StandardizationStats, StandardizedDataset, StandardizedSubject,
    StandardizedVisit,
};

/// One observed network and the subject's age at the time of the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub age: f64,
    pub network: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalSubject {
    pub label: u8,
    pub visits: Vec<Visit>,
}

impl LongitudinalSubject {
    pub fn num_visits(&self) -> usize {
        self.visits.len()
    }
}

/// A validated collection of subjects sharing one node count.
///
/// Construction checks every invariant: square `V x V` networks, exact
/// symmetry, zero diagonal, finite values, labels in `{0, 1}`, at least one
/// visit per subject and non-decreasing ages.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    nodes: usize,
    subjects: Vec<LongitudinalSubject>,
}

impl Dataset {
    /// Validates `subjects`; the node count is taken from the first network.
    pub fn new(subjects: Vec<LongitudinalSubject>) -> Result<Self> {
        let first = subjects.first().ok_or(Error::EmptyDataset)?;
        let nodes = first
            .visits
            .first()
            .ok_or(Error::NoVisits { subject: 0 })?
            .network
            .nrows();
        Self::with_nodes(nodes, subjects)
    }

    pub fn with_nodes(nodes: usize, subjects: Vec<LongitudinalSubject>) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, subject) in subjects.iter().enumerate() {
            validate_subject(i, subject, nodes)?;
        }
        Ok(Dataset { nodes, subjects })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn subjects(&self) -> &[LongitudinalSubject] {
        &self.subjects
    }

    pub fn labels(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| f64::from(s.label)).collect()
    }

    /// Subjects at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            nodes: self.nodes,
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
        }
    }

    pub fn into_subjects(self) -> Vec<LongitudinalSubject> {
        self.subjects
    }
}

fn validate_subject(index: usize, subject: &LongitudinalSubject, nodes: usize) -> Result<()> {
    if subject.label > 1 {
        return Err(Error::InvalidLabel {
            subject: index,
            value: subject.label.to_string(),
        });
    }
    if subject.visits.is_empty() {
        return Err(Error::NoVisits { subject: index });
    }
    for (s, visit) in subject.visits.iter().enumerate() {
        if !visit.age.is_finite() {
            return Err(Error::NonFinite {
                subject: index,
                visit: s,
            });
        }
        if s > 0 && visit.age < subject.visits[s - 1].age {
            return Err(Error::DecreasingAge {
                subject: index,
                visit: s,
            });
        }
        validate_network(index, s, &visit.network, nodes)?;
    }
    Ok(())
}

fn validate_network(subject: usize, visit: usize, w: &Array2<f64>, nodes: usize) -> Result<()> {
    let (rows, cols) = w.dim();
    if rows != nodes || cols != nodes {
        return Err(Error::NodeCount {
            subject,
            visit,
            expected: nodes,
            rows,
            cols,
        });
    }
    for u in 0..nodes {
        let d = w[[u, u]];
        if !d.is_finite() {
            return Err(Error::NonFinite { subject, visit });
        }
        if d != 0.0 {
            return Err(Error::NonzeroDiagonal {
                subject,
                visit,
                node: u,
                value: d,
            });
        }
        for v in 0..u {
            let (lower, upper) = (w[[u, v]], w[[v, u]]);
            if !lower.is_finite() || !upper.is_finite() {
                return Err(Error::NonFinite { subject, visit });
            }
            if lower != upper {
                return Err(Error::Asymmetric {
                    subject,
                    visit,
                    row: v,
                    col: u,
                    upper,
                    lower,
                });
            }
        }
    }
    Ok(())
}

/// Replaces `w` by `(w + w^T) / 2`.
pub fn symmetrize(w: &mut Array2<f64>) {
    let n = w.nrows().min(w.ncols());
    for u in 0..n {
        for v in 0..u {
            let m = 0.5 * (w[[u, v]] + w[[v, u]]);
            w[[u, v]] = m;
            w[[v, u]] = m;
        }
    }
}
