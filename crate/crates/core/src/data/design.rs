use ndarray::{Array3, ArrayView2};

use super::StandardizedDataset;

/// The three averaged predictors of one subject, stored as a `3 x V x V` block:
///
/// * `x0 = mean_s W~_s`
/// * `x1 = mean_s g~_s W~_s`
/// * `x2 = mean_s g2~_s W~_s`
///
/// where `g~` and `g2~` are the standardized age and squared age.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTriple {
    data: Array3<f64>,
}

impl DesignTriple {
    pub fn from_parts(x0: ArrayView2<f64>, x1: ArrayView2<f64>, x2: ArrayView2<f64>) -> Self {
        let v = x0.nrows();
        let mut data = Array3::zeros((3, v, v));
        data.index_axis_mut(ndarray::Axis(0), 0).assign(&x0);
        data.index_axis_mut(ndarray::Axis(0), 1).assign(&x1);
        data.index_axis_mut(ndarray::Axis(0), 2).assign(&x2);
        DesignTriple { data }
    }

    pub fn nodes(&self) -> usize {
        self.data.dim().1
    }

    /// Matrix `m` in `0..3`.
    pub fn matrix(&self, m: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(ndarray::Axis(0), m)
    }

    pub fn x0(&self) -> ArrayView2<'_, f64> {
        self.matrix(0)
    }

    pub fn x1(&self) -> ArrayView2<'_, f64> {
        self.matrix(1)
    }

    pub fn x2(&self) -> ArrayView2<'_, f64> {
        self.matrix(2)
    }

    /// Row `u` of matrix `m` as a contiguous slice.
    #[inline]
    pub fn row(&self, m: usize, u: usize) -> &[f64] {
        let v = self.nodes();
        let start = (m * v + u) * v;
        &self.as_slice()[start..start + v]
    }

    /// Contiguous storage, matrix-major then row-major.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice().expect("design blocks are contiguous")
    }

    /// Applies a node relabeling: node `a` becomes node `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> DesignTriple {
        let v = self.nodes();
        let mut data = Array3::zeros((3, v, v));
        for m in 0..3 {
            for a in 0..v {
                for b in 0..v {
                    data[[m, perm[a], perm[b]]] = self.data[[m, a, b]];
                }
            }
        }
        DesignTriple { data }
    }
}

/// Builds the averaged predictors for every subject of a standardized dataset.
pub fn build_design(dataset: &StandardizedDataset) -> Vec<DesignTriple> {
    let v = dataset.nodes;
    dataset
        .subjects
        .iter()
        .map(|subject| {
            let inv_t = 1.0 / subject.visits.len() as f64;
            let mut data = Array3::<f64>::zeros((3, v, v));
            for visit in &subject.visits {
                let weights = [inv_t, visit.age * inv_t, visit.age_sq * inv_t];
                for (m, w) in weights.iter().enumerate() {
                    data.index_axis_mut(ndarray::Axis(0), m)
                        .scaled_add(*w, &visit.network);
                }
            }
            DesignTriple { data }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{StandardizedSubject, StandardizedVisit};
    use ndarray::{array, Array2};

    fn dataset(visits: Vec<StandardizedVisit>) -> StandardizedDataset {
        StandardizedDataset {
            nodes: visits[0].network.nrows(),
            subjects: vec![StandardizedSubject { label: 1, visits }],
        }
    }

    #[test]
    fn single_visit_at_mean_age() {
        let w = array![[0.0, 1.5, -2.0], [1.5, 0.0, 0.5], [-2.0, 0.5, 0.0]];
        let d = build_design(&dataset(vec![StandardizedVisit { age: 0.0, age_sq: 0.0, network: w.clone() }]));
        assert_eq!(d[0].x0(), w);
        assert_eq!(d[0].x1(), Array2::<f64>::zeros((3, 3)));
        assert_eq!(d[0].x2(), Array2::<f64>::zeros((3, 3)));
    }

    #[test]
    fn opposite_ages_cancel() {
        let w = array![[0.0, 1.0], [1.0, 0.0]];
        let d = build_design(&dataset(vec![
            StandardizedVisit { age: -1.0, age_sq: 0.3, network: w.clone() },
            StandardizedVisit { age: 1.0, age_sq: 0.3, network: w.clone() },
        ]));
        assert_eq!(d[0].x0(), w);
        assert_eq!(d[0].x1(), Array2::<f64>::zeros((2, 2)));
        assert_eq!(d[0].row(2, 0), &[0.0, 0.3]);
    }
}
