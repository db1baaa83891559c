use serde::{Deserialize, Serialize};

use crate::data::DesignTriple;
use crate::error::{Error, Result};
use crate::method::{FitRequest, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub etas: Vec<f64>,
    pub n_deltas: usize,
    /// `delta_min / delta_max`.
    pub min_ratio: f64,
    /// Random initializations per probe fit of the search.
    pub probe_restarts: usize,
    pub max_search_steps: usize,
    pub bisection_steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            etas: (1..=10).map(|i| i as f64 / 10.0).collect(),
            n_deltas: 20,
            min_ratio: 0.01,
            probe_restarts: 3,
            max_search_steps: 60,
            bisection_steps: 10,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() || self.etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidConfig("etas must be nonempty and lie in (0, 1]".into()));
        }
        if self.n_deltas < 2 || !(self.min_ratio > 0.0 && self.min_ratio < 1.0) {
            return Err(Error::InvalidConfig("need at least 2 deltas and 0 < min_ratio < 1".into()));
        }
        if self.probe_restarts == 0 {
            return Err(Error::InvalidConfig("probe_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Decreasing `delta` values shared by every `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyGrid {
    pub etas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub delta_max: f64,
    pub delta_min: f64,
}

impl PenaltyGrid {
    pub fn new(delta_max: f64, etas: Vec<f64>, n_deltas: usize, min_ratio: f64) -> Self {
        let deltas = log_spaced(delta_max, min_ratio, n_deltas);
        let delta_min = *deltas.last().expect("n_deltas >= 1");
        PenaltyGrid { etas, deltas, delta_max, delta_min }
    }
}

/// `n` values from `top` down to `top * ratio`, equally spaced in log scale.
/// The endpoints are exact.
pub fn log_spaced(top: f64, ratio: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![top];
    }
    let step = ratio.ln() / (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => top,
            _ if i == n - 1 => top * ratio,
            _ => top * (step * i as f64).exp(),
        })
        .collect()
}

/// Roughly the smallest `delta` at which a fit with the given `eta` has no
/// nonzero effect: a doubling/halving search from 1 to bracket the change,
/// then bisection in log scale. Returns the upper (all-zero) end.
pub fn find_delta_max(
    method: &dyn Method,
    designs: &[DesignTriple],
    labels: &[f64],
    eta: f64,
    seed: u64,
    spec: &GridSpec,
) -> Result<f64> {
    let is_null = |delta: f64| -> Result<bool> {
        let request = FitRequest {
            restarts: Some(spec.probe_restarts),
            ..FitRequest::new(designs, labels, delta, eta, seed)
        };
        Ok(method.fit(&request)?.is_null())
    };
    let mut delta = 1.0;
    let first = is_null(delta)?;
    let (mut lo, mut hi) = (None, None);
    if first {
        hi = Some(delta);
    } else {
        lo = Some(delta);
    }
    let mut steps = 0;
    while lo.is_none() || hi.is_none() {
        if steps == spec.max_search_steps {
            return Err(Error::DeltaSearchFailed { steps });
        }
        steps += 1;
        delta = if first { delta / 2.0 } else { delta * 2.0 };
        if is_null(delta)? {
            hi = Some(delta);
        } else {
            lo = Some(delta);
        }
    }
    let (mut lo, mut hi) = (lo.unwrap(), hi.unwrap());
    for _ in 0..spec.bisection_steps {
        let mid = (lo * hi).sqrt();
        if is_null(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Grid whose top is the search result at the smallest `eta`.
pub fn make_penalty_grid(
    method: &dyn Method,
    designs: &[DesignTriple],
    labels: &[f64],
    seed: u64,
    spec: &GridSpec,
) -> Result<PenaltyGrid> {
    spec.validate()?;
    let smallest = spec.etas.iter().copied().fold(f64::INFINITY, f64::min);
    let delta_max = find_delta_max(method, designs, labels, smallest, seed, spec)?;
    Ok(PenaltyGrid::new(delta_max, spec.etas.clone(), spec.n_deltas, spec.min_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::method::{LrMethod, MethodSettings, SblrMethod};
    use crate::model::solver::tests::random_problem;

    #[test]
    fn log_spacing_has_constant_ratio() {
        let d = log_spaced(3.7, 0.01, 20);
        assert_eq!(d.len(), 20);
        assert_eq!(d[19] / d[0], 0.01);
        let r = d[1] / d[0];
        for w in d.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_max_zeroes_the_fit_and_brackets() {
        let (designs, labels) = random_problem(40, 6, 7);
        let spec = GridSpec { etas: vec![0.1, 0.5, 1.0], ..Default::default() };
        let settings = MethodSettings { k: 2, restarts: 3, ..Default::default() };
        let methods: Vec<Box<dyn Method>> = vec![
            Box::new(SblrMethod { settings }),
            Box::new(LrMethod { config: Default::default() }),
        ];
        for m in &methods {
            let grid = make_penalty_grid(m.as_ref(), &designs, &labels, 3, &spec).unwrap();
            let probe = |delta| FitRequest { restarts: Some(3), ..FitRequest::new(&designs, &labels, delta, 0.1, 3) };
            assert!(m.fit(&probe(grid.delta_max)).unwrap().is_null());
            assert!(!m.fit(&probe(grid.delta_max * 0.9)).unwrap().is_null(), "{}", m.name());
            assert_eq!(grid.delta_min, grid.delta_max * 0.01);
        }
    }
}
