//! Per-cycle timing and peak-memory measurement for scaling ladders.
//!
//! Benchmark data has independent standard-normal edges, first ages from
//! `U(60, 90)`, one to five visits and fair-coin labels.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{build_design, standardize, Dataset, DesignTriple, LongitudinalSubject, Visit};
use crate::error::{Error, Result};
use crate::model::{SblrParams, Solver};
use crate::rng::{stream, Purpose};

/// Global allocator wrapper that tracks live and peak heap bytes.
///
/// Install in a binary with `#[global_allocator]`; without it the counters
/// stay at zero.
pub struct PeakAlloc {
    current: AtomicUsize,
    peak: AtomicUsize,
}

impl PeakAlloc {
    pub const fn new() -> Self {
        PeakAlloc { current: AtomicUsize::new(0), peak: AtomicUsize::new(0) }
    }

    pub fn current(&self) -> usize {
        self.current.load(Ordering::Relaxed)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::Relaxed)
    }

    /// Restarts peak tracking from the current live size.
    pub fn reset_peak(&self) {
        self.peak.store(self.current(), Ordering::Relaxed);
    }

    fn add(&self, bytes: usize) {
        let now = self.current.fetch_add(bytes, Ordering::Relaxed) + bytes;
        self.peak.fetch_max(now, Ordering::Relaxed);
    }

    fn sub(&self, bytes: usize) {
        self.current.fetch_sub(bytes, Ordering::Relaxed);
    }
}

impl Default for PeakAlloc {
    fn default() -> Self {
        Self::new()
    }
}

unsafe impl GlobalAlloc for PeakAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            self.add(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            self.add(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        self.sub(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            self.sub(layout.size());
            self.add(new_size);
        }
        p
    }
}

/// Random benchmark dataset.
pub fn benchmark_dataset(n: usize, nodes: usize, seed: u64) -> Result<Dataset> {
    let subjects = (0..n)
        .map(|i| {
            let mut rng = stream(seed, Purpose::Bench, i as u64);
            let visits = rng.random_range(1..=5usize);
            let first_age = rng.random_range(60.0..90.0);
            let label = u8::from(rng.random::<bool>());
            let visits = (0..visits)
                .map(|s| {
                    let mut w = Array2::zeros((nodes, nodes));
                    for a in 1..nodes {
                        for b in 0..a {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            w[[a, b]] = z;
                            w[[b, a]] = z;
                        }
                    }
                    Visit { age: first_age + s as f64, network: w }
                })
                .collect();
            LongitudinalSubject { label, visits }
        })
        .collect();
    Dataset::with_nodes(nodes, subjects)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub nodes: usize,
    pub k: usize,
    pub seconds_per_cycle: f64,
    /// Peak heap bytes above the pre-fit baseline, when an allocator was supplied.
    pub peak_bytes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleBench {
    /// Full sweeps timed after the warm-up sweep.
    pub cycles: usize,
    pub delta: f64,
    pub eta: f64,
    pub seed: u64,
}

impl Default for CycleBench {
    fn default() -> Self {
        // a light penalty keeps the components dense during the timed sweeps
        CycleBench { cycles: 3, delta: 1e-4, eta: 0.5, seed: 0 }
    }
}

/// Mean wall time of one full coordinate sweep, excluding data generation.
pub fn time_cycles(designs: &[DesignTriple], labels: &[f64], k: usize, bench: &CycleBench) -> Result<f64> {
    let nodes = designs.first().ok_or(Error::EmptyDataset)?.nodes();
    let init = SblrParams::random(k, nodes, &mut stream(bench.seed, Purpose::Restart, 0));
    let mut solver = Solver::new(designs, labels, bench.delta, bench.eta, init, None, true)?;
    solver.cycle();
    let start = Instant::now();
    for _ in 0..bench.cycles {
        solver.cycle();
    }
    Ok(start.elapsed().as_secs_f64() / bench.cycles.max(1) as f64)
}

/// Generates a benchmark problem and measures it. Memory covers the
/// standardized designs plus the solver state.
pub fn measure_point(n: usize, nodes: usize, k: usize, bench: &CycleBench, alloc: Option<&PeakAlloc>) -> Result<ScalingPoint> {
    let dataset = benchmark_dataset(n, nodes, bench.seed)?;
    let labels = dataset.labels();
    let baseline = alloc.map(|a| {
        a.reset_peak();
        a.current()
    });
    let designs = build_design(&standardize(&dataset).0);
    let seconds_per_cycle = time_cycles(&designs, &labels, k, bench)?;
    let peak_bytes = alloc.zip(baseline).map(|(a, b)| a.peak().saturating_sub(b));
    Ok(ScalingPoint { n, nodes, k, seconds_per_cycle, peak_bytes })
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (crate::numeric::mean(&lx), crate::numeric::mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Which dimension a ladder varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    K,
    V,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub axis: Axis,
    pub points: Vec<ScalingPoint>,
    pub time_slope: f64,
    pub memory_slope: Option<f64>,
}

/// Measures every value of `axis` with the other two dimensions fixed.
pub fn run_ladder(
    axis: Axis,
    values: &[usize],
    base: (usize, usize, usize),
    bench: &CycleBench,
    alloc: Option<&PeakAlloc>,
) -> Result<Ladder> {
    let (n, v, k) = base;
    let points: Vec<ScalingPoint> = values
        .iter()
        .map(|&x| match axis {
            Axis::N => measure_point(x, v, k, bench, alloc),
            Axis::V => measure_point(n, x, k, bench, alloc),
            Axis::K => measure_point(n, v, x, bench, alloc),
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    let times: Vec<f64> = points.iter().map(|p| p.seconds_per_cycle).collect();
    let memory_slope = points
        .iter()
        .map(|p| p.peak_bytes.map(|b| b as f64))
        .collect::<Option<Vec<f64>>>()
        .filter(|m| m.iter().all(|&b| b > 0.0))
        .map(|m| log_log_slope(&xs, &m));
    Ok(Ladder { axis, points, time_slope: log_log_slope(&xs, &times), memory_slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((log_log_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn benchmark_data_is_valid() {
        let d = benchmark_dataset(20, 6, 1).unwrap();
        assert_eq!(d.len(), 20);
        assert!(d.subjects().iter().all(|s| (1..=5).contains(&s.visits.len())));
    }
}
