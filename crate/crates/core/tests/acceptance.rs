//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 5 to 8 run full cross-validated replicate studies and take hours
//! on a single core. Criterion 9 times sweeps against wall clock, which other
//! test binaries and machine load distort. These only run when
//! `SBLR_ACCEPTANCE` is `full` or a comma-separated list of criterion numbers
//! (e.g. `SBLR_ACCEPTANCE=1,5,7`); otherwise they are reported as SKIP. Build
//! with `--release` for full runs.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use common::*;
use sblr::bench::{run_ladder, Axis, CycleBench, PeakAlloc};
use sblr::data::{build_design, standardize};
use sblr::experiment::{run_replicate, run_study, StudyConfig, StudyReport};
use sblr::method::{MethodRegistry, MethodSettings, SblrMethod};
use sblr::model::{
    fit, fit_single_ordered, normalize_components, penalty, recover_age_effect, AgeEffect, AgeTerm, Coordinate,
    FitConfig, LogitCache, SblrParams, Solver,
};
use sblr::rng::{child_seed, Purpose};
use sblr::selection::{find_delta_max, make_penalty_grid, CvConfig, GridSpec, StandardizationMode};
use sblr::synthetic::{generate, GeneratorConfig};

#[global_allocator]
static ALLOC: PeakAlloc = PeakAlloc::new();

/// Signal strength used for the replicate criteria. The default effects put
/// the oracle deviance near 0.17; this scale brings the selected SBLR CV
/// deviance into the weak-signal regime (about 1.3).
const DESK_EFFECT_SCALE: f64 = 0.08;
const STUDY_SEED: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Option<Outcome> {
    Some(Outcome { pass, detail })
}

fn desk_generator(n: usize) -> GeneratorConfig {
    GeneratorConfig { n, nodes: 20, ..Default::default() }.with_effect_scale(DESK_EFFECT_SCALE)
}

// 1. closed-form coordinate updates against golden-section minimization
fn update_oracle() -> Option<Outcome> {
    let start = Instant::now();
    let (mut checks, mut flat, mut worst) = (0usize, 0usize, 0.0f64);
    for state in 0..500u64 {
        let mut r = rng(child_seed(1, Purpose::Bench, state));
        let (n, v, k) = (r.random_range(20..=100), r.random_range(6..=20), r.random_range(1..=5));
        let (designs, labels) = random_problem(&mut r, n, v);
        let params = random_params(&mut r, k, v);
        let (delta, eta) = (10f64.powf(r.random_range(-3.0..0.0)), r.random_range(0.05..1.0));
        let h = r.random_range(0..k);
        let coords = [
            Coordinate::Beta { component: h, node: r.random_range(0..v) },
            Coordinate::Age { component: h, term: AgeTerm::Alpha },
            Coordinate::Age { component: h, term: AgeTerm::Rho },
            Coordinate::Age { component: h, term: AgeTerm::Gamma },
            Coordinate::Intercept,
        ];
        let mut solver = Solver::new(&designs, &labels, delta, eta, params.clone(), None, false).unwrap();
        let base = penalty(&params, delta, eta);
        for coord in coords {
            let s = solver.surrogate(coord);
            let objective = |t: f64| {
                let mut p = params.clone();
                set_coordinate(&mut p, coord, t);
                s.b * (t - s.current) + 0.5 * s.a * (t - s.current).powi(2) + penalty(&p, delta, eta) - base
            };
            let closed = s.minimizer();
            let radius = 1.0 + (closed - s.current).abs() + s.current.abs();
            let golden = golden_section(objective, -radius, radius, 1e-12);
            if s.a == 0.0 && objective(closed) == objective(golden) {
                // empty component: the coordinate has no effect, every value is a minimizer
                flat += 1;
            } else {
                worst = worst.max((closed - golden).abs());
            }
            // with the safeguard off an update lands exactly on the minimizer
            let mut fresh = Solver::new(&designs, &labels, delta, eta, params.clone(), None, false).unwrap();
            if fresh.update(coord) != closed {
                return outcome(false, format!("state {state}: update differs from the surrogate minimizer"));
            }
            checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-6 && secs < 120.0,
        format!("{checks} updates over 500 states ({flat} on flat objectives), max |closed - golden| = {worst:.2e}, {secs:.1} s"),
    )
}

fn log_likelihood_slope(designs: &[sblr::data::DesignTriple], labels: &[f64], params: &SblrParams, coord: Coordinate) -> (f64, f64) {
    let mut solver = Solver::new(designs, labels, 0.1, 0.5, params.clone(), None, true).unwrap();
    let parts = solver.partials(coord);
    let n = parts.len() as f64;
    (parts.iter().map(|p| p.first).sum::<f64>() / n, parts.iter().map(|p| p.second).sum::<f64>() / n)
}

// 2. analytic first and second derivatives against central differences
fn gradient_suite() -> Option<Outcome> {
    let h = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let (mut worst_first, mut worst_second, mut checks) = (0.0f64, 0.0f64, 0usize);
    for state in 0..200u64 {
        let mut r = rng(child_seed(2, Purpose::Bench, state));
        let (n, v, k) = (r.random_range(20..=100), r.random_range(6..=20), r.random_range(1..=5));
        let (designs, labels) = random_problem(&mut r, n, v);
        let params = random_params(&mut r, k, v);
        let c = r.random_range(0..k);
        let coords = [
            Coordinate::Beta { component: c, node: r.random_range(0..v) },
            Coordinate::Age { component: c, term: AgeTerm::Alpha },
            Coordinate::Age { component: c, term: AgeTerm::Rho },
            Coordinate::Age { component: c, term: AgeTerm::Gamma },
            Coordinate::Intercept,
        ];
        for coord in coords {
            let value = match coord {
                Coordinate::Beta { component, node } => params.components[component].beta[node],
                Coordinate::Age { component, term } => params.components[component].coef(term),
                Coordinate::Intercept => params.intercept,
            };
            let shifted = |t: f64| {
                let mut p = params.clone();
                set_coordinate(&mut p, coord, value + t);
                p
            };
            let (first, second) = log_likelihood_slope(&designs, &labels, &params, coord);
            let numeric_first = (mean_log_likelihood(&shifted(h), &designs, &labels)
                - mean_log_likelihood(&shifted(-h), &designs, &labels))
                / (2.0 * h);
            let numeric_second = (log_likelihood_slope(&designs, &labels, &shifted(h), coord).0
                - log_likelihood_slope(&designs, &labels, &shifted(-h), coord).0)
                / (2.0 * h);
            worst_first = worst_first.max(rel(first, numeric_first));
            worst_second = worst_second.max(rel(second, numeric_second));
            checks += 1;
        }
    }
    outcome(
        worst_first < 1e-5 && worst_second < 1e-5,
        format!("{checks} coordinates over 200 states, max relative error first {worst_first:.2e}, second {worst_second:.2e}"),
    )
}

// 3. monotone descent and convergence on generated instances
fn descent_and_convergence() -> Option<Outcome> {
    let registry_method = SblrMethod { settings: MethodSettings { restarts: 3, ..Default::default() } };
    let (mut slowest, mut max_cycles, mut failures) = (0.0f64, 0usize, Vec::new());
    for i in 0..30u64 {
        let data = generate(&GeneratorConfig { seed: child_seed(3, Purpose::Replicate, i), ..desk_generator(100) }).unwrap();
        let designs = build_design(&standardize(&data.dataset).0);
        let labels = data.dataset.labels();
        let eta = [0.1, 0.5, 1.0][i as usize % 3];
        let delta_max = find_delta_max(&registry_method, &designs, &labels, eta, i, &GridSpec::default()).unwrap();
        // the geometric middle of the selection grid
        let config = FitConfig { k: 5, delta: 0.1 * delta_max, eta, seed: i, ..Default::default() };
        let start = Instant::now();
        let result = fit(&designs, &labels, &config).unwrap();
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        max_cycles = max_cycles.max(result.cycles_used);
        let monotone = result.loss_trace.windows(2).all(|w| w[1] <= w[0]) && result.loss_trace[0] <= result.initial_loss;
        let single = fit_single_ordered(
            &designs,
            &labels,
            &config,
            SblrParams::random(5, 20, &mut rng(i)),
            (0..20).collect(),
        )
        .unwrap();
        let single_monotone = single.loss_trace.windows(2).all(|w| w[1] <= w[0]);
        if !(monotone && single_monotone && result.converged && secs < 30.0) {
            failures.push(format!("instance {i} (monotone {monotone}/{single_monotone}, converged {}, {secs:.1} s)", result.converged));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "30 instances, max {max_cycles} cycles, slowest 20-restart fit {slowest:.2} s{}",
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

// 4. everything is shrunk to zero past the top of the grid
fn full_shrinkage() -> Option<Outcome> {
    let method = SblrMethod { settings: MethodSettings::default() };
    let spec = GridSpec::default();
    let mut nonempty = Vec::new();
    for i in 0..3u64 {
        let data = generate(&GeneratorConfig { seed: child_seed(4, Purpose::Replicate, i), ..desk_generator(100) }).unwrap();
        let designs = build_design(&standardize(&data.dataset).0);
        let labels = data.dataset.labels();
        let grid = make_penalty_grid(&method, &designs, &labels, i, &spec).unwrap();
        for &eta in &grid.etas {
            let config = FitConfig { delta: 2.0 * grid.delta_max, eta, seed: i, ..Default::default() };
            let result = fit(&designs, &labels, &config).unwrap();
            if !result.params.all_empty() {
                nonempty.push(format!("dataset {i} eta {eta}"));
            }
        }
    }
    outcome(
        nonempty.is_empty(),
        if nonempty.is_empty() {
            "3 datasets x 10 etas, 20 restarts each: all components empty".into()
        } else {
            format!("non-empty fits: {}", nonempty.join(", "))
        },
    )
}

fn study(k: usize, methods: &[&str]) -> (StudyReport, f64) {
    let config = StudyConfig {
        replicates: 10,
        seed: STUDY_SEED,
        generator: desk_generator(100),
        methods: methods.iter().map(|m| m.to_string()).collect(),
        settings: MethodSettings { k, restarts: 20, ..Default::default() },
        grid: GridSpec::default(),
        cv: CvConfig { folds: 5, mode: StandardizationMode::Global, ..Default::default() },
    };
    let start = Instant::now();
    let report = run_study(&config, &MethodRegistry::builtin(), |o| {
        eprintln!(
            "    K={k} replicate {} {}: deviance {:.4}, TPR {:.3}, FPR {:.4}, {:.0} s elapsed",
            o.replicate,
            o.method,
            o.cv_deviance,
            o.tpr,
            o.fpr,
            start.elapsed().as_secs_f64()
        );
    })
    .unwrap();
    (report, start.elapsed().as_secs_f64())
}

// 5. desk-scale replicate study in global standardization mode
fn table_replication(report: &StudyReport, secs: f64) -> Option<Outcome> {
    let sblr = report.summary("sblr").unwrap();
    let lr = report.summary("lr").unwrap();
    let pass = (1.15..=1.45).contains(&sblr.cv_deviance.mean)
        && sblr.fpr.mean <= 0.06
        && (1.15..=1.50).contains(&lr.cv_deviance.mean)
        && secs <= 4.0 * 3600.0;
    outcome(
        pass,
        format!(
            "SBLR deviance {} TPR {} FPR {}; LR deviance {} TPR {} FPR {}; {:.0} s",
            sblr.cv_deviance, sblr.tpr, sblr.fpr, lr.cv_deviance, lr.tpr, lr.fpr, secs
        ),
    )
}

// 6. recovery with ten times the subjects
fn large_n_recovery() -> Option<Outcome> {
    let seed = child_seed(STUDY_SEED, Purpose::Replicate, 1000);
    let data = generate(&GeneratorConfig { seed, ..desk_generator(1000) }).unwrap();
    let method = SblrMethod { settings: MethodSettings { k: 5, restarts: 20, ..Default::default() } };
    let start = Instant::now();
    let cv = CvConfig { folds: 5, seed, mode: StandardizationMode::Global, ..Default::default() };
    let (selected, recovery) =
        run_replicate(&method, &data.dataset, &data.truth.signal_edges, &GridSpec::default(), &cv).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (delta, eta) = selected.table.selected_penalty();
    outcome(
        recovery.tpr >= 0.30 && recovery.fpr <= 0.05 && secs <= 7200.0,
        format!(
            "TPR {:.4} FPR {:.4} at delta {delta:.4e} eta {eta}, deviance {:.4}, {secs:.0} s",
            recovery.tpr,
            recovery.fpr,
            selected.table.selected().mean_deviance
        ),
    )
}

// 7. the structured fit is at least as sparse as the unstructured one
fn sparsity_ordering(report: &StudyReport) -> Option<Outcome> {
    let (s, l) = (report.summary("sblr").unwrap().fpr.mean, report.summary("lr").unwrap().fpr.mean);
    outcome(s <= l, format!("mean FPR SBLR {s:.4} vs LR {l:.4}"))
}

// 8. a larger component budget barely moves the results
fn k_robustness(k5: &StudyReport, k10: &StudyReport) -> Option<Outcome> {
    let (a, b) = (k5.summary("sblr").unwrap(), k10.summary("sblr").unwrap());
    let dd = (a.cv_deviance.mean - b.cv_deviance.mean).abs();
    let df = (a.fpr.mean - b.fpr.mean).abs();
    outcome(
        dd < 0.05 && df < 0.02,
        format!("K=10 deviance {} FPR {}; |change| deviance {dd:.4}, FPR {df:.4}", b.cv_deviance, b.fpr),
    )
}

// 9. per-cycle time and memory scaling
fn scaling() -> Option<Outcome> {
    let bench = CycleBench { cycles: 3, ..Default::default() };
    let n = run_ladder(Axis::N, &[125, 250, 500, 1000], (0, 50, 5), &bench, Some(&ALLOC)).unwrap();
    let k = run_ladder(Axis::K, &[2, 4, 8, 16], (250, 50, 0), &bench, Some(&ALLOC)).unwrap();
    let v = run_ladder(Axis::V, &[25, 50, 100, 200], (250, 0, 5), &bench, Some(&ALLOC)).unwrap();
    let mem = v.memory_slope.unwrap_or(f64::NAN);
    // time ratios between consecutive rungs show where the slope comes from
    let steps = |l: &sblr::bench::Ladder| {
        let t: Vec<String> =
            l.points.windows(2).map(|w| format!("{:.2}", w[1].seconds_per_cycle / w[0].seconds_per_cycle)).collect();
        t.join("/")
    };
    outcome(
        n.time_slope <= 1.2 && k.time_slope <= 1.2 && v.time_slope <= 2.3 && mem <= 2.3,
        format!(
            "time slopes n {:.3}, K {:.3}, V {:.3}; memory slope V {mem:.3}; step ratios n {}, K {}, V {}",
            n.time_slope,
            k.time_slope,
            v.time_slope,
            steps(&n),
            steps(&k),
            steps(&v)
        ),
    )
}

// 10. identities that must hold to rounding, or exactly
fn exact_identities() -> Option<Outcome> {
    let mut r = rng(10);
    let mut age_err = 0.0f64;
    let mut norm_err = 0.0f64;
    for case in 0..1000 {
        if case % 50 == 0 {
            // fresh age statistics every 50 cases
            r = rng(child_seed(10, Purpose::Bench, case));
        }
        let data = random_dataset(&mut r, 5, 3);
        let stats = standardize(&data).1;
        let effect = AgeEffect { gamma: r.random_range(-2.0..2.0), rho: r.random_range(-2.0..2.0), alpha: r.random_range(-2.0..2.0) };
        let raw = recover_age_effect(effect, &stats).unwrap();
        let g = r.random_range(50.0..95.0);
        age_err = age_err.max((raw.eval(g) - effect.eval_standardized(stats.age(g), stats.age_sq(g))).abs());

        let v = r.random_range(2..10);
        let params = random_params(&mut r, 3, v);
        for (nc, c) in normalize_components(&params).iter().zip(&params.components) {
            let before = AgeEffect::of(c).eval_standardized(0.7, -0.3);
            let after = nc.age_effect.eval_standardized(0.7, -0.3);
            for a in 0..v {
                for b in 0..a {
                    norm_err = norm_err.max((nc.entry(a, b) * after - c.beta[a] * c.beta[b] * before).abs());
                }
            }
        }
    }

    let (designs, labels) = random_problem(&mut r, 60, 12);
    let mut solver = Solver::new(&designs, &labels, 0.01, 0.5, random_params(&mut r, 4, 12), None, true).unwrap();
    for _ in 0..10_000 {
        solver.update(random_coordinate(&mut r, 4, 12));
    }
    let cache_err = solver.cache().max_logit_deviation(&LogitCache::from_scratch(solver.params(), &designs, solver.order()));

    let mut mismatched = BTreeSet::new();
    for seed in 0..10u64 {
        let mut r = rng(child_seed(10, Purpose::Restart, seed));
        let (designs, labels) = random_problem(&mut r, 50, 10);
        let config = FitConfig { k: 3, delta: 0.02, eta: 0.5, max_cycles: 300, ..Default::default() };
        let init = SblrParams::random(3, 10, &mut r);
        let perm = random_permutation(&mut r, 10);
        let base = fit_single_ordered(&designs, &labels, &config, init.clone(), (0..10).collect()).unwrap();
        let relabeled: Vec<_> = designs.iter().map(|d| d.permuted(&perm)).collect();
        let moved = fit_single_ordered(&relabeled, &labels, &config, init.permuted(&perm), perm.clone()).unwrap();
        if moved.params != base.params.permuted(&perm) || moved.loss_trace != base.loss_trace {
            mismatched.insert(seed);
        }
    }
    outcome(
        age_err < 1e-10 && norm_err < 1e-10 && cache_err < 1e-9 && mismatched.is_empty(),
        format!(
            "age effect {age_err:.2e}, normalization {norm_err:.2e}, cache {cache_err:.2e}, relabeling mismatches {mismatched:?}"
        ),
    )
}

fn selected_criteria() -> BTreeSet<usize> {
    let quick: BTreeSet<usize> = [1, 2, 3, 4, 10].into();
    match std::env::var("SBLR_ACCEPTANCE").as_deref() {
        Ok("full") | Ok("all") => (1..=10).collect(),
        Ok(list) if !list.trim().is_empty() => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        _ => quick,
    }
}

fn main() -> ExitCode {
    // test discovery (`cargo test -- --list`) must not run the suite
    if std::env::args().skip(1).any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let selected = selected_criteria();
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |number: usize, name: &str, result: Option<Outcome>| {
        match result {
            Some(o) => {
                println!("criterion {number:>2} {name:<28} {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                failed += usize::from(!o.pass);
            }
            None => println!("criterion {number:>2} {name:<28} SKIP (set SBLR_ACCEPTANCE=full or ={number})"),
        }
    };
    let run = |n: usize| selected.contains(&n);

    report(1, "update oracle", run(1).then(update_oracle).flatten());
    report(2, "gradient suite", run(2).then(gradient_suite).flatten());
    report(3, "descent and convergence", run(3).then(descent_and_convergence).flatten());
    report(4, "full shrinkage", run(4).then(full_shrinkage).flatten());

    let k5 = (run(5) || run(7) || run(8)).then(|| study(5, &["sblr", "lr"]));
    report(5, "replicate study", run(5).then(|| k5.as_ref().and_then(|(r, s)| table_replication(r, *s))).flatten());
    report(6, "large-n recovery", run(6).then(large_n_recovery).flatten());
    report(7, "sparsity ordering", run(7).then(|| k5.as_ref().and_then(|(r, _)| sparsity_ordering(r))).flatten());
    let k10 = run(8).then(|| study(10, &["sblr"]));
    report(
        8,
        "component budget robustness",
        k5.as_ref().zip(k10.as_ref()).and_then(|((a, _), (b, _))| k_robustness(a, b)),
    );
    report(9, "scaling", run(9).then(scaling).flatten());
    report(10, "exact identities", run(10).then(exact_identities).flatten());

    println!("acceptance: {failed} failed, {:.0} s", start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
