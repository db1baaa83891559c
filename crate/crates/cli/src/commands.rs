use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use sblr::bench::{run_ladder, Axis, CycleBench};
use sblr::data::io::{load_dataset, save_dataset, Format, LoadOptions};
use sblr::data::{build_design, standardize, Dataset};
use sblr::experiment::{run_study, select_and_fit, StudyConfig};
use sblr::method::{FitRequest, MethodRegistry, MethodSettings};
use sblr::model::Edge;
use sblr::selection::{CvConfig, GridSpec, StandardizationMode};
use sblr::synthetic::{evaluate_recovery, generate, GeneratorConfig, Recovery, TruthRecord};

use crate::manifest::{load_config, write_json, ManifestBuilder};
use crate::{BenchArgs, Common, CvArgs, DataFormat, EvaluateArgs, FitArgs, GeneratorFlags, SimulateArgs, SolverFlags};

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

const DEFAULT_OUTPUT_DIR: &str = "sblr-output";

/// Invalid flags or config files.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(err) = cause.downcast_ref::<sblr::Error>() {
            return match err {
                sblr::Error::InvalidConfig(_) | sblr::Error::TooFewNodes { .. } | sblr::Error::UnknownMethod { .. } => {
                    EXIT_CONFIG
                }
                e if e.is_data_error() => EXIT_DATA,
                _ => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn prepare_output_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn load_input(path: &Path, symmetrize: bool) -> anyhow::Result<Dataset> {
    Ok(load_dataset(path, Format::from_path(path), LoadOptions { symmetrize })?)
}

fn parse_mode(s: &str) -> anyhow::Result<StandardizationMode> {
    s.parse().map_err(|e: sblr::Error| config_error(e.to_string()))
}

fn apply_solver_flags(flags: &SolverFlags, method: &mut String, settings: &mut MethodSettings) {
    if let Some(m) = &flags.method {
        *method = m.clone();
    }
    if let Some(k) = flags.k {
        settings.k = k;
    }
    if let Some(r) = flags.restarts {
        settings.restarts = r;
    }
    if let Some(t) = flags.tolerance {
        settings.tolerance = t;
    }
    if let Some(c) = flags.max_cycles {
        settings.max_cycles = c;
    }
    if flags.no_safeguard {
        settings.safeguard = false;
    }
}

fn apply_generator_flags(flags: &GeneratorFlags, generator: &mut GeneratorConfig) {
    if let Some(n) = flags.n {
        generator.n = n;
    }
    if let Some(v) = flags.nodes {
        generator.nodes = v;
    }
    if let Some(f) = flags.noise_frac {
        generator.noise_frac = f;
    }
    if let Some(t) = flags.max_visits {
        generator.max_visits = t;
    }
    if let Some(f) = flags.effect_scale {
        *generator = std::mem::take(generator).with_effect_scale(f);
    }
}

fn output_dir(common: &Common, from_config: &Option<PathBuf>) -> PathBuf {
    common
        .output_dir
        .clone()
        .or_else(|| from_config.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn default_method() -> String {
    "sblr".into()
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub generator: GeneratorConfig,
    pub format: DataFormat,
    pub output_dir: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs) -> anyhow::Result<u8> {
    let manifest = ManifestBuilder::start("simulate");
    let mut config: SimulateConfig = load_config(args.common.config.as_deref(), "simulate")?;
    apply_generator_flags(&args.generator, &mut config.generator);
    if let Some(seed) = args.common.seed {
        config.generator.seed = seed;
    }
    if let Some(f) = args.format {
        config.format = f;
    }
    let dir = output_dir(&args.common, &config.output_dir);
    config.output_dir = Some(dir.clone());
    config.generator.validate()?;
    prepare_output_dir(&dir)?;

    let data = generate(&config.generator)?;
    let dataset_path = match config.format {
        DataFormat::Json => dir.join("dataset.json"),
        DataFormat::Csv => dir.join("dataset.csv"),
    };
    save_dataset(&data.dataset, &dataset_path, Format::from_path(&dataset_path))?;
    let truth_path = dir.join("truth.json");
    write_json(&truth_path, &data.truth_record(&config.generator))?;
    let labels = data.dataset.labels();
    eprintln!(
        "wrote {} subjects ({} positive) with {} nodes to {}",
        labels.len(),
        labels.iter().filter(|&&y| y == 1.0).count(),
        config.generator.nodes,
        dataset_path.display()
    );
    manifest.finish(&config, config.generator.seed, vec![], vec![dataset_path, truth_path], &dir)?;
    Ok(EXIT_OK)
}

// --------------------------------------------------------------------- fit

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitCommandConfig {
    pub input: Option<PathBuf>,
    pub method: String,
    pub settings: MethodSettings,
    pub delta: f64,
    pub eta: f64,
    pub seed: u64,
    pub symmetrize: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for FitCommandConfig {
    fn default() -> Self {
        let base = sblr::model::FitConfig::default();
        FitCommandConfig {
            input: None,
            method: default_method(),
            settings: MethodSettings::default(),
            delta: base.delta,
            eta: base.eta,
            seed: base.seed,
            symmetrize: false,
            output_dir: None,
        }
    }
}

pub fn fit(args: FitArgs) -> anyhow::Result<u8> {
    let manifest = ManifestBuilder::start("fit");
    let mut config: FitCommandConfig = load_config(args.common.config.as_deref(), "fit")?;
    apply_solver_flags(&args.solver, &mut config.method, &mut config.settings);
    if let Some(i) = args.input {
        config.input = Some(i);
    }
    if let Some(d) = args.delta {
        config.delta = d;
    }
    if let Some(e) = args.eta {
        config.eta = e;
    }
    if let Some(s) = args.common.seed {
        config.seed = s;
    }
    config.symmetrize |= args.symmetrize;
    let dir = output_dir(&args.common, &config.output_dir);
    config.output_dir = Some(dir.clone());
    let Some(input) = config.input.clone() else {
        return Err(config_error("--input is required"));
    };

    let method = MethodRegistry::builtin().build(&config.method, &config.settings)?;
    let dataset = load_input(&input, config.symmetrize)?;
    prepare_output_dir(&dir)?;
    let (std_data, stats) = standardize(&dataset);
    let designs = build_design(&std_data);
    let labels = dataset.labels();
    let model = method.fit(&FitRequest::new(&designs, &labels, config.delta, config.eta, config.seed))?;
    let report_path = dir.join("fit.json");
    write_json(&report_path, &model.report(Some(&stats))?)?;
    eprintln!(
        "{}: loss {:.6}, {} selected edges, converged: {}",
        config.method,
        model.final_loss(),
        model.selected_edges().len(),
        model.converged()
    );
    manifest.finish(&config, config.seed, vec![input], vec![report_path], &dir)?;
    Ok(if model.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

// ---------------------------------------------------------------------- cv

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CvCommandConfig {
    pub input: Option<PathBuf>,
    pub method: String,
    pub settings: MethodSettings,
    pub grid: GridSpec,
    pub cv: CvConfig,
    pub symmetrize: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for CvCommandConfig {
    fn default() -> Self {
        CvCommandConfig {
            input: None,
            method: default_method(),
            settings: MethodSettings::default(),
            grid: GridSpec::default(),
            cv: CvConfig::default(),
            symmetrize: false,
            output_dir: None,
        }
    }
}

pub fn cv(args: CvArgs) -> anyhow::Result<u8> {
    let manifest = ManifestBuilder::start("cv");
    let mut config: CvCommandConfig = load_config(args.common.config.as_deref(), "cv")?;
    apply_solver_flags(&args.solver, &mut config.method, &mut config.settings);
    if let Some(i) = args.input {
        config.input = Some(i);
    }
    if let Some(f) = args.folds {
        config.cv.folds = f;
    }
    if let Some(s) = &args.standardize {
        config.cv.mode = parse_mode(s)?;
    }
    if let Some(s) = args.common.seed {
        config.cv.seed = s;
    }
    if let Some(n) = args.n_deltas {
        config.grid.n_deltas = n;
    }
    if let Some(e) = args.etas {
        config.grid.etas = e;
    }
    if args.no_warm_start {
        config.cv.warm_start = false;
    }
    config.symmetrize |= args.symmetrize;
    let dir = output_dir(&args.common, &config.output_dir);
    config.output_dir = Some(dir.clone());
    let Some(input) = config.input.clone() else {
        return Err(config_error("--input is required"));
    };
    config.grid.validate()?;

    let method = MethodRegistry::builtin().build(&config.method, &config.settings)?;
    let dataset = load_input(&input, config.symmetrize)?;
    prepare_output_dir(&dir)?;
    let selected = select_and_fit(method.as_ref(), &dataset, &config.grid, &config.cv)?;
    let table_csv = dir.join("cv_table.csv");
    let table_json = dir.join("cv_summary.json");
    let fit_path = dir.join("selected_fit.json");
    selected.table.write_csv(&table_csv)?;
    selected.table.write_json(&table_json)?;
    write_json(&fit_path, &selected.model.report(Some(&selected.stats))?)?;
    let (delta, eta) = selected.table.selected_penalty();
    eprintln!(
        "{}: selected delta {delta:.6} eta {eta}, CV deviance {:.4} (SE {:.4}), {} selected edges",
        config.method,
        selected.table.selected().mean_deviance,
        selected.table.selected().standard_error,
        selected.model.selected_edges().len()
    );
    manifest.finish(&config, config.cv.seed, vec![input], vec![table_csv, table_json, fit_path], &dir)?;
    Ok(if selected.model.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub fit: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Present for replicate studies.
    pub study: Option<StudyConfig>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub tpr: f64,
    pub fpr: f64,
    pub nodes: usize,
    pub estimated_edges: Vec<Edge>,
    pub signal_edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct EdgeListReport {
    selected_edges: Vec<Edge>,
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<u8> {
    let manifest = ManifestBuilder::start("evaluate");
    let mut config: EvaluateConfig = load_config(args.common.config.as_deref(), "evaluate")?;
    if let Some(f) = &args.fit {
        config.fit = Some(f.clone());
    }
    if let Some(t) = &args.truth {
        config.truth = Some(t.clone());
    }
    if let Some(r) = args.replicates {
        let mut study = config.study.take().unwrap_or_default();
        study.replicates = r;
        config.study = Some(study);
    }
    if let Some(study) = config.study.as_mut() {
        if let Some(m) = &args.methods {
            study.methods = m.clone();
        }
        let mut unused = String::new();
        apply_solver_flags(&args.solver, &mut unused, &mut study.settings);
        if args.solver.method.is_some() {
            return Err(config_error("use --methods for replicate studies"));
        }
        apply_generator_flags(&args.generator, &mut study.generator);
        if let Some(s) = args.common.seed {
            study.seed = s;
        }
        if let Some(f) = args.folds {
            study.cv.folds = f;
        }
        if let Some(s) = &args.standardize {
            study.cv.mode = parse_mode(s)?;
        }
        if let Some(n) = args.n_deltas {
            study.grid.n_deltas = n;
        }
        if let Some(e) = &args.etas {
            study.grid.etas = e.clone();
        }
    }
    let dir = output_dir(&args.common, &config.output_dir);
    config.output_dir = Some(dir.clone());

    if let Some(study) = config.study.clone() {
        if config.fit.is_some() {
            return Err(config_error("--fit and --replicates are mutually exclusive"));
        }
        study.generator.validate()?;
        study.grid.validate()?;
        prepare_output_dir(&dir)?;
        let report = run_study(&study, &MethodRegistry::builtin(), |o| {
            eprintln!(
                "replicate {} {}: deviance {:.4}, TPR {:.3}, FPR {:.4}",
                o.replicate, o.method, o.cv_deviance, o.tpr, o.fpr
            );
        })?;
        let json_path = dir.join("study.json");
        let table_path = dir.join("study_table.txt");
        let csv_path = dir.join("study_outcomes.csv");
        write_json(&json_path, &report)?;
        std::fs::write(&table_path, report.table()).with_context(|| format!("cannot write {}", table_path.display()))?;
        write_outcomes_csv(&csv_path, &report.outcomes)?;
        print!("{}", report.table());
        manifest.finish(&config, study.seed, vec![], vec![json_path, table_path, csv_path], &dir)?;
        return Ok(EXIT_OK);
    }

    let (Some(fit_path), Some(truth_path)) = (config.fit.clone(), config.truth.clone()) else {
        return Err(config_error("either --fit with --truth, or --replicates, is required"));
    };
    let fit_text = std::fs::read_to_string(&fit_path).with_context(|| format!("cannot read {}", fit_path.display()))?;
    let fit: EdgeListReport = serde_json::from_str(&fit_text).map_err(sblr::Error::from)?;
    let truth_text =
        std::fs::read_to_string(&truth_path).with_context(|| format!("cannot read {}", truth_path.display()))?;
    let truth: TruthRecord = serde_json::from_str(&truth_text).map_err(sblr::Error::from)?;
    let nodes = truth.config.nodes;
    if let Some(e) = fit.selected_edges.iter().find(|e| e.u >= nodes || e.u <= e.v) {
        bail!(sblr::Error::Malformed(format!("edge ({}, {}) is not a lower-triangular pair of {nodes} nodes", e.u, e.v)));
    }
    let estimated: BTreeSet<Edge> = fit.selected_edges.into_iter().collect();
    let Recovery { tpr, fpr } = evaluate_recovery(&estimated, &truth.truth.signal_edges, nodes);
    prepare_output_dir(&dir)?;
    let out = dir.join("recovery.json");
    write_json(
        &out,
        &RecoveryReport {
            tpr,
            fpr,
            nodes,
            estimated_edges: estimated.into_iter().collect(),
            signal_edges: truth.truth.signal_edges.iter().copied().collect(),
        },
    )?;
    println!("TPR {tpr:.4} FPR {fpr:.4}");
    manifest.finish(&config, truth.seed, vec![fit_path, truth_path], vec![out], &dir)?;
    Ok(EXIT_OK)
}

fn write_outcomes_csv(path: &Path, outcomes: &[sblr::experiment::ReplicateOutcome]) -> anyhow::Result<()> {
    let mut text = String::from("replicate,data_seed,method,delta,eta,cv_deviance,cv_standard_error,tpr,fpr,selected_edges,converged\n");
    for o in outcomes {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            o.replicate, o.data_seed, o.method, o.delta, o.eta, o.cv_deviance, o.cv_standard_error, o.tpr, o.fpr,
            o.selected_edges, o.converged
        ));
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

// ------------------------------------------------------------------- bench

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub axis: Axis,
    pub values: Vec<usize>,
    pub n: usize,
    pub nodes: usize,
    pub k: usize,
    pub bench: CycleBench,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            axis: Axis::N,
            values: vec![125, 250, 500, 1000],
            n: 250,
            nodes: 50,
            k: 5,
            bench: CycleBench::default(),
            output_dir: None,
        }
    }
}

pub fn bench(args: BenchArgs) -> anyhow::Result<u8> {
    let manifest = ManifestBuilder::start("bench");
    let mut config: BenchConfig = load_config(args.common.config.as_deref(), "bench")?;
    if let Some(a) = &args.axis {
        config.axis = match a.as_str() {
            "n" => Axis::N,
            "k" => Axis::K,
            "v" => Axis::V,
            other => return Err(config_error(format!("unknown axis '{other}' (n, k, v)"))),
        };
    }
    if let Some(v) = args.values {
        config.values = v;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(v) = args.nodes {
        config.nodes = v;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(c) = args.cycles {
        config.bench.cycles = c;
    }
    if let Some(s) = args.common.seed {
        config.bench.seed = s;
    }
    let dir = output_dir(&args.common, &config.output_dir);
    config.output_dir = Some(dir.clone());
    if config.values.len() < 2 || config.values.contains(&0) {
        return Err(config_error("a ladder needs at least two positive values"));
    }
    prepare_output_dir(&dir)?;
    let ladder = run_ladder(
        config.axis,
        &config.values,
        (config.n, config.nodes, config.k),
        &config.bench,
        Some(crate::allocator()),
    )?;
    for p in &ladder.points {
        println!(
            "n {:>5} V {:>4} K {:>3}: {:.6} s/cycle, peak {} bytes",
            p.n,
            p.nodes,
            p.k,
            p.seconds_per_cycle,
            p.peak_bytes.unwrap_or(0)
        );
    }
    println!("time slope {:.3}", ladder.time_slope);
    if let Some(m) = ladder.memory_slope {
        println!("memory slope {m:.3}");
    }
    let out = dir.join("bench.json");
    write_json(&out, &ladder)?;
    manifest.finish(&config, config.bench.seed, vec![], vec![out], &dir)?;
    Ok(EXIT_OK)
}
