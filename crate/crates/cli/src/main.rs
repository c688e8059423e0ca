mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use batchopt::analytics::{compute_stats, detect_with_stats, DetectionConfig};
use batchopt::evaluation::{compare_runs, cycle_time_gain_of, FrontPointSet, RunSummary};
use batchopt::fixtures::{fixtures_dir, regenerate_goldens, GoldenMode};
use batchopt::interventions::{derive_interventions, InterventionConfig};
use batchopt::model::{parse_model, validate_model, ProcessModel};
use batchopt::optimizer::{optimize, OptimizerConfig, OptimizerError, Strategy};
use batchopt::pareto::ParetoFront;
use batchopt::policy::{parse_policies, PolicySet};
use batchopt::sim::{simulate, EventLog, SimConfig};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use manifest::RunManifest;

const EXIT_MISSING: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "batchopt", version, about = "Simulate, analyze and optimize activity batching policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a model under a policy set and write its event log.
    Simulate(SimulateArgs),
    /// Search for Pareto-optimal policy sets.
    Optimize(OptimizeArgs),
    /// Detect batching inefficiencies and list the interventions they suggest.
    Analyze(AnalyzeArgs),
    /// Compare optimizer fronts against their joint reference front.
    Evaluate(EvaluateArgs),
    /// Recompute fixture goldens and report or write differences.
    Goldens(GoldensArgs),
}

#[derive(Args)]
struct Output {
    /// Output directory [default: $BATCHOPT_OUT_ROOT/<command>, or ./out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    policies: Option<PathBuf>,
    /// Simulation configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Initial policy set; no batching when omitted.
    #[arg(long)]
    policies: Option<PathBuf>,
    /// Optimizer configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides both the search seed and the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, overrides_with = "unguided")]
    guided: bool,
    #[arg(long, overrides_with = "guided")]
    unguided: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    policies: Option<PathBuf>,
    /// Analysis configuration document (simulation, detection and intervention settings).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding `instances.csv` and `batches.csv` to analyze instead of simulating.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Front documents written by `optimize`.
    #[arg(required = true, num_args = 2..)]
    fronts: Vec<PathBuf>,
    /// Model for cycle-time gain; requires the initial policies too.
    #[arg(long, requires = "policies")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    policies: Option<PathBuf>,
    /// Simulation configuration used for cycle-time gain.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GoldensArgs {
    /// Fixture root [default: the bundled fixtures].
    #[arg(long)]
    root: Option<PathBuf>,
    /// Rewrite differing goldens instead of failing.
    #[arg(long)]
    write: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
struct AnalyzeConfig {
    sim_config: SimConfig,
    detection_config: DetectionConfig,
    intervention_config: InterventionConfig,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn missing(path: &Path) -> Self {
        Failure { code: EXIT_MISSING, message: format!("input not found: {}", path.display()) }
    }

    fn schema(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_SCHEMA, message: format!("{}: {e}", path.display()) }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_RUNTIME, message: e.to_string() }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Failure::missing(path),
        _ => Failure::runtime(format!("{}: {e}", path.display())),
    })
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = read(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Failure::schema(path, format!("at `{}`: {}", e.path(), e.inner())))
}

fn load_model(path: &Path) -> Result<ProcessModel> {
    let model = parse_model(&read(path)?).map_err(|e| Failure::schema(path, e))?;
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(Failure::schema(path, report));
    }
    Ok(model)
}

fn load_policies(path: Option<&Path>, model: &ProcessModel) -> Result<PolicySet> {
    let Some(path) = path else { return Ok(PolicySet::new()) };
    let set = parse_policies(&read(path)?).map_err(|e| Failure::schema(path, e))?;
    set.check(model).map_err(|e| Failure::schema(path, e))?;
    Ok(set)
}

fn out_dir(output: &Output, command: &str) -> PathBuf {
    output.out.clone().unwrap_or_else(|| {
        let root = std::env::var_os("BATCHOPT_OUT_ROOT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        root.join(command)
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Files of one command, written together once the command has succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Outputs { dir, files: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn finish(mut self, mut manifest: RunManifest, started: Instant) -> Result<()> {
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        self.add("manifest.json", json(&manifest));
        fs::create_dir_all(&self.dir).map_err(|e| Failure::runtime(format!("{}: {e}", self.dir.display())))?;
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn inputs(pairs: &[(&str, Option<&Path>)]) -> BTreeMap<String, String> {
    pairs.iter().filter_map(|(k, p)| p.map(|p| (k.to_string(), p.display().to_string()))).collect()
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let model = load_model(&args.model)?;
    let policies = load_policies(args.policies.as_deref(), &model)?;
    let mut cfg: SimConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let run = simulate(&model, &policies, &cfg).map_err(Failure::runtime)?;
    log::info!("simulated {} instances in {} batches", run.log.records.len(), run.log.batches.len());

    let mut out = Outputs::new(out_dir(&args.output, "simulate"));
    out.add("instances.csv", run.log.instances_csv());
    out.add("batches.csv", run.log.batches_csv());
    out.add("objectives.json", json(&run.objectives));
    let manifest = RunManifest::new(
        "simulate",
        inputs(&[("model", Some(&args.model)), ("policies", args.policies.as_deref())]),
        &cfg,
        Some(cfg.seed),
    );
    out.finish(manifest, started)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<()> {
    let started = Instant::now();
    let model = load_model(&args.model)?;
    let policies = load_policies(args.policies.as_deref(), &model)?;
    let mut cfg: OptimizerConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.sim_config.seed = seed;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if args.guided {
        cfg.guided = true;
    }
    if args.unguided {
        cfg.guided = false;
    }
    let problems = cfg.problems();
    if !problems.is_empty() {
        let name = args.config.as_deref().map(|p| p.display().to_string()).unwrap_or_else(|| "optimizer configuration".into());
        return Err(Failure { code: EXIT_SCHEMA, message: format!("{name}: {}", problems.join("; ")) });
    }
    let result = optimize(&model, &policies, &cfg).map_err(|e| match e {
        OptimizerError::InvalidConfig(p) => Failure { code: EXIT_SCHEMA, message: p.join("; ") },
        e => Failure::runtime(e),
    })?;
    log::info!("{} simulations, front of {}", result.simulations, result.front.len());

    let mut out = Outputs::new(out_dir(&args.output, "optimize"));
    let mut front = Vec::new();
    result.front.write_json(&mut front).map_err(Failure::runtime)?;
    front.push(b'\n');
    out.add("front.json", String::from_utf8(front).expect("json is utf-8"));
    out.add("front.csv", result.front.points_csv());
    let mut audit = Vec::new();
    result.write_audit(&mut audit).map_err(Failure::runtime)?;
    out.add("audit.jsonl", String::from_utf8(audit).expect("json is utf-8"));
    out.add("convergence.csv", result.convergence_csv());
    let manifest = RunManifest::new(
        "optimize",
        inputs(&[("model", Some(&args.model)), ("policies", args.policies.as_deref())]),
        &cfg,
        Some(cfg.seed),
    );
    out.finish(manifest, started)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DerivedInterventions {
    scenario: u8,
    activity: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    deltas: Vec<batchopt::interventions::PolicyDelta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn read_log(dir: &Path) -> Result<EventLog> {
    let inst = dir.join("instances.csv");
    let batches = dir.join("batches.csv");
    EventLog::read_csv_str(&read(&inst)?, &read(&batches)?).map_err(|e| Failure::schema(dir, e))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let started = Instant::now();
    let model = load_model(&args.model)?;
    let policies = load_policies(args.policies.as_deref(), &model)?;
    let mut cfg: AnalyzeConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.sim_config.seed = seed;
    }
    let log = match &args.log {
        Some(dir) => read_log(dir)?,
        None => simulate(&model, &policies, &cfg.sim_config).map_err(Failure::runtime)?.log,
    };
    let stats = compute_stats(&log, &model).map_err(Failure::runtime)?;
    let found = detect_with_stats(&stats, &log, &model, &policies, &cfg.detection_config);
    let derived: Vec<DerivedInterventions> = found
        .iter()
        .map(|s| {
            let (deltas, error) = match derive_interventions(s, &policies, &cfg.intervention_config) {
                Ok(d) => (d, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            DerivedInterventions { scenario: s.scenario, activity: s.activity_id.clone(), deltas, error }
        })
        .collect();

    let mut out = Outputs::new(out_dir(&args.output, "analyze"));
    out.add("stats.json", json(&stats));
    out.add("scenarios.json", json(&found));
    out.add("interventions.json", json(&derived));
    let manifest = RunManifest::new(
        "analyze",
        inputs(&[("model", Some(&args.model)), ("policies", args.policies.as_deref()), ("log", args.log.as_deref())]),
        &cfg,
        args.log.is_none().then_some(cfg.sim_config.seed),
    );
    out.finish(manifest, started)
}

/// Label and guided flag of a front, taken from the manifest written next to it.
fn front_origin(path: &Path) -> (String, Option<bool>) {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let label = dir
        .and_then(|d| d.file_name())
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let guided = dir
        .and_then(|d| fs::read_to_string(d.join("manifest.json")).ok())
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
        .filter(|m| m.command == "optimize")
        .and_then(|m| m.config.get("guided").and_then(|g| g.as_bool()));
    (label, guided)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let mut sim_cfg: SimConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        sim_cfg.seed = seed;
    }
    let initial = match (&args.model, &args.policies) {
        (Some(m), Some(p)) => {
            let model = load_model(m)?;
            let policies = load_policies(Some(p), &model)?;
            let log = simulate(&model, &policies, &sim_cfg).map_err(Failure::runtime)?.log;
            Some((model, log))
        }
        _ => None,
    };
    let mut runs = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for path in &args.fronts {
        let front = ParetoFront::from_json(&read(path)?).map_err(|e| Failure::schema(path, e))?;
        let (mut label, guided) = front_origin(path);
        if labels.contains(&label) {
            label = path.display().to_string();
        }
        labels.push(label.clone());
        let gain = match &initial {
            Some((model, log)) => {
                Some(cycle_time_gain_of(model, log, front.solutions(), &sim_cfg).map_err(Failure::runtime)?)
            }
            None => None,
        };
        runs.push(RunSummary { front: FrontPointSet::from_front(label, &front), guided, cycle_time_gain: gain });
    }
    let table = compare_runs(&runs).map_err(Failure::runtime)?;

    let mut out = Outputs::new(out_dir(&args.output, "evaluate"));
    out.add("metrics.csv", table.to_csv());
    out.add("metrics.txt", table.to_text());
    out.add("reference.json", json(&table.reference));
    let mut named: Vec<(String, Option<&Path>)> =
        args.fronts.iter().enumerate().map(|(i, p)| (format!("front{i}"), Some(p.as_path()))).collect();
    named.push(("model".into(), args.model.as_deref()));
    named.push(("policies".into(), args.policies.as_deref()));
    let named: Vec<(&str, Option<&Path>)> = named.iter().map(|(k, p)| (k.as_str(), *p)).collect();
    let seed = initial.is_some().then_some(sim_cfg.seed);
    out.finish(RunManifest::new("evaluate", inputs(&named), &sim_cfg, seed), started)
}

fn cmd_goldens(args: GoldensArgs) -> Result<()> {
    let root = args.root.unwrap_or_else(fixtures_dir);
    if !root.exists() {
        return Err(Failure::missing(&root));
    }
    let mode = if args.write { GoldenMode::Write } else { GoldenMode::Check };
    let report = regenerate_goldens(&root, mode).map_err(Failure::runtime)?;
    println!("{} golden files checked", report.checked);
    for (fixture, file) in &report.diffs {
        println!("{} {fixture}/{file}", if args.write { "rewrote" } else { "differs" });
    }
    if mode == GoldenMode::Check && !report.diffs.is_empty() {
        return Err(Failure::runtime(format!("stale goldens in: {}", report.fixtures_with_diffs().join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Goldens(a) => cmd_goldens(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
