//! `covert`: generate networks, simulate observations, fit, rank, evaluate,
//! and run whole experiments or sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use covert_core::detector::{parse_ranking_csv, rank_records};
use covert_core::evaluator::curve_from_flags;
use covert_core::experiment::{build_network, run_pipeline_at, run_sweep, Manifest};
use covert_core::netgen::generate_er_connected;
use covert_core::simulator::{load_relevance, ScenarioDescriptor};
use covert_core::{
    fit, mask_covert, sample_patterns, CovertSelector, ExperimentSpec, FitConfig, FloorMode,
    GenConfig, InitStrategy, NetworkSource, ObservationMode, ObservationSet, SweepAxis, Theta,
};

#[derive(Parser)]
#[command(name = "covert", version, about = "Covert node discovery from co-occurrence logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network file.
    Generate(GenerateArgs),
    /// Produce observations and ground truth from a network.
    Simulate(SimulateArgs),
    /// Fit model parameters to an observation log.
    Infer(InferArgs),
    /// Rank records by suspiciousness under fitted parameters.
    Rank(RankArgs),
    /// Precision, recall and F along a ranking.
    Evaluate(EvaluateArgs),
    /// Run network -> observations -> fit -> ranking -> evaluation.
    Pipeline(ExperimentArgs),
    /// Repeat the pipeline over sweep values and replicates.
    Sweep(ExperimentArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ba,
    Er,
}

#[derive(Args, Default)]
struct GenFlags {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    eta_times_gminus1: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
}

impl GenFlags {
    fn apply(&self, g: &mut GenConfig) {
        if let Some(v) = self.nodes {
            g.nodes = v;
        }
        if let Some(v) = self.groups {
            g.groups = v;
        }
        if let Some(v) = self.eta_times_gminus1 {
            g.eta_times_gminus1 = v;
        }
        if let Some(v) = self.m {
            g.m = v;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long, value_enum, default_value = "ba")]
    model: Model,
    /// Edge probability for the Erdős–Rényi model (redrawn until connected).
    #[arg(long, default_value_t = 0.05)]
    edge_probability: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
    Distinct,
}

impl From<ModeArg> for ObservationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exhaustive => ObservationMode::Exhaustive,
            ModeArg::Sampled => ObservationMode::Sampled,
            ModeArg::Distinct => ObservationMode::Distinct,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Network file.
    #[arg(long)]
    network: PathBuf,
    /// `largest-hub`, `degree:<K>`, `name:<node>` or a node name.
    #[arg(long, default_value = "largest-hub")]
    covert: String,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: ModeArg,
    /// Record count for sampled and distinct modes.
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Ownership,
    Cooccurrence,
    Uniform,
}

#[derive(Args, Default)]
struct FitFlags {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Use simulated annealing instead of hill climbing.
    #[arg(long)]
    anneal: bool,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Error on zero-probability records instead of flooring them.
    #[arg(long)]
    strict: bool,
}

impl FitFlags {
    fn apply(&self, c: &mut FitConfig) {
        if let Some(v) = self.max_iter {
            c.max_iterations = v;
        }
        if let Some(v) = self.step {
            c.step_size = v;
        }
        if let Some(v) = self.tol {
            c.tolerance = v;
        }
        if self.anneal {
            c.annealing.enabled = true;
        }
        if let Some(v) = self.init {
            c.init_strategy = match v {
                InitArg::Ownership => InitStrategy::Ownership,
                InitArg::Cooccurrence => InitStrategy::Cooccurrence,
                InitArg::Uniform => InitStrategy::Uniform,
            };
        }
        if self.strict {
            c.floor_mode = FloorMode::Strict;
        }
    }
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    /// Observation log (one comma-separated record per line).
    #[arg(long)]
    observations: PathBuf,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    observations: PathBuf,
    /// Fitted parameters (JSON).
    #[arg(long)]
    theta: PathBuf,
    /// Ground-truth file; adds a relevance column.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    ranking: PathBuf,
    /// Ground-truth file; required unless the ranking has a relevance column.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Degree,
    GroupCount,
    NodeCount,
    ObservationRatio,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Manifest of an earlier run; its experiment settings and run indices are reused.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Run entry of the manifest to repeat (pipeline only).
    #[arg(long, default_value_t = 0)]
    run: usize,
    /// Network file instead of a generated network.
    #[arg(long)]
    network: Option<PathBuf>,
    #[command(flatten)]
    gen: GenFlags,
    /// `largest-hub`, `degree:<K>`, `every-degree:<K>`, `name:<node>` or a node name.
    #[arg(long)]
    covert: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    d: Option<usize>,
    /// Record count as a fraction of the node count.
    #[arg(long)]
    ratio: Option<f64>,
    #[command(flatten)]
    fit: FitFlags,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Keep per-replicate artifacts in sweeps.
    #[arg(long)]
    keep_artifacts: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Infer(a) => infer(a),
        Command::Rank(a) => rank(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// Parses the `--config` file with `parse`, or returns the defaults.
fn read_config<T: Default>(
    path: Option<&Path>,
    parse: impl Fn(&str) -> covert_core::Result<T>,
) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    parse(&text).with_context(|| format!("{}", path.display()))
}

fn out_dir(common: &Common) -> Result<&Path> {
    std::fs::create_dir_all(&common.out_dir)
        .with_context(|| format!("{}", common.out_dir.display()))?;
    Ok(&common.out_dir)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut config = read_config(a.common.config.as_deref(), GenConfig::from_toml)?;
    a.gen.apply(&mut config);
    if let Some(seed) = a.common.seed {
        config.seed = seed;
    }
    let network = match a.model {
        Model::Ba => covert_core::generate_ba_grouped(&config)?,
        Model::Er => generate_er_connected(config.nodes, a.edge_probability, config.seed, 1000)?,
    };
    let path = out_dir(&a.common)?.join("network.tsv");
    network.save(&path)?;
    println!(
        "{}: {} nodes, {} edges",
        path.display(),
        network.n(),
        network.edge_count()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let network = build_network(&NetworkSource::File { path: a.network.clone() }, 0)?;
    let selector = CovertSelector::parse(&a.covert)?;
    let covert = selector.select(&network)?;
    if covert.len() != 1 {
        bail!("simulate masks a single node; use `pipeline` for every-degree selectors");
    }
    let seed = a.common.seed.unwrap_or(0);
    let mode = ObservationMode::from(a.mode);
    let log = mask_covert(&sample_patterns(&network, a.d, mode, seed)?, &covert)?;
    let dir = out_dir(&a.common)?;
    let labels = network.labels();
    write(&dir.join("observations.txt"), &log.observation_log(labels))?;
    write(&dir.join("ground_truth.tsv"), &log.ground_truth(labels))?;
    ScenarioDescriptor {
        covert: covert.iter().map(|&v| labels[v].clone()).collect(),
        mode,
        d: log.d(),
        d_t: log.d_t(),
        dropped_empty: log.dropped_empty(),
        seed,
    }
    .save(&dir.join("scenario.toml"))?;
    println!("D = {}, D_t = {}, dropped empty = {}", log.d(), log.d_t(), log.dropped_empty());
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("{}", path.display()))
}

fn infer(a: InferArgs) -> Result<()> {
    let mut config = read_config(a.common.config.as_deref(), FitConfig::from_toml)?;
    a.fit.apply(&mut config);
    if let Some(seed) = a.common.seed {
        config.seed = seed;
    }
    let obs = ObservationSet::load(&a.observations, None)?;
    let result = fit(&obs, &config)?;
    let dir = out_dir(&a.common)?;
    result.theta_hat.save(&dir.join("theta.json"), obs.labels())?;
    write(&dir.join("trace.csv"), &result.trace_csv())?;
    println!(
        "L = {} after {} iterations (converged: {})",
        result.final_log_likelihood, result.iterations_used, result.converged
    );
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    let (labels, theta): (Vec<String>, Theta) = Theta::load(&a.theta)?;
    let obs = ObservationSet::load(&a.observations, Some(&labels))?;
    let floor = if a.strict { FloorMode::Strict } else { FloorMode::Clamp };
    let ranking = rank_records(&obs, &theta, floor)?;
    let relevance = a.ground_truth.as_deref().map(load_relevance).transpose()?;
    let dir = out_dir(&a.common)?;
    write(&dir.join("ranking.csv"), &ranking.to_csv(relevance.as_deref())?)?;
    println!("ranked {} records", ranking.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.ranking)
        .with_context(|| format!("{}", a.ranking.display()))?;
    let table = parse_ranking_csv(&text).with_context(|| format!("{}", a.ranking.display()))?;
    let along = match (&a.ground_truth, &table.relevant) {
        (Some(path), _) => {
            let relevance = load_relevance(path)?;
            if relevance.len() != table.order.len() {
                bail!(
                    "{} has {} records, ranking has {}",
                    path.display(),
                    relevance.len(),
                    table.order.len()
                );
            }
            table.order.iter().map(|&i| relevance[i]).collect::<Vec<_>>()
        }
        (None, Some(flags)) => flags.clone(),
        (None, None) => bail!("no relevance: pass --ground-truth or rank with one"),
    };
    let curve = curve_from_flags(&along)?;
    write(&out_dir(&a.common)?.join("curve.csv"), &curve.to_csv())?;
    println!("D = {}, D_t = {}, F(D_t) = {}", curve.d, curve.d_t, curve.f_at_dt());
    Ok(())
}

/// The experiment settings from `--manifest` or `--config`, with flags applied.
fn experiment_spec(a: &ExperimentArgs) -> Result<(ExperimentSpec, Option<Manifest>)> {
    if let Some(path) = &a.manifest {
        let manifest = Manifest::load(path).with_context(|| format!("{}", path.display()))?;
        return Ok((manifest.spec.clone(), Some(manifest)));
    }
    let mut spec = read_config(a.common.config.as_deref(), ExperimentSpec::from_toml)?;
    if let Some(seed) = a.common.seed {
        spec.seed = seed;
    }
    if let Some(path) = &a.network {
        spec.network = NetworkSource::File { path: path.clone() };
    }
    if let NetworkSource::Generate(g) = &mut spec.network {
        a.gen.apply(g);
    }
    if let Some(c) = &a.covert {
        spec.covert = CovertSelector::parse(c)?;
    }
    if let Some(m) = a.mode {
        spec.observation.mode = m.into();
    }
    if a.d.is_some() {
        spec.observation.d = a.d;
    }
    if a.ratio.is_some() {
        spec.observation.ratio = a.ratio;
    }
    a.fit.apply(&mut spec.fit);
    if let Some(axis) = a.axis {
        spec.sweep.axis = match axis {
            AxisArg::Degree => SweepAxis::Degree,
            AxisArg::GroupCount => SweepAxis::GroupCount,
            AxisArg::NodeCount => SweepAxis::NodeCount,
            AxisArg::ObservationRatio => SweepAxis::ObservationRatio,
        };
    }
    if let Some(values) = &a.values {
        spec.sweep.values = values.clone();
    }
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if a.keep_artifacts {
        spec.keep_artifacts = true;
    }
    spec.validate()?;
    Ok((spec, None))
}

fn pipeline(a: ExperimentArgs) -> Result<()> {
    let (spec, manifest) = experiment_spec(&a)?;
    let (axis_index, replicate) = match &manifest {
        Some(m) => {
            let run = m
                .runs
                .get(a.run)
                .with_context(|| format!("manifest has no run {}", a.run))?;
            (run.axis_index, run.replicate)
        }
        None => (0, 0),
    };
    let dir = out_dir(&a.common)?;
    let result = run_pipeline_at(&spec, axis_index, replicate, dir)?;
    for run in &result.runs {
        println!(
            "F(D_t) = {} over {} target(s)",
            run.f_dt.unwrap_or(f64::NAN),
            run.targets.len()
        );
    }
    Ok(())
}

fn sweep(a: ExperimentArgs) -> Result<()> {
    let (spec, _) = experiment_spec(&a)?;
    let dir = out_dir(&a.common)?;
    let outcome = run_sweep(&spec, Some(dir))?;
    let failed = outcome.manifest.runs.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} replicate(s) done, {} failed; summary in {}",
        outcome.rows.len(),
        failed,
        dir.join("summary.csv").display()
    );
    Ok(())
}
