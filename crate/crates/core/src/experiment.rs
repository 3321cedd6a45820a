//! End-to-end experiments: network, covert selection, observation, fit,
//! ranking and evaluation, with artifacts, manifests and parameter sweeps.
//!
//! Every random stage of a run draws its seed from [`derive_seed`], keyed by
//! the master seed, the sweep-value index, the replicate index and the stage.
//! A single pipeline run is the (value 0, replicate 0) cell of the same
//! scheme, so a one-value, one-replicate sweep reproduces it exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::rank_records;
use crate::error::{read_to_string, write_string, Error, Result};
use crate::estimator::{fit, FitConfig, FitResult};
use crate::evaluator::{baseline_at, curves, EvalCurve};
use crate::netgen::{generate_ba_grouped, generate_er_connected, GenConfig, Network};
use crate::simulator::{mask_covert, sample_patterns, ObservationMode, PatternLog, ScenarioDescriptor};

/// Attempts allowed when an Erdős–Rényi source must be connected.
const ER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkSource {
    /// Grouped preferential attachment. The seed field is replaced by the
    /// derived network seed.
    Generate(GenConfig),
    /// Connected Erdős–Rényi graph.
    ErdosRenyi { nodes: usize, edge_probability: f64 },
    /// Network file (`[nodes]` / `[edges]` sections).
    File { path: PathBuf },
}

impl Default for NetworkSource {
    fn default() -> Self {
        NetworkSource::Generate(GenConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovertSelector {
    Name(String),
    #[default]
    LargestHub,
    /// Lowest-index node of this degree.
    Degree(usize),
    /// Every node of this degree, one scenario each; results are averaged.
    EveryDegree(usize),
}

impl CovertSelector {
    /// Parses `largest-hub`, `name:<node>`, `degree:<K>` or `every-degree:<K>`.
    /// Any other text is taken as a node name.
    pub fn parse(text: &str) -> Result<Self> {
        let degree = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad degree in selector {text:?}")))
        };
        Ok(match text.split_once(':') {
            None if text == "largest-hub" => CovertSelector::LargestHub,
            Some(("name", v)) => CovertSelector::Name(v.to_string()),
            Some(("degree", v)) => CovertSelector::Degree(degree(v)?),
            Some(("every-degree", v)) => CovertSelector::EveryDegree(degree(v)?),
            _ if text.is_empty() => {
                return Err(Error::InvalidConfig("empty covert selector".into()))
            }
            _ => CovertSelector::Name(text.to_string()),
        })
    }

    /// Covert targets in `network`, one scenario per entry.
    pub fn select(&self, network: &Network) -> Result<Vec<usize>> {
        let targets = match self {
            CovertSelector::Name(name) => vec![network
                .index_of(name)
                .ok_or_else(|| Error::Selection(format!("no node named {name:?}")))?],
            CovertSelector::LargestHub => vec![network
                .largest_hub()
                .ok_or_else(|| Error::Selection("network has no nodes".into()))?],
            CovertSelector::Degree(k) => vec![(0..network.n())
                .find(|&v| network.degree(v) == *k)
                .ok_or_else(|| Error::Selection(format!("no node of degree {k}")))?],
            CovertSelector::EveryDegree(k) => {
                let all: Vec<usize> = (0..network.n()).filter(|&v| network.degree(v) == *k).collect();
                if all.is_empty() {
                    return Err(Error::Selection(format!("no node of degree {k}")));
                }
                all
            }
        };
        Ok(targets)
    }
}

/// How records are drawn from the network's patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSpec {
    pub mode: ObservationMode,
    /// Record count for `sampled` and `distinct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Record count as a fraction of the node count; used when `d` is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl ObservationSpec {
    fn record_count(&self, nodes: usize) -> Option<usize> {
        self.d
            .or_else(|| self.ratio.map(|q| (q * nodes as f64).round() as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    #[default]
    None,
    /// Covert selector becomes `every-degree:<value>`.
    Degree,
    /// Generator group count.
    GroupCount,
    /// Generator (or Erdős–Rényi) node count.
    NodeCount,
    /// Distinct initiators, `D = round(value * nodes)`.
    ObservationRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub replicates: usize,
    /// Sweeps normally write only the summary and manifest.
    pub keep_artifacts: bool,
    pub network: NetworkSource,
    pub covert: CovertSelector,
    pub observation: ObservationSpec,
    pub fit: FitConfig,
    pub sweep: SweepSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: 0,
            replicates: 1,
            keep_artifacts: false,
            network: NetworkSource::default(),
            covert: CovertSelector::default(),
            observation: ObservationSpec::default(),
            fit: FitConfig::default(),
            sweep: SweepSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.sweep.axis != SweepAxis::None {
            if self.sweep.values.is_empty() {
                return Err(Error::InvalidConfig("sweep values must not be empty".into()));
            }
            if let Some(v) = self.sweep.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidConfig(format!("bad sweep value {v}")));
            }
        }
        if matches!(self.network, NetworkSource::File { .. })
            && matches!(self.sweep.axis, SweepAxis::GroupCount | SweepAxis::NodeCount)
        {
            return Err(Error::InvalidConfig(
                "group-count and node-count sweeps need a generated network".into(),
            ));
        }
        self.fit.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Sweep values in run order; settings without an axis has one cell.
    pub fn axis_values(&self) -> Vec<Option<f64>> {
        if self.sweep.axis == SweepAxis::None {
            vec![None]
        } else {
            self.sweep.values.iter().map(|&v| Some(v)).collect()
        }
    }

    /// The concrete scenario of one sweep cell.
    fn cell(&self, value: Option<f64>, seeds: &StageSeeds) -> Result<Cell> {
        let mut network = self.network.clone();
        let mut covert = self.covert.clone();
        let mut observation = self.observation.clone();
        let mut fit = self.fit.clone();
        fit.seed = seeds.fit;
        if let Some(v) = value {
            let count = || as_count(v);
            match self.sweep.axis {
                SweepAxis::None => {}
                SweepAxis::Degree => covert = CovertSelector::EveryDegree(count()?),
                SweepAxis::GroupCount => match &mut network {
                    NetworkSource::Generate(g) => g.groups = count()?,
                    _ => return Err(Error::InvalidConfig("group-count sweep needs a generator".into())),
                },
                SweepAxis::NodeCount => match &mut network {
                    NetworkSource::Generate(g) => g.nodes = count()?,
                    NetworkSource::ErdosRenyi { nodes, .. } => *nodes = count()?,
                    NetworkSource::File { .. } => {
                        return Err(Error::InvalidConfig("node-count sweep needs a generator".into()))
                    }
                },
                SweepAxis::ObservationRatio => {
                    observation = ObservationSpec {
                        mode: ObservationMode::Distinct,
                        d: None,
                        ratio: Some(v),
                    }
                }
            }
        }
        if let NetworkSource::Generate(g) = &mut network {
            g.seed = seeds.network;
        }
        Ok(Cell {
            network,
            covert,
            observation,
            fit,
        })
    }
}

fn as_count(v: f64) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 {
        return Err(Error::InvalidConfig(format!("sweep value {v} is not a count")));
    }
    Ok(v as usize)
}

struct Cell {
    network: NetworkSource,
    covert: CovertSelector,
    observation: ObservationSpec,
    fit: FitConfig,
}

/// Random stages of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Network = 0,
    Observation = 1,
    Fit = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stage` of replicate `replicate` at sweep-value index `axis`.
///
/// SplitMix64 is applied to the master seed, then re-applied after XOR-ing in
/// each counter in turn (axis index, replicate index, stage number).
pub fn derive_seed(master: u64, axis: usize, replicate: usize, stage: Stage) -> u64 {
    let mut z = splitmix64(master);
    for counter in [axis as u64, replicate as u64, stage as u64] {
        z = splitmix64(z ^ counter);
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub network: u64,
    pub observation: u64,
    pub fit: u64,
}

impl StageSeeds {
    pub fn derive(master: u64, axis: usize, replicate: usize) -> Self {
        StageSeeds {
            network: derive_seed(master, axis, replicate, Stage::Network),
            observation: derive_seed(master, axis, replicate, Stage::Observation),
            fit: derive_seed(master, axis, replicate, Stage::Fit),
        }
    }
}

fn staged<T>(stage: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.at_stage(stage))
}

/// Builds (or loads) the network of a source.
pub fn build_network(source: &NetworkSource, seed: u64) -> Result<Network> {
    match source {
        NetworkSource::Generate(config) => generate_ba_grouped(config),
        NetworkSource::ErdosRenyi {
            nodes,
            edge_probability,
        } => generate_er_connected(*nodes, *edge_probability, seed, ER_ATTEMPTS),
        NetworkSource::File { path } => Network::load(path),
    }
}

/// Outcome of one covert target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetOutcome {
    pub covert: String,
    pub degree: usize,
    pub d: usize,
    pub d_t: usize,
    pub f_dt: f64,
    pub f_limit: f64,
    pub f_rand: f64,
    pub final_log_likelihood: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// In-memory results of one scenario for one target.
pub struct TargetRun {
    pub outcome: TargetOutcome,
    pub log: PatternLog,
    pub fit: FitResult,
    pub curve: EvalCurve,
    pub ranking: crate::detector::Ranking,
    pub labels: Vec<String>,
}

/// Masks `target`, fits, ranks and evaluates.
pub fn run_target(
    network: &Network,
    unmasked: &PatternLog,
    target: usize,
    config: &FitConfig,
    observation_seed: u64,
    mode: ObservationMode,
) -> Result<(TargetRun, ScenarioDescriptor)> {
    let log = staged("simulate", mask_covert(unmasked, &[target]))?;
    let obs = staged("simulate", log.observation_set(network.labels()))?;
    let result = staged("infer", fit(&obs, config))?;
    let ranking = staged("rank", rank_records(&obs, &result.theta_hat, config.floor_mode))?;
    let curve = staged("evaluate", curves(&ranking, log.relevance()))?;
    let (limit, random) = baseline_at(curve.d, curve.d_t, curve.d_t);
    let outcome = TargetOutcome {
        covert: network.labels()[target].clone(),
        degree: network.degree(target),
        d: curve.d,
        d_t: curve.d_t,
        f_dt: curve.f_at_dt(),
        f_limit: limit.f,
        f_rand: random.f,
        final_log_likelihood: result.final_log_likelihood,
        iterations_used: result.iterations_used,
        converged: result.converged,
    };
    let scenario = ScenarioDescriptor {
        covert: vec![outcome.covert.clone()],
        mode,
        d: log.d(),
        d_t: log.d_t(),
        dropped_empty: log.dropped_empty(),
        seed: observation_seed,
    };
    let labels = obs.labels().to_vec();
    Ok((
        TargetRun {
            outcome,
            log,
            fit: result,
            curve,
            ranking,
            labels,
        },
        scenario,
    ))
}

/// Output file with its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputHash {
    pub path: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes files under a root directory and remembers their hashes.
struct ArtifactWriter {
    root: PathBuf,
    outputs: Vec<OutputHash>,
}

impl ArtifactWriter {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(ArtifactWriter {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, relative: &str, contents: &str) -> Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_string(&path, contents)?;
        self.outputs.push(OutputHash {
            path: relative.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }
}

/// One replicate of a sweep cell (or the single pipeline run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub axis_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_value: Option<f64>,
    pub replicate: usize,
    pub seeds: StageSeeds,
    /// Mean `F(D_t)` over targets; absent when the replicate failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<String>,
}

/// Run manifest: version, settings echo, per-replicate seeds and output hashes.
/// The [`ExperimentSpec`] and a run's indices are enough to repeat that run alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub spec: ExperimentSpec,
    pub runs: Vec<RunRecord>,
    pub outputs: Vec<OutputHash>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: Manifest = toml::from_str(text)?;
        manifest.spec.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Results of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub axis_index: usize,
    pub axis_value: Option<f64>,
    pub replicate: usize,
    pub seeds: StageSeeds,
    pub targets: Vec<TargetOutcome>,
}

impl ReplicateOutcome {
    fn mean(&self, field: impl Fn(&TargetOutcome) -> f64) -> f64 {
        self.targets.iter().map(field).sum::<f64>() / self.targets.len() as f64
    }

    pub fn f_dt(&self) -> f64 {
        self.mean(|t| t.f_dt)
    }

    pub fn f_limit(&self) -> f64 {
        self.mean(|t| t.f_limit)
    }

    pub fn f_rand(&self) -> f64 {
        self.mean(|t| t.f_rand)
    }
}

/// Runs one replicate. With `artifacts`, writes the network, observations,
/// ground truth, scenario, fitted parameters, trace, ranking and curve under
/// that directory (per-target subdirectories when there are several targets).
pub fn run_replicate(
    spec: &ExperimentSpec,
    axis_index: usize,
    replicate: usize,
    artifacts: Option<&Path>,
) -> Result<(ReplicateOutcome, Vec<OutputHash>)> {
    spec.validate()?;
    let values = spec.axis_values();
    let value = *values.get(axis_index).ok_or_else(|| {
        Error::InvalidConfig(format!("sweep value index {axis_index} out of range"))
    })?;
    let seeds = StageSeeds::derive(spec.seed, axis_index, replicate);
    let cell = spec.cell(value, &seeds)?;
    let network = staged("network", build_network(&cell.network, seeds.network))?;
    let targets = staged("select", cell.covert.select(&network))?;
    let d = cell.observation.record_count(network.n());
    let unmasked = staged(
        "simulate",
        sample_patterns(&network, d, cell.observation.mode, seeds.observation),
    )?;

    let mut writer = artifacts.map(ArtifactWriter::new).transpose()?;
    if let Some(w) = writer.as_mut() {
        w.write("network.tsv", &network.to_file_string())?;
    }
    let mut outcomes = Vec::with_capacity(targets.len());
    for &target in &targets {
        let (run, scenario) = run_target(
            &network,
            &unmasked,
            target,
            &cell.fit,
            seeds.observation,
            cell.observation.mode,
        )?;
        if let Some(w) = writer.as_mut() {
            let prefix = if targets.len() > 1 {
                format!("target-{}/", run.outcome.covert)
            } else {
                String::new()
            };
            staged(
                "write",
                write_target(w, &prefix, &run, &scenario, network.labels()),
            )?;
        }
        outcomes.push(run.outcome);
    }
    let outcome = ReplicateOutcome {
        axis_index,
        axis_value: value,
        replicate,
        seeds,
        targets: outcomes,
    };
    Ok((outcome, writer.map(|w| w.outputs).unwrap_or_default()))
}

fn write_target(
    w: &mut ArtifactWriter,
    prefix: &str,
    run: &TargetRun,
    scenario: &ScenarioDescriptor,
    network_labels: &[String],
) -> Result<()> {
    w.write(
        &format!("{prefix}observations.txt"),
        &run.log.observation_log(network_labels),
    )?;
    w.write(
        &format!("{prefix}ground_truth.tsv"),
        &run.log.ground_truth(network_labels),
    )?;
    w.write(&format!("{prefix}scenario.toml"), &toml::to_string(scenario)?)?;
    w.write(
        &format!("{prefix}theta.json"),
        &run.fit.theta_hat.to_json(&run.labels)?,
    )?;
    w.write(&format!("{prefix}trace.csv"), &run.fit.trace_csv())?;
    w.write(
        &format!("{prefix}ranking.csv"),
        &run.ranking.to_csv(Some(run.log.relevance()))?,
    )?;
    w.write(&format!("{prefix}curve.csv"), &run.curve.to_csv())?;
    Ok(())
}

/// Runs the (value 0, replicate 0) cell with artifacts and a manifest in
/// `out_dir`.
pub fn run_pipeline(spec: &ExperimentSpec, out_dir: &Path) -> Result<Manifest> {
    run_pipeline_at(spec, 0, 0, out_dir)
}

/// [`run_pipeline`] for an arbitrary cell, e.g. one replicate of a sweep
/// manifest.
pub fn run_pipeline_at(
    spec: &ExperimentSpec,
    axis_index: usize,
    replicate: usize,
    out_dir: &Path,
) -> Result<Manifest> {
    let (outcome, outputs) = run_replicate(spec, axis_index, replicate, Some(out_dir))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        runs: vec![record_ok(&outcome)],
        outputs,
    };
    write_string(&out_dir.join("manifest.toml"), &manifest.to_toml()?)?;
    Ok(manifest)
}

fn record_ok(outcome: &ReplicateOutcome) -> RunRecord {
    RunRecord {
        axis_index: outcome.axis_index,
        axis_value: outcome.axis_value,
        replicate: outcome.replicate,
        seeds: outcome.seeds,
        f_dt: Some(outcome.f_dt()),
        error: None,
        targets: outcome.targets.iter().map(|t| t.covert.clone()).collect(),
    }
}

/// One row of the sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis_value: f64,
    pub replicate: usize,
    pub f_dt: f64,
    pub f_limit: f64,
    pub f_rand: f64,
}

/// Sweep results: summary rows for successful replicates, and the manifest
/// (which also lists failures).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub manifest: Manifest,
}

/// Long-format CSV `axis_value,replicate,F_Dt,F_limit,F_rand`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    use crate::fmt::sig12;
    let mut out = String::from("axis_value,replicate,F_Dt,F_limit,F_rand\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig12(row.axis_value),
            row.replicate,
            sig12(row.f_dt),
            sig12(row.f_limit),
            sig12(row.f_rand)
        ));
    }
    out
}

/// Every sweep value times every replicate, in that order. A failing
/// replicate is recorded in the manifest and left out of the summary.
/// Writes `summary.csv` and `manifest.toml` into `out_dir` when given, plus
/// per-replicate artifacts under `value-<i>/rep-<r>/` if `keep_artifacts`.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    spec.validate()?;
    if spec.sweep.axis == SweepAxis::None {
        return Err(Error::InvalidConfig("sweep needs an axis".into()));
    }
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    for (axis_index, value) in spec.axis_values().into_iter().enumerate() {
        for replicate in 0..spec.replicates {
            let relative = format!("value-{axis_index}/rep-{replicate}");
            let dir = out_dir
                .filter(|_| spec.keep_artifacts)
                .map(|d| d.join(&relative));
            match run_replicate(spec, axis_index, replicate, dir.as_deref()) {
                Ok((outcome, files)) => {
                    rows.push(SummaryRow {
                        axis_value: value.unwrap_or_default(),
                        replicate,
                        f_dt: outcome.f_dt(),
                        f_limit: outcome.f_limit(),
                        f_rand: outcome.f_rand(),
                    });
                    runs.push(record_ok(&outcome));
                    outputs.extend(files.into_iter().map(|o| OutputHash {
                        path: format!("{relative}/{}", o.path),
                        sha256: o.sha256,
                    }));
                }
                Err(e) => runs.push(RunRecord {
                    axis_index,
                    axis_value: value,
                    replicate,
                    seeds: StageSeeds::derive(spec.seed, axis_index, replicate),
                    f_dt: None,
                    error: Some(e.to_string()),
                    targets: Vec::new(),
                }),
            }
        }
    }
    let summary = summary_csv(&rows);
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        runs,
        outputs,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_string(&dir.join("summary.csv"), &summary)?;
        manifest.outputs.push(OutputHash {
            path: "summary.csv".into(),
            sha256: sha256_hex(summary.as_bytes()),
        });
        write_string(&dir.join("manifest.toml"), &manifest.to_toml()?)?;
    }
    Ok(SweepOutcome { rows, manifest })
}
