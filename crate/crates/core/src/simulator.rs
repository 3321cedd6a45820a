//! Communication-pattern generation and covert masking.
//!
//! A pattern is the full node set of one interaction (initiator plus
//! responders). Masking removes covert nodes; a record is relevant when
//! masking removed at least one node from it.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_string, Error, Result};
use crate::netgen::Network;
use crate::observation::ObservationSet;
use crate::theta::Theta;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// Every initiator once, in node order (D = N).
    #[default]
    Exhaustive,
    /// D initiators drawn uniformly with replacement.
    Sampled,
    /// D distinct initiators drawn uniformly without replacement, in node order.
    Distinct,
}

/// Patterns with their covert mask applied (possibly an empty mask).
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLog {
    node_count: usize,
    patterns: Vec<Vec<usize>>,
    initiators: Vec<usize>,
    covert: Vec<bool>,
    observations: Vec<Vec<usize>>,
    relevance: Vec<bool>,
    dropped_empty: usize,
}

impl PatternLog {
    /// Unmasked log: observations equal patterns.
    pub fn unmasked(node_count: usize, patterns: Vec<Vec<usize>>, initiators: Vec<usize>) -> Result<Self> {
        if patterns.len() != initiators.len() {
            return Err(Error::Dimension {
                what: "initiators",
                expected: patterns.len(),
                actual: initiators.len(),
            });
        }
        let mut patterns = patterns;
        for (p, &init) in patterns.iter_mut().zip(&initiators) {
            p.sort_unstable();
            p.dedup();
            for &v in p.iter().chain(std::iter::once(&init)) {
                if v >= node_count {
                    return Err(Error::NodeOutOfRange { node: v, n: node_count });
                }
            }
            if p.binary_search(&init).is_err() {
                return Err(Error::InvalidConfig(format!(
                    "initiator {init} missing from its pattern"
                )));
            }
        }
        Ok(PatternLog {
            node_count,
            observations: patterns.clone(),
            relevance: vec![false; patterns.len()],
            patterns,
            initiators,
            covert: vec![false; node_count],
            dropped_empty: 0,
        })
    }

    /// Record count D.
    pub fn d(&self) -> usize {
        self.patterns.len()
    }

    /// Relevant record count D_t.
    pub fn d_t(&self) -> usize {
        self.relevance.iter().filter(|&&r| r).count()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn patterns(&self) -> &[Vec<usize>] {
        &self.patterns
    }

    pub fn initiators(&self) -> &[usize] {
        &self.initiators
    }

    pub fn observations(&self) -> &[Vec<usize>] {
        &self.observations
    }

    pub fn relevance(&self) -> &[bool] {
        &self.relevance
    }

    /// Records dropped so far because masking left them empty.
    pub fn dropped_empty(&self) -> usize {
        self.dropped_empty
    }

    pub fn covert_nodes(&self) -> Vec<usize> {
        (0..self.node_count).filter(|&v| self.covert[v]).collect()
    }

    pub fn is_covert(&self, v: usize) -> bool {
        self.covert[v]
    }

    /// Observation matrix over the overt nodes, columns in first-appearance
    /// order (the order a reader of the log file reconstructs).
    pub fn observation_set(&self, labels: &[String]) -> Result<ObservationSet> {
        if labels.len() != self.node_count {
            return Err(Error::Dimension {
                what: "node labels",
                expected: self.node_count,
                actual: labels.len(),
            });
        }
        let named: Vec<Vec<&str>> = self
            .observations
            .iter()
            .map(|row| row.iter().map(|&v| labels[v].as_str()).collect())
            .collect();
        ObservationSet::build_in_appearance_order(&named)
    }

    /// Observation log text (one record per line).
    pub fn observation_log(&self, labels: &[String]) -> String {
        let mut out = String::new();
        for row in &self.observations {
            let names: Vec<&str> = row.iter().map(|&v| labels[v].as_str()).collect();
            out.push_str(&names.join(","));
            out.push('\n');
        }
        out
    }

    /// Ground-truth sidecar: `record<TAB>initiator<TAB>relevant<TAB>pattern`.
    pub fn ground_truth(&self, labels: &[String]) -> String {
        let mut out = String::from("# record\tinitiator\trelevant\tpattern\n");
        for i in 0..self.d() {
            let names: Vec<&str> = self.patterns[i].iter().map(|&v| labels[v].as_str()).collect();
            out.push_str(&format!(
                "{i}\t{}\t{}\t{}\n",
                labels[self.initiators[i]],
                u8::from(self.relevance[i]),
                names.join(",")
            ));
        }
        out
    }
}

/// One ground-truth line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthRow {
    pub initiator: String,
    pub relevant: bool,
    pub pattern: Vec<String>,
}

/// Parses the ground-truth sidecar written by [`PatternLog::ground_truth`].
pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruthRow>> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [record, initiator, relevant, pattern] = fields.as_slice() else {
            return Err(Error::parse(line_no, "expected 4 tab-separated fields"));
        };
        let record: usize = record
            .parse()
            .map_err(|_| Error::parse(line_no, "bad record index"))?;
        if record != rows.len() {
            return Err(Error::parse(line_no, format!("record {record} out of sequence")));
        }
        let relevant = match *relevant {
            "1" => true,
            "0" => false,
            _ => return Err(Error::parse(line_no, "relevant must be 0 or 1")),
        };
        let pattern: Vec<String> = pattern.split(',').map(|s| s.trim().to_string()).collect();
        if pattern.iter().any(String::is_empty) {
            return Err(Error::parse(line_no, "empty node name in pattern"));
        }
        if initiator.is_empty() || !pattern.iter().any(|p| p == initiator) {
            return Err(Error::parse(line_no, "initiator missing from pattern"));
        }
        rows.push(GroundTruthRow {
            initiator: initiator.to_string(),
            relevant,
            pattern,
        });
    }
    Ok(rows)
}

pub fn load_relevance(path: &Path) -> Result<Vec<bool>> {
    Ok(parse_ground_truth(&read_to_string(path)?)?
        .into_iter()
        .map(|row| row.relevant)
        .collect())
}

/// Scenario descriptor stored next to the observation and ground-truth files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDescriptor {
    pub covert: Vec<String>,
    pub mode: ObservationMode,
    pub d: usize,
    pub d_t: usize,
    pub dropped_empty: usize,
    pub seed: u64,
}

impl ScenarioDescriptor {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&read_to_string(path)?)?)
    }
}

/// The closed neighborhood of every node, indexed by initiator.
pub fn enumerate_patterns(network: &Network) -> Vec<Vec<usize>> {
    (0..network.n())
        .map(|j| {
            let mut p = network.neighbors(j).to_vec();
            let pos = p.binary_search(&j).unwrap_err();
            p.insert(pos, j);
            p
        })
        .collect()
}

/// Patterns of a deterministic, symmetric network with uniform initiators.
///
/// `d` must be absent or equal to N in exhaustive mode and is required
/// otherwise.
pub fn sample_patterns(
    network: &Network,
    d: Option<usize>,
    mode: ObservationMode,
    seed: u64,
) -> Result<PatternLog> {
    let n = network.n();
    let all = enumerate_patterns(network);
    let initiators: Vec<usize> = match mode {
        ObservationMode::Exhaustive => {
            if let Some(d) = d.filter(|&d| d != n) {
                return Err(Error::InvalidConfig(format!(
                    "exhaustive mode yields D = {n}, requested D = {d}"
                )));
            }
            (0..n).collect()
        }
        ObservationMode::Sampled => {
            let d = required_d(d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..d).map(|_| rng.random_range(0..n)).collect()
        }
        ObservationMode::Distinct => {
            let d = required_d(d)?;
            if d > n {
                return Err(Error::InvalidConfig(format!(
                    "cannot draw {d} distinct initiators from {n} nodes"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = index::sample(&mut rng, n, d).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    let patterns = initiators.iter().map(|&j| all[j].clone()).collect();
    PatternLog::unmasked(n, patterns, initiators)
}

fn required_d(d: Option<usize>) -> Result<usize> {
    match d {
        Some(d) if d >= 1 => Ok(d),
        _ => Err(Error::InvalidConfig("record count D must be at least 1".into())),
    }
}

/// Stochastic patterns from arbitrary parameters: the initiator is drawn from
/// `f`, and each other node responds independently with probability `r_jk`.
pub fn sample_patterns_from_theta(theta: &Theta, d: usize, seed: u64) -> Result<PatternLog> {
    let n = theta.n();
    let d = required_d(Some(d))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patterns = Vec::with_capacity(d);
    let mut initiators = Vec::with_capacity(d);
    for _ in 0..d {
        let mut x: f64 = rng.random();
        let mut initiator = n - 1;
        for j in 0..n {
            if x < theta.f(j) {
                initiator = j;
                break;
            }
            x -= theta.f(j);
        }
        let mut pattern = vec![initiator];
        for k in (0..n).filter(|&k| k != initiator) {
            if rng.random::<f64>() < theta.r(initiator, k) {
                pattern.push(k);
            }
        }
        patterns.push(pattern);
        initiators.push(initiator);
    }
    PatternLog::unmasked(n, patterns, initiators)
}

/// Adds `covert` to the log's covert set and recomputes observations and
/// relevance. Records left empty are dropped and counted.
pub fn mask_covert(log: &PatternLog, covert: &[usize]) -> Result<PatternLog> {
    let n = log.node_count;
    let mut mask = log.covert.clone();
    for &v in covert {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        mask[v] = true;
    }
    if mask.iter().all(|&c| c) {
        return Err(Error::NoOvertNodes);
    }
    let mut out = PatternLog {
        node_count: n,
        patterns: Vec::with_capacity(log.d()),
        initiators: Vec::with_capacity(log.d()),
        covert: mask,
        observations: Vec::with_capacity(log.d()),
        relevance: Vec::with_capacity(log.d()),
        dropped_empty: log.dropped_empty,
    };
    for (pattern, &initiator) in log.patterns.iter().zip(&log.initiators) {
        let observed: Vec<usize> = pattern.iter().copied().filter(|&v| !out.covert[v]).collect();
        if observed.is_empty() {
            out.dropped_empty += 1;
            continue;
        }
        out.relevance.push(observed.len() != pattern.len());
        out.observations.push(observed);
        out.patterns.push(pattern.clone());
        out.initiators.push(initiator);
    }
    Ok(out)
}
