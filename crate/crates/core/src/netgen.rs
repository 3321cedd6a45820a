//! Undirected networks: grouped preferential-attachment and Erdős–Rényi
//! generators, the edge-list file format, and degree/clustering statistics.
//!
//! File format (UTF-8, `#` comments, blank lines ignored):
//!
//! ```text
//! [nodes]
//! alice	0
//! bob	1
//! [edges]
//! alice	bob
//! ```

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_string, Error, Result};

/// Simple undirected graph with a group label per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    labels: Vec<String>,
    groups: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl Network {
    /// Edgeless network.
    pub fn new(labels: Vec<String>, groups: Vec<usize>) -> Result<Self> {
        if labels.len() != groups.len() {
            return Err(Error::Dimension {
                what: "group labels",
                expected: labels.len(),
                actual: groups.len(),
            });
        }
        let mut seen = HashMap::new();
        for name in &labels {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::DuplicateNode { name: name.clone() });
            }
        }
        let n = labels.len();
        Ok(Network {
            labels,
            groups,
            adjacency: vec![Vec::new(); n],
        })
    }

    /// `n` nodes named `n0..`, all in group 0.
    pub fn with_nodes(n: usize) -> Self {
        Network {
            labels: default_labels(n),
            groups: vec![0; n],
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Adds `a -- b`. Returns `false` if the edge already exists.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        let n = self.n();
        for v in [a, b] {
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
        }
        if a == b {
            return Err(Error::InvalidConfig(format!("self-loop on node {a}")));
        }
        match self.adjacency[a].binary_search(&b) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adjacency[a].insert(pos, b);
                let pos = self.adjacency[b].binary_search(&a).unwrap_err();
                self.adjacency[b].insert(pos, a);
                Ok(true)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// One more than the largest group label (0 for an empty network).
    pub fn group_count(&self) -> usize {
        self.groups.iter().max().map_or(0, |g| g + 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    /// Sorted neighbors of `j`.
    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.adjacency[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.adjacency[j].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Node with the largest degree; ties go to the lowest index.
    pub fn largest_hub(&self) -> Option<usize> {
        (0..self.n()).max_by(|&a, &b| self.degree(a).cmp(&self.degree(b)).then(b.cmp(&a)))
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("[nodes]\n");
        for (name, group) in self.labels.iter().zip(&self.groups) {
            out.push_str(&format!("{name}\t{group}\n"));
        }
        out.push_str("[edges]\n");
        for (a, b) in self.edges() {
            out.push_str(&format!("{}\t{}\n", self.labels[a], self.labels[b]));
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        enum Section {
            None,
            Nodes,
            Edges,
        }
        let mut section = Section::None;
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed {
                "[nodes]" => {
                    section = Section::Nodes;
                    continue;
                }
                "[edges]" => {
                    section = Section::Edges;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            match section {
                Section::None => {
                    return Err(Error::parse(line_no, "content before [nodes] section"));
                }
                Section::Nodes => {
                    let (name, group) = match fields.as_slice() {
                        [name] => (*name, 0),
                        [name, group] => (
                            *name,
                            group
                                .parse()
                                .map_err(|_| Error::parse(line_no, format!("bad group {group:?}")))?,
                        ),
                        _ => return Err(Error::parse(line_no, "expected name<TAB>group")),
                    };
                    if name.is_empty() {
                        return Err(Error::parse(line_no, "empty node name"));
                    }
                    if index.insert(name.to_string(), labels.len()).is_some() {
                        return Err(Error::parse(line_no, format!("duplicate node {name}")));
                    }
                    labels.push(name.to_string());
                    groups.push(group);
                }
                Section::Edges => {
                    let [a, b] = fields.as_slice() else {
                        return Err(Error::parse(line_no, "expected nameA<TAB>nameB"));
                    };
                    let lookup = |name: &str| {
                        index
                            .get(name)
                            .copied()
                            .ok_or_else(|| Error::parse(line_no, format!("unknown node {name}")))
                    };
                    edges.push((line_no, lookup(a)?, lookup(b)?));
                }
            }
        }
        let mut network = Network::new(labels, groups)?;
        for (line_no, a, b) in edges {
            if a == b {
                return Err(Error::parse(line_no, "self-loop"));
            }
            if !network.add_edge(a, b)? {
                return Err(Error::parse(line_no, "duplicate edge"));
            }
        }
        Ok(network)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_file_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Network::from_file_string(&read_to_string(path)?)
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("n{j}")).collect()
}

/// Grouped preferential-attachment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub nodes: usize,
    pub groups: usize,
    /// Same-group weight multiplier `eta * (G - 1)`.
    pub eta_times_gminus1: f64,
    /// Links attached per arriving node.
    pub m: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nodes: 201,
            groups: 1,
            eta_times_gminus1: 0.0,
            m: 2,
            seed: 0,
        }
    }
}

impl GenConfig {
    /// Reads a TOML table; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: GenConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Sets the same-group multiplier from the contrast `eta`.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta_times_gminus1 = eta * self.groups.saturating_sub(1) as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups < 1 {
            return Err(Error::InvalidConfig("group count must be at least 1".into()));
        }
        if self.nodes < self.groups {
            return Err(Error::InvalidConfig(format!(
                "node count {} is smaller than group count {}",
                self.nodes, self.groups
            )));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.eta_times_gminus1 >= 0.0 && self.eta_times_gminus1.is_finite()) {
            return Err(Error::InvalidConfig("eta * (G - 1) must be non-negative".into()));
        }
        Ok(())
    }
}

/// Uniformly random labelled tree on `g` nodes, from a random Prüfer sequence.
fn random_tree(g: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    match g {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let code: Vec<usize> = (0..g - 2).map(|_| rng.random_range(0..g)).collect();
    let mut degree = vec![1usize; g];
    for &x in &code {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(g - 1);
    for &x in &code {
        let leaf = (0..g).find(|&j| degree[j] == 1).expect("a leaf always exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..g).filter(|&j| degree[j] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Draws `count` distinct indices with probability proportional to `weights`,
/// sequentially without replacement. When every remaining weight is zero the
/// draw is uniform over the remaining indices.
fn weighted_without_replacement(
    weights: &mut [f64],
    count: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut taken = vec![false; weights.len()];
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut x = rng.random::<f64>() * total;
            let mut pick = None;
            for (j, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(j);
                    if x < w {
                        break;
                    }
                    x -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            let remaining: Vec<usize> = (0..weights.len()).filter(|&j| !taken[j]).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        taken[pick] = true;
        weights[pick] = 0.0;
        chosen.push(pick);
    }
    chosen
}

/// Grouped preferential attachment.
///
/// Seeds one node per group joined by a uniformly random spanning tree. Each
/// arriving node draws a group uniformly and links to `min(m, existing)`
/// distinct nodes chosen with weight `eta(G-1) * K` within its own group and
/// `K` across groups. With a single group the weight is plain `K`.
pub fn generate_ba_grouped(config: &GenConfig) -> Result<Network> {
    config.validate()?;
    let g = config.groups;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut groups: Vec<usize> = (0..g).collect();
    groups.resize(config.nodes, 0);
    let mut network = Network {
        labels: default_labels(config.nodes),
        groups: vec![0; config.nodes],
        adjacency: vec![Vec::new(); config.nodes],
    };
    for (a, b) in random_tree(g, &mut rng) {
        network.add_edge(a, b)?;
    }
    let mut weights = Vec::with_capacity(config.nodes);
    for t in g..config.nodes {
        let group = if g == 1 { 0 } else { rng.random_range(0..g) };
        groups[t] = group;
        weights.clear();
        weights.extend((0..t).map(|j| {
            let k = network.degree(j) as f64;
            if g > 1 && groups[j] == group {
                config.eta_times_gminus1 * k
            } else {
                k
            }
        }));
        let links = config.m.min(t);
        for target in weighted_without_replacement(&mut weights, links, &mut rng) {
            network.add_edge(t, target)?;
        }
    }
    network.groups = groups;
    Ok(network)
}

/// Erdős–Rényi graph: every unordered pair linked independently.
pub fn generate_er(n: usize, edge_probability: f64, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    er_draw(n, edge_probability, &mut rng)
}

/// Erdős–Rényi graph redrawn until connected, up to `max_attempts` draws.
pub fn generate_er_connected(
    n: usize,
    edge_probability: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_attempts {
        let network = er_draw(n, edge_probability, &mut rng)?;
        if network.is_connected() {
            return Ok(network);
        }
    }
    Err(Error::NotConnected {
        attempts: max_attempts,
    })
}

fn er_draw(n: usize, p: f64, rng: &mut impl Rng) -> Result<Network> {
    if n < 1 {
        return Err(Error::InvalidConfig("node count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("edge probability {p} outside [0, 1]")));
    }
    let mut network = Network::with_nodes(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                network.add_edge(a, b)?;
            }
        }
    }
    Ok(network)
}

/// Gini coefficient of the degree sequence,
/// `sum_jk |K_j - K_k| / (2 n^2 mean(K))`.
pub fn degree_gini(network: &Network) -> Result<f64> {
    let mut degrees: Vec<f64> = network.degrees().into_iter().map(|k| k as f64).collect();
    let n = degrees.len() as f64;
    let total: f64 = degrees.iter().sum();
    if total == 0.0 {
        return Err(Error::AllDegreesZero);
    }
    degrees.sort_by(f64::total_cmp);
    // Over ordered pairs, sum |x_j - x_k| = 2 * sum_i (2i - n + 1) x_(i).
    let weighted: f64 = degrees
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum();
    let mean = total / n;
    Ok(2.0 * weighted / (2.0 * n * n * mean))
}

/// Mean local clustering coefficient; nodes with degree below two count as 0.
pub fn avg_clustering(network: &Network) -> f64 {
    let n = network.n();
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for v in 0..n {
        let nbrs = network.neighbors(v);
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for (idx, &a) in nbrs.iter().enumerate() {
            links += nbrs[idx + 1..].iter().filter(|&&b| network.has_edge(a, b)).count();
        }
        sum += 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    sum / n as f64
}
