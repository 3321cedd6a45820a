//! Maximum-likelihood fitting of [`Theta`] by projected gradient ascent, with
//! an optional simulated-annealing search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Evaluation, FloorMode};
use crate::observation::ObservationSet;
use crate::theta::{project_constraints, Theta};

/// Convergence needs this many consecutive iterations with `|dL| < tolerance`.
pub const CONVERGENCE_WINDOW: usize = 3;

/// Halvings attempted per block and iteration before giving up on a move.
const MAX_BACKTRACKS: usize = 40;

/// Annealing stops early once the best likelihood has not improved by more
/// than the tolerance for this many sweeps.
const ANNEAL_PATIENCE: usize = 200;

/// Refinement passes of the ownership initialization.
const OWNERSHIP_ROUNDS: usize = 50;

const INIT_R_MIN: f64 = 0.05;
const INIT_R_MAX: f64 = 0.95;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Conditional co-occurrence frequencies for `r`, appearance shares for `f`.
    Cooccurrence,
    /// `r = 0.5` off the diagonal, `f = 1/N`.
    Uniform,
    /// Each node adopts the record that best fits as its own closed
    /// neighbourhood; `r` starts high on that record's members and low
    /// elsewhere, `f` is flat over observed nodes.
    #[default]
    Ownership,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    pub enabled: bool,
    pub initial_temperature: f64,
    /// Geometric factor applied to the temperature after every sweep.
    pub cooling_rate: f64,
    /// Standard deviation of the Gaussian proposal per coordinate.
    pub proposal_scale: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            enabled: false,
            initial_temperature: 1.0,
            cooling_rate: 0.995,
            proposal_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub step_size: f64,
    pub backtrack_factor: f64,
    /// Multiplier applied to a block's step after an accepted move.
    pub step_growth: f64,
    pub tolerance: f64,
    pub floor_mode: FloorMode,
    pub init_strategy: InitStrategy,
    pub annealing: AnnealConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 5000,
            step_size: 0.05,
            backtrack_factor: 0.5,
            step_growth: 1.5,
            tolerance: 1e-7,
            floor_mode: FloorMode::Clamp,
            init_strategy: InitStrategy::default(),
            annealing: AnnealConfig::default(),
            seed: 0,
        }
    }
}

impl FitConfig {
    /// Reads a TOML table; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: FitConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.step_growth >= 1.0 && self.step_growth.is_finite()) {
            return bad("step_growth must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        let a = &self.annealing;
        if a.enabled {
            if !(a.initial_temperature >= 0.0 && a.initial_temperature.is_finite()) {
                return bad("initial_temperature must be non-negative");
            }
            if !(a.cooling_rate > 0.0 && a.cooling_rate <= 1.0) {
                return bad("cooling_rate must lie in (0, 1]");
            }
            if !(a.proposal_scale > 0.0 && a.proposal_scale.is_finite()) {
                return bad("proposal_scale must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub final_log_likelihood: f64,
    pub iterations_used: usize,
    /// `L` at the starting point followed by `L` after every iteration (sweep).
    pub likelihood_trace: Vec<f64>,
    pub converged: bool,
}

impl FitResult {
    /// Two-column CSV `iteration,L`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,L\n");
        for (it, l) in self.likelihood_trace.iter().enumerate() {
            out.push_str(&format!("{it},{}\n", crate::fmt::sig12(*l)));
        }
        out
    }
}

/// Starting parameters for the optimizer.
pub fn init_theta(obs: &ObservationSet, strategy: InitStrategy) -> Theta {
    let n = obs.n();
    match strategy {
        InitStrategy::Uniform => Theta::uniform(n),
        InitStrategy::Cooccurrence => init_cooccurrence(obs),
        InitStrategy::Ownership => init_ownership(obs),
    }
}

/// `co[a * n + b]` counts the records containing both `a` and `b`.
fn cooccurrence_counts(obs: &ObservationSet) -> Vec<usize> {
    let n = obs.n();
    let mut co = vec![0usize; n * n];
    for i in 0..obs.d() {
        let members = obs.members(i);
        for &a in members {
            for &b in members {
                co[a * n + b] += 1;
            }
        }
    }
    co
}

/// Appearance-based `f` with unobserved nodes floored at `1/(10N)`.
fn floored_shares(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let floor = 1.0 / (10.0 * n as f64);
    let mut f: Vec<f64> = weights.iter().map(|&w| (w / total).max(floor)).collect();
    let sum: f64 = f.iter().sum();
    for v in f.iter_mut() {
        *v /= sum;
    }
    f
}

fn init_cooccurrence(obs: &ObservationSet) -> Theta {
    let n = obs.n();
    let counts = obs.node_counts();
    let co = cooccurrence_counts(obs);
    let mut r = vec![0.5; n * n];
    for j in 0..n {
        if counts[j] > 0 {
            for k in 0..n {
                r[j * n + k] =
                    (co[j * n + k] as f64 / counts[j] as f64).clamp(INIT_R_MIN, INIT_R_MAX);
            }
        }
        r[j * n + j] = 1.0;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let f = floored_shares(&weights);
    Theta::new(r, f).expect("initial parameters are feasible by construction")
}

/// In a record that node `j` initiated, every other member reached `j`
/// directly, so (with symmetric contact) `j` also shows up in that member's
/// own record: the pair co-occurs at least twice. Node `j` first adopts the
/// record with the largest share of such members, preferring a record whose
/// size matches the number of records `j` appears in. A local search then
/// reassigns and swaps adopted records to minimise the number of pairs where
/// `k` is in `j`'s record but `j` is not in `k`'s, plus the number of records
/// adopted more than once, with the prior breaking ties.
fn init_ownership(obs: &ObservationSet) -> Theta {
    let n = obs.n();
    let counts = obs.node_counts();
    let co = cooccurrence_counts(obs);
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..obs.d() {
        for &j in obs.members(i) {
            containing[j].push(i);
        }
    }
    // With symmetric contact the record sizes seen by j match the appearance
    // counts of the members of j's own record.
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    let sizes_seen: Vec<Vec<usize>> = containing
        .iter()
        .map(|rs| sorted(rs.iter().map(|&i| obs.members(i).len()).collect()))
        .collect();
    let member_counts: Vec<Vec<usize>> = (0..obs.d())
        .map(|i| sorted(obs.members(i).iter().map(|&k| counts[k]).collect()))
        .collect();
    let profile_gap = |a: &[usize], b: &[usize]| {
        let common: usize = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum();
        let tail: usize = a.iter().skip(b.len()).chain(b.iter().skip(a.len())).sum();
        common + tail
    };
    // Lower is better: any shortfall in share outweighs every size mismatch.
    let prior = |j: usize, i: usize| {
        let members = obs.members(i);
        let others = members.len() - 1;
        let paired = members
            .iter()
            .filter(|&&k| k != j && co[j * n + k] >= 2)
            .count();
        let share = if others == 0 { 1.0 } else { paired as f64 / others as f64 };
        let mismatch = members.len().abs_diff(counts[j]) + profile_gap(&sizes_seen[j], &member_counts[i]);
        (1.0 - share) * (n * n + 1) as f64 + mismatch as f64
    };

    let mut own: Vec<Option<usize>> = (0..n)
        .map(|j| {
            let mut best: Option<(usize, f64)> = None;
            for &i in &containing[j] {
                let score = prior(j, i);
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((i, score));
                }
            }
            best.map(|(i, _)| i)
        })
        .collect();

    // adopted[j * n + k]: k is in the record node j adopted.
    let mut adopted = vec![false; n * n];
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); obs.d()];
    for (j, choice) in own.iter().enumerate() {
        if let Some(i) = *choice {
            for &k in obs.members(i) {
                adopted[j * n + k] = true;
            }
            owners[i].push(j);
        }
    }
    // Change in (asymmetric pairs, prior) if node j moves from record a to b.
    let delta = |adopted: &[bool], j: usize, a: usize, b: usize| {
        let mut pairs = 0i64;
        let mut visit = |k: usize, before: bool, after: bool| {
            if k != j && before != after {
                let back = adopted[k * n + j];
                pairs += i64::from(after != back) - i64::from(before != back);
            }
        };
        for &k in obs.members(a) {
            visit(k, true, obs.contains(b, k));
        }
        for &k in obs.members(b) {
            if !obs.contains(a, k) {
                visit(k, false, true);
            }
        }
        (pairs, prior(j, b) - prior(j, a))
    };
    let apply = |adopted: &mut [bool], j: usize, a: usize, b: usize| {
        for &k in obs.members(a) {
            adopted[j * n + k] = false;
        }
        for &k in obs.members(b) {
            adopted[j * n + k] = true;
        }
    };
    let improves = |(pairs, prior): (i64, f64)| pairs < 0 || (pairs == 0 && prior < -1e-12);

    for _ in 0..OWNERSHIP_ROUNDS {
        let mut changed = false;
        for j in 0..n {
            for &b in &containing[j] {
                let Some(a) = own[j] else { break };
                if a == b {
                    continue;
                }
                let (pairs, prior_change) = delta(&adopted, j, a, b);
                let shared = i64::from(!owners[b].is_empty()) - i64::from(owners[a].len() > 1);
                if improves((pairs + shared, prior_change)) {
                    apply(&mut adopted, j, a, b);
                    owners[a].retain(|&x| x != j);
                    owners[b].push(j);
                    own[j] = Some(b);
                    changed = true;
                    continue;
                }
                // Swap with a current owner of b that also belongs to a.
                let partners: Vec<usize> = owners[b]
                    .iter()
                    .copied()
                    .filter(|&m| m != j && obs.contains(a, m))
                    .collect();
                for m in partners {
                    let first = delta(&adopted, j, a, b);
                    apply(&mut adopted, j, a, b);
                    let second = delta(&adopted, m, b, a);
                    if improves((first.0 + second.0, first.1 + second.1)) {
                        apply(&mut adopted, m, b, a);
                        owners[a].retain(|&x| x != j);
                        owners[a].push(m);
                        owners[b].retain(|&x| x != m);
                        owners[b].push(j);
                        own[j] = Some(b);
                        own[m] = Some(a);
                        changed = true;
                        break;
                    }
                    apply(&mut adopted, j, b, a);
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut r = vec![0.5; n * n];
    for j in 0..n {
        if let Some(i) = own[j] {
            let row = &mut r[j * n..(j + 1) * n];
            row.fill(INIT_R_MIN);
            for &k in obs.members(i) {
                row[k] = INIT_R_MAX;
            }
        }
        r[j * n + j] = 1.0;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| f64::from(u8::from(c > 0))).collect();
    let f = floored_shares(&weights);
    Theta::new(r, f).expect("initial parameters are feasible by construction")
}

/// Evaluates a candidate, mapping a zero-probability record to `None` so the
/// caller can reject the move instead of failing.
fn try_evaluate(obs: &ObservationSet, theta: &Theta, floor: FloorMode) -> Result<Option<Evaluation>> {
    match Evaluation::new(obs, theta, floor) {
        Ok(e) if e.log_likelihood().is_finite() => Ok(Some(e)),
        Ok(_) | Err(Error::ZeroProbability { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn starting_point(
    obs: &ObservationSet,
    config: &FitConfig,
    theta: Theta,
) -> Result<(Theta, Evaluation)> {
    config.validate()?;
    if theta.n() != obs.n() {
        return Err(Error::Dimension {
            what: "starting parameters",
            expected: obs.n(),
            actual: theta.n(),
        });
    }
    let eval = Evaluation::new(obs, &theta, config.floor_mode)?;
    if !eval.log_likelihood().is_finite() {
        return Err(Error::InvalidConfig(
            "log-likelihood is not finite at the starting point".into(),
        ));
    }
    Ok((theta, eval))
}

/// Finds `argmax L(theta)`.
///
/// Each iteration moves the `r` block and then the `f` block along their
/// gradients, projecting back onto the feasible set. A block move that would
/// lower `L` is retracted and retried with the step scaled by
/// `backtrack_factor`; an accepted move scales that block's step by
/// `step_growth`. Stops after [`CONVERGENCE_WINDOW`] consecutive iterations
/// with `|dL| < tolerance` or at `max_iterations`.
///
/// Delegates to [`anneal`] when annealing is enabled.
pub fn fit(obs: &ObservationSet, config: &FitConfig) -> Result<FitResult> {
    fit_from(obs, config, init_theta(obs, config.init_strategy))
}

/// [`fit`] from a caller-supplied starting point instead of `init_strategy`.
pub fn fit_from(obs: &ObservationSet, config: &FitConfig, start: Theta) -> Result<FitResult> {
    if config.annealing.enabled {
        return anneal_from(obs, config, start);
    }
    let (mut theta, mut eval) = starting_point(obs, config, start)?;
    let floor = config.floor_mode;
    let mut trace = vec![eval.log_likelihood()];
    let mut step_r = config.step_size;
    let mut step_f = config.step_size;
    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let before = eval.log_likelihood();

        let g_r = eval.grad_r(obs, &theta);
        if g_r.iter().any(|&g| g != 0.0) {
            let (r0, f0) = (theta.r_matrix(), theta.f_vector());
            if let Some((t, e)) = line_search(obs, floor, &eval, config, &mut step_r, |s| {
                let r = r0.iter().zip(&g_r).map(|(&x, &g)| x + s * g).collect();
                project_constraints(r, f0.to_vec())
            })? {
                theta = t;
                eval = e;
            }
        }

        let g_f = eval.grad_f(obs);
        if g_f.iter().any(|&g| g != 0.0) {
            let (r0, f0) = (theta.r_matrix(), theta.f_vector());
            if let Some((t, e)) = line_search(obs, floor, &eval, config, &mut step_f, |s| {
                let f = f0.iter().zip(&g_f).map(|(&x, &g)| x + s * g).collect();
                project_constraints(r0.to_vec(), f)
            })? {
                theta = t;
                eval = e;
            }
        }

        let after = eval.log_likelihood();
        trace.push(after);
        if (after - before).abs() < config.tolerance {
            quiet += 1;
            if quiet >= CONVERGENCE_WINDOW {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    Ok(FitResult {
        final_log_likelihood: eval.log_likelihood(),
        theta_hat: theta,
        iterations_used: iterations,
        likelihood_trace: trace,
        converged,
    })
}

/// Backtracking search along one block. Returns the accepted point, if any.
fn line_search(
    obs: &ObservationSet,
    floor: FloorMode,
    current: &Evaluation,
    config: &FitConfig,
    step: &mut f64,
    candidate: impl Fn(f64) -> Theta,
) -> Result<Option<(Theta, Evaluation)>> {
    for _ in 0..MAX_BACKTRACKS {
        let theta = candidate(*step);
        if let Some(e) = try_evaluate(obs, &theta, floor)? {
            if e.log_likelihood() >= current.log_likelihood() {
                *step *= config.step_growth;
                return Ok(Some((theta, e)));
            }
        }
        *step *= config.backtrack_factor;
    }
    Ok(None)
}

/// Simulated annealing over `L(theta)`.
///
/// A sweep makes N proposals. Each proposal picks a node `j` uniformly,
/// perturbs row `r_j.` and `f_j` with independent Gaussian noise, projects,
/// and applies the Metropolis rule at the current temperature. The
/// temperature is multiplied by `cooling_rate` after each sweep. The trace
/// holds the best likelihood seen so far.
pub fn anneal(obs: &ObservationSet, config: &FitConfig) -> Result<FitResult> {
    anneal_from(obs, config, init_theta(obs, config.init_strategy))
}

/// [`anneal`] from a caller-supplied starting point.
pub fn anneal_from(obs: &ObservationSet, config: &FitConfig, start: Theta) -> Result<FitResult> {
    if !config.annealing.enabled {
        return Err(Error::InvalidConfig("annealing is not enabled".into()));
    }
    let (mut theta, eval) = starting_point(obs, config, start)?;
    let floor = config.floor_mode;
    let settings = &config.annealing;
    let n = obs.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = eval.log_likelihood();
    let mut best = (theta.clone(), current);
    let mut trace = vec![current];
    let mut temperature = settings.initial_temperature;
    let mut stale = 0;
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < config.max_iterations {
        sweeps += 1;
        let best_before = best.1;
        for _ in 0..n {
            let j = rng.random_range(0..n);
            let (mut r, mut f) = (theta.r_matrix().to_vec(), theta.f_vector().to_vec());
            for k in (0..n).filter(|&k| k != j) {
                let z: f64 = rng.sample(StandardNormal);
                r[j * n + k] += settings.proposal_scale * z;
            }
            let z: f64 = rng.sample(StandardNormal);
            f[j] += settings.proposal_scale * z;
            let u: f64 = rng.random();
            let candidate = project_constraints(r, f);
            let Some(e) = try_evaluate(obs, &candidate, floor)? else {
                continue;
            };
            let delta = e.log_likelihood() - current;
            let accept = delta >= 0.0 || (temperature > 0.0 && u < (delta / temperature).exp());
            if accept {
                theta = candidate;
                current = e.log_likelihood();
                if current > best.1 {
                    best = (theta.clone(), current);
                }
            }
        }
        temperature *= settings.cooling_rate;
        trace.push(best.1);
        if best.1 - best_before < config.tolerance {
            stale += 1;
            if stale >= ANNEAL_PATIENCE {
                converged = true;
                break;
            }
        } else {
            stale = 0;
        }
    }

    Ok(FitResult {
        theta_hat: best.0,
        final_log_likelihood: best.1,
        iterations_used: sweeps,
        likelihood_trace: trace,
        converged,
    })
}
