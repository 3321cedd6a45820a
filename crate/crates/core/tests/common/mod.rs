#![allow(dead_code)]

use covert_core::{Network, ObservationSet, Theta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("v{j}")).collect()
}

/// `d` non-empty random records over `n` nodes.
pub fn random_observations(rng: &mut impl Rng, n: usize, d: usize) -> ObservationSet {
    let members = (0..d)
        .map(|_| loop {
            let row: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if !row.is_empty() {
                break row;
            }
        })
        .collect();
    ObservationSet::from_indices(labels(n), members).unwrap()
}

/// Off-diagonal `r` and unnormalised `f` weights drawn from `[lo, hi]`; `f`
/// is rescaled onto the simplex.
pub fn random_theta(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Theta {
    let mut r = vec![1.0; n * n];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                r[j * n + k] = rng.random_range(lo..=hi);
            }
        }
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let total: f64 = raw.iter().sum();
    Theta::new(r, raw.iter().map(|x| x / total).collect()).unwrap()
}

/// Uniform random labelled tree plus a few extra edges, always connected.
pub fn random_connected(rng: &mut impl Rng, n: usize, extra: usize) -> Network {
    let mut net = Network::with_nodes(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        net.add_edge(u, v).unwrap();
    }
    let mut added = 0;
    let mut tries = 0;
    while added < extra && tries < 100 * (extra + 1) {
        tries += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && net.add_edge(a, b).unwrap() {
            added += 1;
        }
    }
    net
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `r_jk` as the likelihood sees it when the record holds both `j` and `k`
/// or only `j`.
fn response(theta: &Theta, j: usize, k: usize, present: bool) -> f64 {
    let r = theta.r(j, k);
    if present {
        r
    } else {
        1.0 - r
    }
}

/// Record probability by summing over every initiator and every subset of
/// responders whose union with the initiator is the record.
pub fn enumerate_record_probability(theta: &Theta, record: &[usize]) -> f64 {
    let n = theta.n();
    assert!(n <= 12);
    let target: u32 = record.iter().map(|&v| 1u32 << v).sum();
    let mut total = 0.0;
    for initiator in 0..n {
        for outcome in 0u32..(1 << n) {
            if outcome & (1 << initiator) == 0 {
                continue;
            }
            if outcome != target {
                continue;
            }
            let mut prob = theta.f(initiator);
            for k in (0..n).filter(|&k| k != initiator) {
                prob *= response(theta, initiator, k, outcome & (1 << k) != 0);
            }
            total += prob;
        }
    }
    total
}

/// Log-likelihood with plain-`f64` parameters, no simplex check, written
/// directly from the product form.
pub fn raw_log_likelihood(obs: &ObservationSet, r: &[f64], f: &[f64]) -> f64 {
    let n = obs.n();
    (0..obs.d())
        .map(|i| {
            let mut p = 0.0;
            for j in obs.members(i).iter().copied() {
                let mut term = f[j];
                for k in (0..n).filter(|&k| k != j) {
                    let rjk = r[j * n + k];
                    term *= if obs.contains(i, k) { rjk } else { 1.0 - rjk };
                }
                p += term;
            }
            p.ln()
        })
        .sum()
}
