//! Record probability, log-likelihood and its analytic gradients.
//!
//! For record `i` and initiator `j`, the initiator product is
//! `P_ij = prod_k {1 - d_ik + (2 d_ik - 1) r_jk}` over all k (the k = j factor
//! is `r_jj = 1`). The record probability is `p_i = sum_j d_ij f_j P_ij` and
//! the log-likelihood is `sum_i log p_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::ObservationSet;
use crate::theta::Theta;

/// Lower bound applied to record probabilities in [`FloorMode::Clamp`].
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// How zero-probability records are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorMode {
    /// Clamp `p_i` to [`PROBABILITY_FLOOR`]. Clamped records carry no gradient.
    #[default]
    Clamp,
    /// A record with `p_i = 0` is an error.
    Strict,
}

impl FloorMode {
    fn apply(self, record: usize, p: f64) -> Result<f64> {
        match self {
            FloorMode::Clamp => Ok(p.max(PROBABILITY_FLOOR)),
            FloorMode::Strict if p > 0.0 => Ok(p),
            FloorMode::Strict => Err(Error::ZeroProbability { record }),
        }
    }

    /// Whether a record with raw probability `p` contributes to the gradient.
    fn differentiable(self, p: f64) -> bool {
        match self {
            FloorMode::Clamp => p >= PROBABILITY_FLOOR,
            FloorMode::Strict => p > 0.0,
        }
    }
}

/// `prod_k {1 - d_k + (2 d_k - 1) r_k}`, four independent accumulators.
#[inline]
pub(crate) fn initiator_product(d: &[f64], r: &[f64]) -> f64 {
    debug_assert_eq!(d.len(), r.len());
    let mut acc = [1.0f64; 4];
    let chunks = d.len() / 4;
    for c in 0..chunks {
        for lane in 0..4 {
            let k = 4 * c + lane;
            let dk = d[k];
            acc[lane] *= 1.0 - dk + (2.0 * dk - 1.0) * r[k];
        }
    }
    for k in 4 * chunks..d.len() {
        let dk = d[k];
        acc[0] *= 1.0 - dk + (2.0 * dk - 1.0) * r[k];
    }
    (acc[0] * acc[1]) * (acc[2] * acc[3])
}

fn check_dims(obs: &ObservationSet, theta: &Theta) -> Result<()> {
    if obs.n() != theta.n() {
        return Err(Error::Dimension {
            what: "theta node count",
            expected: obs.n(),
            actual: theta.n(),
        });
    }
    Ok(())
}

fn check_record(obs: &ObservationSet, i: usize) -> Result<()> {
    if i >= obs.d() {
        return Err(Error::RecordOutOfRange {
            index: i,
            len: obs.d(),
        });
    }
    Ok(())
}

/// `p(d_i | theta)` in the full-product form. Not floored.
pub fn record_probability(obs: &ObservationSet, i: usize, theta: &Theta) -> Result<f64> {
    check_dims(obs, theta)?;
    check_record(obs, i)?;
    let row = obs.row(i);
    Ok(obs
        .members(i)
        .iter()
        .map(|&j| theta.f(j) * initiator_product(row, theta.r_row(j)))
        .sum())
}

/// `p(d_i | theta)` with the product restricted to `k != j` and the per-factor
/// case split (`r_jk` when present, `1 - r_jk` when absent).
pub fn record_probability_pairwise(obs: &ObservationSet, i: usize, theta: &Theta) -> Result<f64> {
    check_dims(obs, theta)?;
    check_record(obs, i)?;
    let n = obs.n();
    let mut total = 0.0;
    for j in 0..n {
        if !obs.contains(i, j) {
            continue;
        }
        let mut product = theta.f(j);
        for k in (0..n).filter(|&k| k != j) {
            product *= if obs.contains(i, k) {
                theta.r(j, k)
            } else {
                1.0 - theta.r(j, k)
            };
        }
        total += product;
    }
    Ok(total)
}

/// Per-record probabilities and initiator products at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    floor: FloorMode,
    records: Vec<usize>,
    probabilities: Vec<f64>,
    offsets: Vec<usize>,
    products: Vec<f64>,
    log_likelihood: f64,
}

impl Evaluation {
    /// Evaluates every record.
    pub fn new(obs: &ObservationSet, theta: &Theta, floor: FloorMode) -> Result<Self> {
        let all: Vec<usize> = (0..obs.d()).collect();
        Self::for_records(obs, theta, floor, &all)
    }

    /// Evaluates a subset of records (sums over the empty subset are zero).
    pub fn for_records(
        obs: &ObservationSet,
        theta: &Theta,
        floor: FloorMode,
        records: &[usize],
    ) -> Result<Self> {
        check_dims(obs, theta)?;
        let mut probabilities = Vec::with_capacity(records.len());
        let mut offsets = Vec::with_capacity(records.len() + 1);
        let mut products = Vec::new();
        let mut log_likelihood = 0.0;
        offsets.push(0);
        for &i in records {
            check_record(obs, i)?;
            let row = obs.row(i);
            let mut p = 0.0;
            for &j in obs.members(i) {
                let product = initiator_product(row, theta.r_row(j));
                products.push(product);
                p += theta.f(j) * product;
            }
            offsets.push(products.len());
            log_likelihood += floor.apply(i, p)?.ln();
            probabilities.push(p);
        }
        Ok(Evaluation {
            floor,
            records: records.to_vec(),
            probabilities,
            offsets,
            products,
            log_likelihood,
        })
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Raw (unfloored) probability of the `pos`-th evaluated record.
    pub fn probability(&self, pos: usize) -> f64 {
        self.probabilities[pos]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `dL/df_n = sum_i d_in P_in / p_i`.
    pub fn grad_f(&self, obs: &ObservationSet) -> Vec<f64> {
        let mut grad = vec![0.0; obs.n()];
        for (pos, &i) in self.records.iter().enumerate() {
            let p = self.probabilities[pos];
            if !self.floor.differentiable(p) {
                continue;
            }
            let products = &self.products[self.offsets[pos]..self.offsets[pos + 1]];
            for (&n, &product) in obs.members(i).iter().zip(products) {
                grad[n] += product / p;
            }
        }
        grad
    }

    /// `dL/dr_nm = sum_i f_n d_in (2 d_im - 1) prod_{k != m} q_{i|nk} / p_i`,
    /// row-major, diagonal zero.
    pub fn grad_r(&self, obs: &ObservationSet, theta: &Theta) -> Vec<f64> {
        let n = obs.n();
        let mut grad = vec![0.0; n * n];
        let mut factors = vec![0.0; n];
        let mut leave_one_out = vec![0.0; n];
        for (pos, &i) in self.records.iter().enumerate() {
            let p = self.probabilities[pos];
            if !self.floor.differentiable(p) {
                continue;
            }
            let row = obs.row(i);
            for &src in obs.members(i) {
                let f = theta.f(src);
                if f == 0.0 {
                    continue;
                }
                let weight = f / p;
                let r_row = theta.r_row(src);
                for k in 0..n {
                    let dk = row[k];
                    factors[k] = 1.0 - dk + (2.0 * dk - 1.0) * r_row[k];
                }
                let mut acc = 1.0;
                for k in 0..n {
                    leave_one_out[k] = acc;
                    acc *= factors[k];
                }
                acc = 1.0;
                for k in (0..n).rev() {
                    leave_one_out[k] *= acc;
                    acc *= factors[k];
                }
                let g_row = &mut grad[src * n..(src + 1) * n];
                for m in 0..n {
                    g_row[m] += weight * (2.0 * row[m] - 1.0) * leave_one_out[m];
                }
            }
        }
        for j in 0..n {
            grad[j * n + j] = 0.0;
        }
        grad
    }
}

/// `L(theta) = sum_i log p(d_i | theta)`.
pub fn log_likelihood(obs: &ObservationSet, theta: &Theta, floor: FloorMode) -> Result<f64> {
    Ok(Evaluation::new(obs, theta, floor)?.log_likelihood())
}

/// Analytic `dL/dr` (row-major N x N, diagonal zero).
pub fn grad_r(obs: &ObservationSet, theta: &Theta, floor: FloorMode) -> Result<Vec<f64>> {
    Ok(Evaluation::new(obs, theta, floor)?.grad_r(obs, theta))
}

/// Analytic `dL/df`.
pub fn grad_f(obs: &ObservationSet, theta: &Theta, floor: FloorMode) -> Result<Vec<f64>> {
    Ok(Evaluation::new(obs, theta, floor)?.grad_f(obs))
}
