//! Outcome enumeration for `p(d_i | theta)`.
//!
//! Every initiator `j` and every subset of responders among the other nodes
//! is an outcome with probability `f_j * prod Bernoulli(r_jk)`. The record
//! probability is the total mass of outcomes whose realized node set equals
//! the record.

use crate::error::{Error, Result};
use crate::observation::ObservationSet;
use crate::theta::Theta;

/// Largest N accepted by [`brute_force_record_probability`].
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

pub fn brute_force_record_probability(theta: &Theta, i: usize, obs: &ObservationSet) -> Result<f64> {
    let n = theta.n();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooManyNodes {
            n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    if obs.n() != n {
        return Err(Error::Dimension {
            what: "theta node count",
            expected: obs.n(),
            actual: n,
        });
    }
    if i >= obs.d() {
        return Err(Error::RecordOutOfRange {
            index: i,
            len: obs.d(),
        });
    }
    let target: u32 = obs.members(i).iter().map(|&j| 1u32 << j).sum();
    let mut total = 0.0;
    for initiator in 0..n {
        let others: Vec<usize> = (0..n).filter(|&k| k != initiator).collect();
        for subset in 0u32..(1u32 << others.len()) {
            let mut realized = 1u32 << initiator;
            let mut mass = theta.f(initiator);
            for (bit, &k) in others.iter().enumerate() {
                let r = theta.r(initiator, k);
                if subset & (1 << bit) != 0 {
                    realized |= 1 << k;
                    mass *= r;
                } else {
                    mass *= 1.0 - r;
                }
            }
            if realized == target {
                total += mass;
            }
        }
    }
    Ok(total)
}
