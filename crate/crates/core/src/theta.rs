//! Model parameters: transmission probabilities `r_jk` and initiator
//! probabilities `f_j`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_string, Error, Result};

/// Allowed deviation of `sum(f)` from one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Transmission matrix (row-major N x N, diagonal pinned to one) and
/// initiator distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    n: usize,
    r: Vec<f64>,
    f: Vec<f64>,
}

impl Theta {
    /// Validates and wraps raw parameters. `r` is row-major with `f.len()^2` entries.
    pub fn new(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let n = f.len();
        if n == 0 {
            return Err(Error::InvalidTheta("no nodes".into()));
        }
        if r.len() != n * n {
            return Err(Error::Dimension {
                what: "transmission matrix",
                expected: n * n,
                actual: r.len(),
            });
        }
        let theta = Theta { n, r, f };
        theta.validate()?;
        Ok(theta)
    }

    /// Wraps parameters without checking invariants.
    #[cfg(test)]
    pub(crate) fn unchecked(r: Vec<f64>, f: Vec<f64>) -> Self {
        Theta { n: f.len(), r, f }
    }

    /// `r_jk = 0.5` off the diagonal, `f_j = 1/N`.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform theta needs at least one node");
        let mut r = vec![0.5; n * n];
        for j in 0..n {
            r[j * n + j] = 1.0;
        }
        Theta {
            n,
            r,
            f: vec![1.0 / n as f64; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for j in 0..n {
            for k in 0..n {
                let v = self.r[j * n + k];
                if j == k {
                    if v != 1.0 {
                        return Err(Error::InvalidTheta(format!("r[{j}][{j}] = {v}, expected 1")));
                    }
                } else if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidTheta(format!("r[{j}][{k}] = {v} outside [0, 1]")));
                }
            }
        }
        let mut sum = 0.0;
        for (j, &v) in self.f.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidTheta(format!("f[{j}] = {v} is negative or not finite")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidTheta(format!("sum(f) = {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn r(&self, j: usize, k: usize) -> f64 {
        self.r[j * self.n + k]
    }

    #[inline]
    pub fn f(&self, j: usize) -> f64 {
        self.f[j]
    }

    /// Row `j` of the transmission matrix.
    #[inline]
    pub fn r_row(&self, j: usize) -> &[f64] {
        &self.r[j * self.n..(j + 1) * self.n]
    }

    /// Row-major transmission matrix.
    pub fn r_matrix(&self) -> &[f64] {
        &self.r
    }

    pub fn f_vector(&self) -> &[f64] {
        &self.f
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.r, self.f)
    }

    /// Same parameters with nodes relabelled: new node `j` is old node `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension {
                what: "node permutation",
                expected: self.n,
                actual: perm.len(),
            });
        }
        let n = self.n;
        let mut r = vec![0.0; n * n];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                r[a * n + b] = self.r(pa, pb);
            }
        }
        let f = perm.iter().map(|&p| self.f[p]).collect();
        Theta::new(r, f)
    }

    pub fn to_json(&self, labels: &[String]) -> Result<String> {
        if labels.len() != self.n {
            return Err(Error::Dimension {
                what: "theta labels",
                expected: self.n,
                actual: labels.len(),
            });
        }
        let doc = ThetaDocument {
            nodes: labels.to_vec(),
            r: self.r.chunks(self.n).map(|row| row.to_vec()).collect(),
            f: self.f.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a theta document, returning the node label order and parameters.
    pub fn from_json(text: &str) -> Result<(Vec<String>, Theta)> {
        let doc: ThetaDocument = serde_json::from_str(text)?;
        let n = doc.nodes.len();
        if doc.r.len() != n {
            return Err(Error::Dimension {
                what: "transmission matrix rows",
                expected: n,
                actual: doc.r.len(),
            });
        }
        let mut r = Vec::with_capacity(n * n);
        for row in &doc.r {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "transmission matrix row",
                    expected: n,
                    actual: row.len(),
                });
            }
            r.extend_from_slice(row);
        }
        if doc.f.len() != n {
            return Err(Error::Dimension {
                what: "initiator vector",
                expected: n,
                actual: doc.f.len(),
            });
        }
        Ok((doc.nodes, Theta::new(r, doc.f)?))
    }

    pub fn save(&self, path: &Path, labels: &[String]) -> Result<()> {
        write_string(path, &self.to_json(labels)?)
    }

    pub fn load(path: &Path) -> Result<(Vec<String>, Theta)> {
        Theta::from_json(&read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ThetaDocument {
    nodes: Vec<String>,
    r: Vec<Vec<f64>>,
    f: Vec<f64>,
}

/// Maps arbitrary candidate parameters onto the feasible set: `r` clipped to
/// `[0, 1]` with the diagonal reset to one, `f` projected onto the simplex.
/// Non-finite entries are treated as zero.
pub fn project_constraints(mut r: Vec<f64>, f: Vec<f64>) -> Theta {
    let n = f.len();
    assert!(n > 0, "projection needs at least one node");
    assert_eq!(r.len(), n * n, "transmission matrix must be N x N");
    for v in r.iter_mut() {
        *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    }
    for j in 0..n {
        r[j * n + j] = 1.0;
    }
    let f: Vec<f64> = f
        .into_iter()
        .map(|v| if v.is_finite() { v } else { 0.0 })
        .collect();
    Theta {
        n,
        r,
        f: project_simplex(&f),
    }
}

/// Euclidean projection onto `{x : x >= 0, sum(x) = 1}` (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    // Rounding can leave the sum a few ulps away from one.
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        for x in out.iter_mut() {
            *x /= sum;
        }
    }
    out
}
