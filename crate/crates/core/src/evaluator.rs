//! Precision, recall and F measure along a retrieval order, with the oracle
//! ("theoretical limit") and random-retrieval baselines.

use crate::detector::Ranking;
use crate::error::{Error, Result};
use crate::fmt::sig12;

/// Precision, recall and F at one retrieved count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    fn from_counts(hits: usize, dr: usize, dt: usize) -> Self {
        // 2h / (dr + dt) is the harmonic mean of h/dr and h/dt, and equals
        // both exactly when dr = dt.
        Prf {
            precision: hits as f64 / dr as f64,
            recall: hits as f64 / dt as f64,
            f: (2 * hits) as f64 / (dr + dt) as f64,
        }
    }
}

/// Harmonic mean, defined as 0 when both inputs are 0.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// One row of an [`EvalCurve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub dr: usize,
    pub measured: Prf,
    pub limit: Prf,
    pub random: Prf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurve {
    pub d: usize,
    pub d_t: usize,
    /// Row `k` holds `D_r = k + 1`.
    pub rows: Vec<CurveRow>,
}

impl EvalCurve {
    pub fn at(&self, dr: usize) -> &CurveRow {
        &self.rows[dr - 1]
    }

    /// `F(D_t)`.
    pub fn f_at_dt(&self) -> f64 {
        self.at(self.d_t).measured.f
    }

    /// Columns `Dr,Dr_over_D,p,r,F,p_limit,r_limit,F_limit,p_rand,r_rand,F_rand`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("Dr,Dr_over_D,p,r,F,p_limit,r_limit,F_limit,p_rand,r_rand,F_rand\n");
        for row in &self.rows {
            let cells = [
                row.dr as f64 / self.d as f64,
                row.measured.precision,
                row.measured.recall,
                row.measured.f,
                row.limit.precision,
                row.limit.recall,
                row.limit.f,
                row.random.precision,
                row.random.recall,
                row.random.f,
            ];
            out.push_str(&row.dr.to_string());
            for c in cells {
                out.push(',');
                out.push_str(&sig12(c));
            }
            out.push('\n');
        }
        out
    }
}

fn check_dt(d: usize, dt: usize) -> Result<()> {
    if dt == 0 {
        return Err(Error::NoRelevantRecords);
    }
    if dt > d {
        return Err(Error::InvalidConfig(format!("D_t = {dt} exceeds D = {d}")));
    }
    Ok(())
}

/// Precision, recall and F after retrieving the first `dr` records of `ranking`.
pub fn precision_recall_f(ranking: &Ranking, relevance: &[bool], dr: usize) -> Result<Prf> {
    let along = ranking.relevance_along(relevance)?;
    let d = along.len();
    let dt = along.iter().filter(|&&r| r).count();
    check_dt(d, dt)?;
    if dr < 1 || dr > d {
        return Err(Error::RetrievedOutOfRange { dr, d });
    }
    let hits = along[..dr].iter().filter(|&&r| r).count();
    Ok(Prf::from_counts(hits, dr, dt))
}

/// Baselines at `dr`: (theoretical limit, random-retrieval expectation).
pub fn baseline_at(d: usize, dt: usize, dr: usize) -> (Prf, Prf) {
    let limit = Prf::from_counts(dt.min(dr), dr, dt);
    let p = dt as f64 / d as f64;
    let r = dr as f64 / d as f64;
    let random = Prf {
        precision: p,
        recall: r,
        f: f_measure(p, r),
    };
    (limit, random)
}

/// Baseline columns for every `D_r` in `1..=D`.
pub fn baseline_curves(d: usize, dt: usize) -> Result<Vec<(Prf, Prf)>> {
    check_dt(d, dt)?;
    Ok((1..=d).map(|dr| baseline_at(d, dt, dr)).collect())
}

/// Measured curve at every `D_r` with baselines attached.
pub fn curves(ranking: &Ranking, relevance: &[bool]) -> Result<EvalCurve> {
    let along = ranking.relevance_along(relevance)?;
    curve_from_flags(&along)
}

/// Curve from relevance flags already in retrieval order.
pub fn curve_from_flags(along: &[bool]) -> Result<EvalCurve> {
    let d = along.len();
    let dt = along.iter().filter(|&&r| r).count();
    check_dt(d, dt)?;
    let mut hits = 0;
    let mut rows = Vec::with_capacity(d);
    for (k, &relevant) in along.iter().enumerate() {
        hits += usize::from(relevant);
        let dr = k + 1;
        let (limit, random) = baseline_at(d, dt, dr);
        rows.push(CurveRow {
            dr,
            measured: Prf::from_counts(hits, dr, dt),
            limit,
            random,
        });
    }
    Ok(EvalCurve { d, d_t: dt, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking_with_flags(flags: &[bool]) -> (Ranking, Vec<bool>) {
        // Descending scores keep record order.
        let scores = (0..flags.len()).rev().map(|s| s as f64 + 1.0).collect();
        (Ranking::from_scores(scores), flags.to_vec())
    }

    #[test]
    fn perfect_retrieval() {
        let (ranking, rel) = ranking_with_flags(&[true, true, false, false]);
        let prf = precision_recall_f(&ranking, &rel, 2).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f), (1.0, 1.0, 1.0));
        let curve = curves(&ranking, &rel).unwrap();
        for row in &curve.rows {
            assert_eq!(row.measured, row.limit);
        }
    }

    #[test]
    fn alternating_relevance() {
        let (ranking, rel) = ranking_with_flags(&[true, false, true, false]);
        let prf = precision_recall_f(&ranking, &rel, 2).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f), (0.5, 0.5, 0.5));
    }

    #[test]
    fn no_relevant_records_is_an_error() {
        let (ranking, rel) = ranking_with_flags(&[false, false]);
        assert!(matches!(
            precision_recall_f(&ranking, &rel, 1),
            Err(Error::NoRelevantRecords)
        ));
        let (ranking, rel) = ranking_with_flags(&[true, false]);
        assert!(precision_recall_f(&ranking, &rel, 0).is_err());
        assert!(precision_recall_f(&ranking, &rel, 3).is_err());
    }

    #[test]
    fn zero_hits_give_zero_f() {
        let (ranking, rel) = ranking_with_flags(&[false, true]);
        assert_eq!(precision_recall_f(&ranking, &rel, 1).unwrap().f, 0.0);
    }

    #[test]
    fn baseline_example() {
        let (limit, random) = baseline_at(10, 2, 2);
        assert_eq!((limit.precision, limit.recall), (1.0, 1.0));
        assert!((random.precision - 0.2).abs() < 1e-15);
        assert!((random.recall - 0.2).abs() < 1e-15);
        let (limit, random) = baseline_at(10, 2, 10);
        assert_eq!(limit.recall, 1.0);
        assert_eq!(random.recall, 1.0);
        let (limit, _) = baseline_at(10, 2, 5);
        assert_eq!(limit.precision, 2.0 / 5.0);
    }

    #[test]
    fn csv_layout() {
        let (ranking, rel) = ranking_with_flags(&[true, false]);
        let csv = curves(&ranking, &rel).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Dr,Dr_over_D,p,r,F,p_limit,r_limit,F_limit,p_rand,r_rand,F_rand"
        );
        assert_eq!(lines.next().unwrap(), "1,0.5,1,1,1,1,1,1,0.5,0.5,0.5");
    }
}
