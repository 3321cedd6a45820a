//! Suspiciousness scores `s(d_i) = 1 / p(d_i | theta)` and the retrieval order.

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::likelihood::{record_probability, Evaluation, FloorMode, PROBABILITY_FLOOR};
use crate::observation::ObservationSet;
use crate::theta::Theta;

/// Records in decreasing order of suspiciousness.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// `order[rank]` is the record index retrieved at 0-based position `rank`.
    order: Vec<usize>,
    /// Suspiciousness per record index.
    scores: Vec<f64>,
    /// `-ln p` per record index (with the same floor as the scores).
    neg_log_p: Vec<f64>,
}

impl Ranking {
    /// Stable descending sort of `scores`; ties keep ascending record index.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let neg_log_p = scores.iter().map(|s| s.ln()).collect();
        Self::with_neg_log_p(scores, neg_log_p)
    }

    fn with_neg_log_p(scores: Vec<f64>, neg_log_p: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        Ranking {
            order,
            scores,
            neg_log_p,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn neg_log_p(&self) -> &[f64] {
        &self.neg_log_p
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Relevance flags (indexed by record) read along the retrieval order.
    pub fn relevance_along(&self, relevance: &[bool]) -> Result<Vec<bool>> {
        if relevance.len() != self.len() {
            return Err(Error::Dimension {
                what: "relevance flags",
                expected: self.len(),
                actual: relevance.len(),
            });
        }
        Ok(self.order.iter().map(|&i| relevance[i]).collect())
    }

    /// CSV with columns `rank,record_index,score,neg_log_p[,relevant]`.
    /// Ranks are 1-based.
    pub fn to_csv(&self, relevance: Option<&[bool]>) -> Result<String> {
        let flags = relevance.map(|r| self.relevance_along(r)).transpose()?;
        let mut out = String::from("rank,record_index,score,neg_log_p");
        if flags.is_some() {
            out.push_str(",relevant");
        }
        out.push('\n');
        for (rank, &i) in self.order.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}",
                rank + 1,
                i,
                sig12(self.scores[i]),
                sig12(self.neg_log_p[i])
            ));
            if let Some(flags) = &flags {
                out.push_str(if flags[rank] { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Parsed ranking CSV: records in retrieval order with optional relevance.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
    pub relevant: Option<Vec<bool>>,
}

/// Parses a ranking CSV written by [`Ranking::to_csv`].
pub fn parse_ranking_csv(text: &str) -> Result<RankingTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    let with_relevance = match columns.as_slice() {
        ["rank", "record_index", "score", "neg_log_p"] => false,
        ["rank", "record_index", "score", "neg_log_p", "relevant"] => true,
        _ => return Err(Error::parse(1, format!("unexpected header {header:?}"))),
    };
    let mut order = Vec::new();
    let mut scores = Vec::new();
    let mut relevant = Vec::new();
    for (lineno, line) in lines {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::parse(line_no, format!("expected {} fields", columns.len())));
        }
        let rank: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, "bad rank"))?;
        if rank != order.len() + 1 {
            return Err(Error::parse(line_no, format!("rank {rank} out of sequence")));
        }
        order.push(
            fields[1]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad record index"))?,
        );
        scores.push(
            fields[2]
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, "bad score"))?,
        );
        if with_relevance {
            relevant.push(match fields[4] {
                "1" => true,
                "0" => false,
                _ => return Err(Error::parse(line_no, "relevant must be 0 or 1")),
            });
        }
    }
    let mut seen = vec![false; order.len()];
    for &i in &order {
        if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::parse(0, "record indices are not a permutation"));
        }
    }
    Ok(RankingTable {
        order,
        scores,
        relevant: with_relevance.then_some(relevant),
    })
}

/// `1 / p(d_i | theta)` with the probability floored per `floor`.
pub fn suspiciousness(
    obs: &ObservationSet,
    i: usize,
    theta_hat: &Theta,
    floor: FloorMode,
) -> Result<f64> {
    let p = record_probability(obs, i, theta_hat)?;
    Ok(1.0 / floored(i, p, floor)?)
}

fn floored(i: usize, p: f64, floor: FloorMode) -> Result<f64> {
    match floor {
        FloorMode::Clamp => Ok(p.max(PROBABILITY_FLOOR)),
        FloorMode::Strict if p > 0.0 => Ok(p),
        FloorMode::Strict => Err(Error::ZeroProbability { record: i }),
    }
}

/// Ranks every record by suspiciousness under `theta_hat`.
pub fn rank_records(obs: &ObservationSet, theta_hat: &Theta, floor: FloorMode) -> Result<Ranking> {
    let eval = Evaluation::new(obs, theta_hat, floor)?;
    let mut scores = Vec::with_capacity(obs.d());
    let mut neg_log_p = Vec::with_capacity(obs.d());
    for (i, &p) in eval.probabilities().iter().enumerate() {
        let p = floored(i, p, floor)?;
        scores.push(1.0 / p);
        neg_log_p.push(-p.ln());
    }
    Ok(Ranking::with_neg_log_p(scores, neg_log_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn certain_record_scores_one() {
        let obs = ObservationSet::from_indices(vec!["A".into(), "B".into()], vec![vec![0, 1]])
            .unwrap();
        let theta = Theta::new(vec![1.0; 4], vec![0.5, 0.5]).unwrap();
        assert_eq!(suspiciousness(&obs, 0, &theta, FloorMode::Clamp).unwrap(), 1.0);
    }

    #[test]
    fn quarter_probability_scores_four() {
        let obs = ObservationSet::from_indices(
            vec!["n0".into(), "n1".into(), "n2".into()],
            vec![vec![0, 1]],
        )
        .unwrap();
        let r = vec![1.0, 0.5, 0.5, 0.5, 1.0, 0.0, 0.5, 0.0, 1.0];
        let theta = Theta::new(r, vec![1.0 / 3.0; 3]).unwrap();
        let s = suspiciousness(&obs, 0, &theta, FloorMode::Clamp).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
    }

    #[test]
    fn underflow_is_floored_or_rejected() {
        let obs =
            ObservationSet::from_indices(vec!["A".into(), "B".into()], vec![vec![0]]).unwrap();
        let theta = Theta::new(vec![1.0, 1.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        let s = suspiciousness(&obs, 0, &theta, FloorMode::Clamp).unwrap();
        assert_eq!(s, 1.0 / PROBABILITY_FLOOR);
        assert!(s.is_finite());
        assert!(suspiciousness(&obs, 0, &theta, FloorMode::Strict).is_err());
    }

    #[test]
    fn sorting_example() {
        let ranking = Ranking::from_scores(vec![0.5, 4.0, 2.0]);
        assert_eq!(ranking.order(), &[1, 2, 0]);
    }

    #[test]
    fn ties_keep_record_order() {
        let ranking = Ranking::from_scores(vec![3.0; 4]);
        assert_eq!(ranking.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn csv_round_trip() {
        let ranking = Ranking::from_scores(vec![0.5, 4.0, 2.0]);
        let csv = ranking.to_csv(Some(&[false, true, true])).unwrap();
        assert!(csv.starts_with("rank,record_index,score,neg_log_p,relevant\n1,1,4,"));
        let table = parse_ranking_csv(&csv).unwrap();
        assert_eq!(table.order, vec![1, 2, 0]);
        assert_eq!(table.relevant, Some(vec![true, true, false]));
        assert!(parse_ranking_csv("rank,record_index,score,neg_log_p\n1,0,1,0\n1,1,1,0\n").is_err());
        assert!(parse_ranking_csv("rank,record_index,score,neg_log_p\n1,0,1,0\n2,0,1,0\n").is_err());
    }

    #[test]
    fn duplicated_records_share_scores() {
        let obs = ObservationSet::from_indices(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0, 1], vec![2], vec![0, 1]],
        )
        .unwrap();
        let ranking = rank_records(&obs, &Theta::uniform(3), FloorMode::Clamp).unwrap();
        assert_eq!(ranking.scores()[0], ranking.scores()[2]);
    }

    proptest! {
        #[test]
        fn order_is_invariant_under_monotone_transforms(
            scores in prop::collection::vec(1.0f64..1e6, 1..40)
        ) {
            let a = Ranking::from_scores(scores.clone());
            let b = Ranking::from_scores(scores.iter().map(|s| s.ln() * 3.0 + 7.0).collect());
            prop_assert_eq!(a.order(), b.order());
            for w in a.order().windows(2) {
                prop_assert!(a.scores()[w[0]] >= a.scores()[w[1]]);
            }
        }
    }
}
