//! Binary observation matrix `d_ij` and the observation log text format.
//!
//! The log format is one record per line, node names separated by commas.
//! Lines whose first non-blank character is `#` are comments; blank lines
//! are skipped.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{read_to_string, write_string, Error, Result};

/// D records over N overt nodes. Row order is ingestion order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    labels: Vec<String>,
    members: Vec<Vec<usize>>,
    dense: Vec<f64>,
}

impl ObservationSet {
    /// Builds the matrix from named records over an ordered node universe.
    ///
    /// Column `j` follows `universe[j]`. Repeated names inside one record
    /// collapse to a single presence bit.
    pub fn build<R, S>(records: &[R], universe: &[S]) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        if universe.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let mut index = HashMap::with_capacity(universe.len());
        for (j, name) in universe.iter().enumerate() {
            if index.insert(name.as_ref(), j).is_some() {
                return Err(Error::DuplicateNode {
                    name: name.as_ref().to_string(),
                });
            }
        }
        let mut members = Vec::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            let mut row = Vec::with_capacity(record.as_ref().len());
            for name in record.as_ref() {
                let name = name.as_ref();
                match index.get(name) {
                    Some(&j) => row.push(j),
                    None => {
                        return Err(Error::UnknownNode {
                            record: i,
                            name: name.to_string(),
                        })
                    }
                }
            }
            members.push(row);
        }
        let labels = universe.iter().map(|s| s.as_ref().to_string()).collect();
        Self::from_indices(labels, members)
    }

    /// Builds the matrix using the order in which nodes first appear.
    pub fn build_in_appearance_order<R, S>(records: &[R]) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut seen = HashMap::new();
        let mut universe: Vec<&str> = Vec::new();
        for record in records {
            for name in record.as_ref() {
                let name = name.as_ref();
                if !seen.contains_key(name) {
                    seen.insert(name, universe.len());
                    universe.push(name);
                }
            }
        }
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        let borrowed: Vec<Vec<&str>> = records
            .iter()
            .map(|r| r.as_ref().iter().map(|s| s.as_ref()).collect())
            .collect();
        if universe.is_empty() {
            return Err(Error::EmptyRecords {
                count: records.len(),
                first: 0,
            });
        }
        Self::build(&borrowed, &universe)
    }

    /// Builds the matrix from column indices. Indices are deduplicated and sorted.
    pub fn from_indices(labels: Vec<String>, mut members: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyUniverse);
        }
        if members.is_empty() {
            return Err(Error::NoRecords);
        }
        let mut empty = members.iter().enumerate().filter(|(_, r)| r.is_empty());
        if let Some((first, _)) = empty.next() {
            return Err(Error::EmptyRecords {
                count: 1 + empty.count(),
                first,
            });
        }
        let mut dense = vec![0.0; members.len() * n];
        for (i, row) in members.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &j in row.iter() {
                if j >= n {
                    return Err(Error::NodeOutOfRange { node: j, n });
                }
                dense[i * n + j] = 1.0;
            }
        }
        Ok(ObservationSet {
            labels,
            members,
            dense,
        })
    }

    /// Overt node count N.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Record count D.
    pub fn d(&self) -> usize {
        self.members.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Sorted column indices present in record `i`.
    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    /// Row `i` of the matrix as 0.0 / 1.0 values.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.dense[i * n..(i + 1) * n]
    }

    /// `d_ij` as an integer.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.dense[i * self.n() + j] as u8
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.members[i].binary_search(&j).is_ok()
    }

    /// Number of records containing each node.
    pub fn node_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n()];
        for row in &self.members {
            for &j in row {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Records reordered so that new record `i` is old record `order[i]`.
    pub fn permute_records(&self, order: &[usize]) -> Result<Self> {
        let members = order
            .iter()
            .map(|&i| {
                self.members
                    .get(i)
                    .cloned()
                    .ok_or(Error::RecordOutOfRange {
                        index: i,
                        len: self.d(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(self.labels.clone(), members)
    }

    /// Columns reordered so that new column `j` is old column `perm[j]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::Dimension {
                what: "node permutation",
                expected: self.n(),
                actual: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; self.n()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let labels = perm.iter().map(|&old| self.labels[old].clone()).collect();
        let members = self
            .members
            .iter()
            .map(|row| row.iter().map(|&old| inverse[old]).collect())
            .collect();
        Self::from_indices(labels, members)
    }

    /// Node names of record `i` in column order.
    pub fn record_names(&self, i: usize) -> Vec<&str> {
        self.members[i]
            .iter()
            .map(|&j| self.labels[j].as_str())
            .collect()
    }

    /// Serializes to the observation log format.
    pub fn to_log_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.d() {
            out.push_str(&self.record_names(i).join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_log_string())
    }

    /// Loads a log file. With no universe the column order is first appearance.
    pub fn load(path: &Path, universe: Option<&[String]>) -> Result<Self> {
        let records = parse_log(&read_to_string(path)?)?;
        match universe {
            Some(u) => Self::build(&records, u),
            None => Self::build_in_appearance_order(&records),
        }
    }
}

/// Parses observation log text into named records.
pub fn parse_log(text: &str) -> Result<Vec<Vec<String>>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut record = Vec::new();
        for name in line.split(',') {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(lineno + 1, "empty node name"));
            }
            record.push(name.to_string());
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_records_over_two_nodes() {
        let obs = ObservationSet::build(&[vec!["A", "B"], vec!["B"]], &["A", "B"]).unwrap();
        assert_eq!(obs.d(), 2);
        assert_eq!(obs.n(), 2);
        assert_eq!(obs.row(0), &[1.0, 1.0]);
        assert_eq!(obs.row(1), &[0.0, 1.0]);
        assert_eq!(obs.get(1, 0), 0);
    }

    #[test]
    fn single_node_identity() {
        let obs = ObservationSet::build(&[vec!["A"]], &["A"]).unwrap();
        assert_eq!(obs.row(0), &[1.0]);
    }

    #[test]
    fn unknown_node_names_record_and_name() {
        let err = ObservationSet::build(&[vec!["A", "C"]], &["A", "B"]).unwrap_err();
        assert_eq!(err.to_string(), "unknown node C in record 0");
    }

    #[test]
    fn empty_records_are_counted() {
        let records: Vec<Vec<&str>> = vec![vec!["A"], vec![], vec!["B"], vec![]];
        let err = ObservationSet::build(&records, &["A", "B"]).unwrap_err();
        assert!(matches!(err, Error::EmptyRecords { count: 2, first: 1 }));
    }

    #[test]
    fn empty_universe_rejected() {
        let universe: [&str; 0] = [];
        let err = ObservationSet::build(&[vec!["A"]], &universe).unwrap_err();
        assert!(matches!(err, Error::EmptyUniverse));
    }

    #[test]
    fn log_round_trip_keeps_order() {
        let text = "# header\nA, B\n\nC\n  # indented comment\nB,C,A\n";
        let records = parse_log(text).unwrap();
        assert_eq!(records, vec![vec!["A", "B"], vec!["C"], vec!["B", "C", "A"]]);
        let obs = ObservationSet::build_in_appearance_order(&records).unwrap();
        assert_eq!(obs.labels(), &["A", "B", "C"]);
        let again = ObservationSet::build_in_appearance_order(&parse_log(&obs.to_log_string()).unwrap())
            .unwrap();
        assert_eq!(obs, again);
    }

    #[test]
    fn empty_name_is_a_parse_error() {
        let err = parse_log("A,,B\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn node_permutation_moves_columns() {
        let obs = ObservationSet::build(&[vec!["A", "B"], vec!["C"]], &["A", "B", "C"]).unwrap();
        let p = obs.permute_nodes(&[2, 0, 1]).unwrap();
        assert_eq!(p.labels(), &["C", "A", "B"]);
        assert_eq!(p.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(p.row(1), &[1.0, 0.0, 0.0]);
    }
}
