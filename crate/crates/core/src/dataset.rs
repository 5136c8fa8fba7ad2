//! Query → keyword-set datasets and the TSV files that carry them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

/// A set of `(query, keyword)` pairs grouped by query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairDataset {
    map: BTreeMap<String, BTreeSet<String>>,
    pair_count: usize,
}

impl PairDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the pair was not already present.
    pub fn insert(&mut self, query: &str, keyword: &str) -> bool {
        let added = match self.map.get_mut(query) {
            Some(set) => set.insert(keyword.to_string()),
            None => {
                self.map
                    .insert(query.to_string(), BTreeSet::from([keyword.to_string()]));
                true
            }
        };
        self.pair_count += added as usize;
        added
    }

    pub fn contains(&self, query: &str, keyword: &str) -> bool {
        self.map.get(query).is_some_and(|s| s.contains(keyword))
    }

    pub fn keywords(&self, query: &str) -> Option<&BTreeSet<String>> {
        self.map.get(query)
    }

    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    pub fn query_count(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_count == 0
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// Pairs sorted by query, then keyword.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map
            .iter()
            .flat_map(|(q, ks)| ks.iter().map(move |k| (q.as_str(), k.as_str())))
    }

    pub fn merge(&mut self, other: &PairDataset) {
        for (q, k) in other.pairs() {
            self.insert(q, k);
        }
    }

    /// Pairs of `self` that are not in `other`.
    pub fn difference(&self, other: &PairDataset) -> PairDataset {
        self.pairs()
            .filter(|(q, k)| !other.contains(q, k))
            .collect()
    }

    pub fn is_subset(&self, other: &PairDataset) -> bool {
        self.pairs().all(|(q, k)| other.contains(q, k))
    }

    /// Keeps only the pairs whose query is in `queries`.
    pub fn restrict_to<'a, I: IntoIterator<Item = &'a str>>(&self, queries: I) -> PairDataset {
        let mut out = PairDataset::new();
        for q in queries {
            if let Some(ks) = self.map.get(q) {
                for k in ks {
                    out.insert(q, k);
                }
            }
        }
        out
    }

    /// `query<TAB>keyword` lines, sorted, LF terminated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (q, k) in self.pairs() {
            out.push_str(q);
            out.push('\t');
            out.push_str(k);
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut out = PairDataset::new();
        for (line, fields) in records(text) {
            match fields.as_slice() {
                [q, k] if !q.is_empty() && !k.is_empty() => {
                    out.insert(q, k);
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: "expected query<TAB>keyword".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tsv(&std::fs::read_to_string(path)?)
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for PairDataset {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut out = PairDataset::new();
        for (q, k) in iter {
            out.insert(q, k);
        }
        out
    }
}

/// `Δ = d_new − d_old`.
pub fn delta(d_new: &PairDataset, d_old: &PairDataset) -> PairDataset {
    d_new.difference(d_old)
}

/// Non-empty lines split on tabs, with 1-based line numbers. A trailing CR
/// is dropped.
pub(crate) fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        (!line.is_empty()).then(|| (i + 1, line.split('\t').collect()))
    })
}

/// One item per non-empty line, kept verbatim apart from a trailing CR.
/// Lines containing a tab are rejected since items are written into TSV
/// columns later.
pub fn read_lines(text: &str) -> Result<Vec<String>> {
    records(text)
        .map(|(line, fields)| match fields.as_slice() {
            [item] => Ok(item.to_string()),
            _ => Err(Error::Parse {
                line,
                message: "item contains a tab".into(),
            }),
        })
        .collect()
}

pub fn load_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    read_lines(&std::fs::read_to_string(path)?)
}

/// Labeled TSV: `query<TAB>keyword<TAB>label(0|1)`.
pub fn read_labeled(text: &str) -> Result<Vec<(String, String, bool)>> {
    records(text)
        .map(|(line, fields)| match fields.as_slice() {
            [q, k, "1"] => Ok((q.to_string(), k.to_string(), true)),
            [q, k, "0"] => Ok((q.to_string(), k.to_string(), false)),
            _ => Err(Error::Parse {
                line,
                message: "expected query<TAB>keyword<TAB>0|1".into(),
            }),
        })
        .collect()
}
