use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::text::CanonicalForm;

/// `p(target | source)` estimated by IBM-Model-1 style EM.
///
/// Only co-occurring pairs have an entry; every other probability is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalTable {
    source_index: HashMap<String, u32>,
    target_index: HashMap<String, u32>,
    sources: Vec<String>,
    targets: Vec<String>,
    /// `rows[source][target]`
    rows: Vec<HashMap<u32, f64>>,
    log_likelihoods: Vec<f64>,
}

impl LexicalTable {
    pub fn prob(&self, target: &str, source: &str) -> f64 {
        match (self.source_index.get(source), self.target_index.get(target)) {
            (Some(&s), Some(&t)) => self.rows[s as usize].get(&t).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub(crate) fn source_id(&self, source: &str) -> Option<u32> {
        self.source_index.get(source).copied()
    }

    pub(crate) fn target_id(&self, target: &str) -> Option<u32> {
        self.target_index.get(target).copied()
    }

    /// Probability by ids, with `None` meaning the entry is out of table.
    pub(crate) fn entry(&self, source: u32, target: u32) -> Option<f64> {
        self.rows[source as usize].get(&target).copied()
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// Corpus log-likelihood before each EM iteration and after the last one.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    /// Sorted `(source, target, prob)` triples.
    pub fn entries(&self) -> Vec<(&str, &str, f64)> {
        let mut out: Vec<(&str, &str, f64)> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter().map(move |(&t, &p)| {
                    (self.sources[s].as_str(), self.targets[t as usize].as_str(), p)
                })
            })
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Rebuilds a table from explicit entries (snapshot loading).
    pub fn from_entries<'a, I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        let sources: Vec<String> = entries
            .iter()
            .map(|e| e.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let targets: Vec<String> = entries
            .iter()
            .map(|e| e.1)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let source_index = index_of(&sources);
        let target_index = index_of(&targets);
        let mut rows = vec![HashMap::new(); sources.len()];
        for (s, t, p) in entries {
            rows[source_index[s] as usize].insert(target_index[t], p);
        }
        Self {
            source_index,
            target_index,
            sources,
            targets,
            rows,
            log_likelihoods: Vec::new(),
        }
    }
}

fn index_of(items: &[String]) -> HashMap<String, u32> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect()
}

/// Trains the lexical table with `em_iterations` rounds of EM.
///
/// Initialization is uniform over the targets each source token co-occurs
/// with. Pairs with an empty side carry no alignment information and are
/// ignored.
pub fn train_lexical_table<S: AsRef<str>>(
    pairs: &[(CanonicalForm, Vec<S>)],
    em_iterations: usize,
) -> Result<LexicalTable> {
    if em_iterations == 0 {
        return Err(Error::InvalidConfig("em_iterations must be at least 1".into()));
    }
    let usable: Vec<(Vec<&str>, Vec<&str>)> = pairs
        .iter()
        .map(|(src, tgt)| (src.tokens().collect::<Vec<_>>(), tgt.iter().map(AsRef::as_ref).collect::<Vec<_>>()))
        .filter(|(s, t)| !s.is_empty() && !t.is_empty())
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let sources: Vec<String> = usable
        .iter()
        .flat_map(|(s, _)| s.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let targets: Vec<String> = usable
        .iter()
        .flat_map(|(_, t)| t.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let source_index = index_of(&sources);
    let target_index = index_of(&targets);
    let corpus: Vec<(Vec<u32>, Vec<u32>)> = usable
        .iter()
        .map(|(s, t)| {
            (
                s.iter().map(|x| source_index[*x]).collect(),
                t.iter().map(|x| target_index[*x]).collect(),
            )
        })
        .collect();

    let mut cooc: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); sources.len()];
    for (src, tgt) in &corpus {
        for &s in src {
            cooc[s as usize].extend(tgt.iter().copied());
        }
    }
    let mut rows: Vec<HashMap<u32, f64>> = cooc
        .iter()
        .map(|targets| {
            let p = 1.0 / targets.len() as f64;
            targets.iter().map(|&t| (t, p)).collect()
        })
        .collect();

    let mut log_likelihoods = Vec::with_capacity(em_iterations + 1);
    for _ in 0..em_iterations {
        let mut counts: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); sources.len()];
        let mut totals = vec![0.0f64; sources.len()];
        let mut ll = 0.0;
        for (src, tgt) in &corpus {
            for &t in tgt {
                let z: f64 = src.iter().map(|&s| rows[s as usize][&t]).sum();
                ll += (z / src.len() as f64).ln();
                for &s in src {
                    let c = rows[s as usize][&t] / z;
                    *counts[s as usize].entry(t).or_default() += c;
                    totals[s as usize] += c;
                }
            }
        }
        log_likelihoods.push(ll);
        for (s, row) in rows.iter_mut().enumerate() {
            for (t, p) in row.iter_mut() {
                *p = counts[s].get(t).copied().unwrap_or(0.0) / totals[s];
            }
        }
    }
    log_likelihoods.push(corpus_log_likelihood(&corpus, &rows));

    Ok(LexicalTable {
        source_index,
        target_index,
        sources,
        targets,
        rows,
        log_likelihoods,
    })
}

fn corpus_log_likelihood(corpus: &[(Vec<u32>, Vec<u32>)], rows: &[HashMap<u32, f64>]) -> f64 {
    corpus
        .iter()
        .map(|(src, tgt)| {
            tgt.iter()
                .map(|&t| {
                    let z: f64 = src.iter().map(|&s| rows[s as usize][&t]).sum();
                    (z / src.len() as f64).ln()
                })
                .sum::<f64>()
        })
        .sum()
}
