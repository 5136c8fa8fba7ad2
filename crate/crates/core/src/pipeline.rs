//! End-to-end augmentation: transform the seed data, train the model, decode
//! every query against the keyword trie, join results back to keywords and
//! merge them into the expanded dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PairDataset;
use crate::discriminant::{filter_pairs, PairScorer};
use crate::error::{Error, Result};
use crate::text::{Canonicalizer, InverseTable, Strategy};
use crate::translation::{
    constrained_beam_search, train_bigram_lm_with_vocab, train_lexical_table, BeamConfig, Decoded, DefaultModel,
};
use crate::trie::KeywordTrie;

pub const TRIE_FILE: &str = "trie.bin";
pub const MODEL_FILE: &str = "model.tsv";
pub const TABLE_FILE: &str = "inverse_table.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub em_iterations: usize,
    pub lm_k: f64,
    pub alpha: f64,
    pub lex_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            em_iterations: 10,
            lm_k: 0.1,
            alpha: DefaultModel::DEFAULT_ALPHA,
            lex_floor: DefaultModel::DEFAULT_LEX_FLOOR,
        }
    }
}

/// Where filter scores come from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    /// No filtering.
    #[default]
    None,
    /// A `query<TAB>keyword<TAB>score` file.
    External(String),
    /// A trained classifier snapshot.
    Classifier(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub strategy: Strategy,
    pub beam: BeamConfig,
    pub train: TrainConfig,
    pub threshold: f64,
    pub score_source: ScoreSource,
    /// Decoding threads; 0 means one per core.
    pub workers: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bcw,
            beam: BeamConfig::default(),
            train: TrainConfig::default(),
            threshold: 0.5,
            score_source: ScoreSource::None,
            workers: 1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!("threshold must be in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Counts gathered while building artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub keywords: usize,
    /// Keywords whose transform is empty and so cannot be decoded.
    pub keywords_skipped: usize,
    pub trie_paths: usize,
    pub trie_nodes: usize,
    pub seed_pairs: usize,
    /// Seed pairs with an empty side after the transform.
    pub seed_pairs_skipped: usize,
    pub em_log_likelihoods: Vec<f64>,
}

/// Everything decoding needs: the trie over transformed keywords, the table
/// mapping transformed keys back to keywords, and the scoring model.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub strategy: Strategy,
    pub trie: KeywordTrie,
    pub table: InverseTable,
    pub model: DefaultModel,
}

pub fn build_artifacts<K: AsRef<str>>(
    d_old: &PairDataset,
    keywords: &[K],
    canon: &Canonicalizer,
    strategy: Strategy,
    cfg: &TrainConfig,
) -> Result<(Artifacts, BuildStats)> {
    if d_old.is_empty() || keywords.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats = BuildStats {
        keywords: keywords.len(),
        seed_pairs: d_old.pair_count(),
        ..BuildStats::default()
    };

    let mut table = InverseTable::new();
    let mut sequences = Vec::with_capacity(keywords.len());
    for keyword in keywords {
        let keyword = keyword.as_ref();
        let t = canon.transform(strategy, keyword);
        if t.is_empty() {
            stats.keywords_skipped += 1;
            continue;
        }
        table.insert(t.key(), keyword);
        sequences.push(t.sequence);
    }
    let trie = KeywordTrie::build(&sequences)?;
    stats.trie_paths = trie.path_count();
    stats.trie_nodes = trie.node_count();

    let mut pairs = Vec::with_capacity(d_old.pair_count());
    for (q, k) in d_old.pairs() {
        let source = canon.transform(strategy, q);
        let target = canon.transform(strategy, k);
        if source.is_empty() || target.is_empty() {
            stats.seed_pairs_skipped += 1;
            continue;
        }
        pairs.push((source.form, target.sequence));
    }
    let lex = train_lexical_table(&pairs, cfg.em_iterations)?;
    stats.em_log_likelihoods = lex.log_likelihoods().to_vec();
    let targets: Vec<Vec<String>> = pairs.into_iter().map(|(_, t)| t).collect();
    let lm = train_bigram_lm_with_vocab(&targets, trie.vocab(), cfg.lm_k)?;
    let model = DefaultModel::new(lex, lm, cfg.alpha, cfg.lex_floor)?;
    Ok((
        Artifacts {
            strategy,
            trie,
            table,
            model,
        },
        stats,
    ))
}

impl Artifacts {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.trie.save(dir.join(TRIE_FILE))?;
        let meta = BTreeMap::from([("strategy".to_string(), self.strategy.to_string())]);
        std::fs::write(dir.join(MODEL_FILE), self.model.to_snapshot(&meta))?;
        std::fs::write(dir.join(TABLE_FILE), self.table.to_tsv())?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let trie = KeywordTrie::load(dir.join(TRIE_FILE))?;
        let (model, meta) = DefaultModel::from_snapshot(&std::fs::read_to_string(dir.join(MODEL_FILE))?)?;
        let strategy = meta
            .get("strategy")
            .ok_or_else(|| Error::Snapshot("model snapshot has no strategy".into()))?
            .parse()
            .map_err(Error::Snapshot)?;
        let table = InverseTable::from_tsv(&std::fs::read_to_string(dir.join(TABLE_FILE))?)?;
        Ok(Self {
            strategy,
            trie,
            table,
            model,
        })
    }

    /// Keywords a decoded trie path stands for.
    pub fn keywords_for(&self, decoded: &Decoded) -> Result<&BTreeSet<String>> {
        let key = self.strategy.form_from_sequence(&decoded.tokens).rendered();
        self.table
            .get(&key)
            .ok_or_else(|| Error::InvalidConfig(format!("decoded key {key:?} is missing from the inverse table")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: String,
    pub decoded: Vec<Decoded>,
    /// Union of the keywords behind every decoded path, sorted.
    pub keywords: BTreeSet<String>,
}

/// Decodes one query. `None` when its transform is empty.
pub fn retrieve_query(
    query: &str,
    artifacts: &Artifacts,
    canon: &Canonicalizer,
    beam: &BeamConfig,
) -> Result<Option<QueryResult>> {
    let t = canon.transform(artifacts.strategy, query);
    if t.is_empty() {
        return Ok(None);
    }
    let decoded = constrained_beam_search(&t.form, &artifacts.trie, &artifacts.model, beam)?;
    let mut keywords = BTreeSet::new();
    for d in &decoded {
        keywords.extend(artifacts.keywords_for(d)?.iter().cloned());
    }
    Ok(Some(QueryResult {
        query: query.to_string(),
        decoded,
        keywords,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    /// In query order, skipped queries omitted.
    pub results: Vec<QueryResult>,
    pub skipped: usize,
    pub decode_seconds: f64,
}

impl Retrieval {
    /// `D1`: every (query, retrieved keyword) pair.
    pub fn generated(&self) -> PairDataset {
        let mut out = PairDataset::new();
        for r in &self.results {
            for k in &r.keywords {
                out.insert(&r.query, k);
            }
        }
        out
    }

    pub fn ms_per_query(&self) -> f64 {
        let n = self.results.len() + self.skipped;
        if n == 0 {
            0.0
        } else {
            self.decode_seconds * 1000.0 / n as f64
        }
    }
}

/// Decodes every query on a pool of `workers` threads (0 = one per core).
/// Results are returned in query order regardless of the worker count.
pub fn retrieve<Q: AsRef<str> + Sync>(
    queries: &[Q],
    artifacts: &Artifacts,
    canon: &Canonicalizer,
    beam: &BeamConfig,
    workers: usize,
) -> Result<Retrieval> {
    beam.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let outcomes: Vec<Option<QueryResult>> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| retrieve_query(q.as_ref(), artifacts, canon, beam))
            .collect::<Result<_>>()
    })?;
    let decode_seconds = start.elapsed().as_secs_f64();
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(Retrieval {
        results: outcomes.into_iter().flatten().collect(),
        skipped,
        decode_seconds,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub strategy: String,
    pub beam_size: usize,
    pub build: BuildStats,
    pub queries: usize,
    pub queries_skipped: usize,
    pub generated_pairs: usize,
    pub d_old_pairs: usize,
    pub d_new_pairs: usize,
    pub delta_pairs: usize,
    /// `|delta| / |d_old|`.
    pub diff_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub d_new: PairDataset,
    pub delta: PairDataset,
    /// Pairs produced by decoding alone.
    pub generated: PairDataset,
    pub report: AugmentReport,
    pub decode_seconds: f64,
}

/// Merges retrieved pairs into a copy of `d_old`.
pub fn merge_retrieval(d_old: &PairDataset, retrieval: &Retrieval) -> (PairDataset, PairDataset, PairDataset) {
    let generated = retrieval.generated();
    let mut d_new = d_old.clone();
    d_new.merge(&generated);
    let delta = crate::dataset::delta(&d_new, d_old);
    (d_new, delta, generated)
}

pub fn augment<K: AsRef<str>, Q: AsRef<str> + Sync>(
    d_old: &PairDataset,
    keywords: &[K],
    queries: &[Q],
    canon: &Canonicalizer,
    cfg: &AugmentConfig,
) -> Result<Augmented> {
    cfg.validate()?;
    let (artifacts, build) = build_artifacts(d_old, keywords, canon, cfg.strategy, &cfg.train)?;
    let retrieval = retrieve(queries, &artifacts, canon, &cfg.beam, cfg.workers)?;
    let (d_new, delta, generated) = merge_retrieval(d_old, &retrieval);
    let report = AugmentReport {
        strategy: cfg.strategy.to_string(),
        beam_size: cfg.beam.beam_size,
        build,
        queries: queries.len(),
        queries_skipped: retrieval.skipped,
        generated_pairs: generated.pair_count(),
        d_old_pairs: d_old.pair_count(),
        d_new_pairs: d_new.pair_count(),
        delta_pairs: delta.pair_count(),
        diff_ratio: delta.pair_count() as f64 / d_old.pair_count() as f64,
    };
    Ok(Augmented {
        d_new,
        delta,
        generated,
        report,
        decode_seconds: retrieval.decode_seconds,
    })
}

/// Filters `delta` only; seed pairs are trusted.
pub fn run_filter_stage(delta: &PairDataset, scorer: &dyn PairScorer, threshold: f64) -> Result<PairDataset> {
    Ok(filter_pairs(delta.pairs(), scorer, threshold)?.into_iter().collect())
}

/// Keeps one pair per `(transform(query), transform(keyword))` class: the
/// first in sorted order. Pairs with an empty side are kept as they are.
pub fn canonical_dedup(pairs: &PairDataset, canon: &Canonicalizer, strategy: Strategy) -> PairDataset {
    let mut seen = BTreeSet::new();
    pairs
        .pairs()
        .filter(|(q, k)| {
            let q = canon.transform(strategy, q);
            let k = canon.transform(strategy, k);
            q.is_empty() || k.is_empty() || seen.insert((q.key(), k.key()))
        })
        .collect()
}
