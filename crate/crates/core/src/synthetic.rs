//! Seeded generator for a trivial-variant corpus.
//!
//! A concept is a set of 2-4 pseudo-words, optionally with an ordered pair of
//! locations. Each concept is written out as keywords that differ only in
//! word order and inserted redundant tokens (interjections, modal words,
//! auxiliary words, punctuation). Every concept has two word orders with two
//! redundancy patterns each, so under BASE there are four distinct keyword
//! token sequences per concept, under CW two and under BCW one.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::PairDataset;
use crate::discriminant::LabeledPair;
use crate::text::{Canonicalizer, OrderedLexicon, PosLexicon, PosTag};

pub const INTERJECTIONS: [&str; 6] = ["hey", "um", "oh", "ah", "wow", "yeah"];
pub const MODALS: [&str; 4] = ["generally", "probably", "basically", "maybe"];
pub const AUXILIARIES: [&str; 3] = ["the", "of", "some"];
pub const PUNCTUATION: [&str; 3] = ["?", "!", "."];
pub const LOCATIONS: [&str; 12] = [
    "beijing", "shanghai", "london", "paris", "tokyo", "berlin", "madrid", "rome", "cairo", "lima", "oslo", "dubai",
];
const LOCATION_CATEGORY: &str = "LOCATION";

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub concepts: usize,
    /// Concepts whose queries form the seed pairs; the rest supply test
    /// queries.
    pub train_concepts: usize,
    pub word_pool: usize,
    /// Share of concepts carrying a location pair.
    pub location_rate: f64,
    pub labeled_pairs: usize,
    /// Share of injected variants in the reduction corpus.
    pub injected_fraction: f64,
    pub injected_base_pairs: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            concepts: 2500,
            train_concepts: 1500,
            word_pool: 800,
            location_rate: 0.2,
            labeled_pairs: 1000,
            injected_fraction: 0.2,
            injected_base_pairs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Concept {
    words: Vec<String>,
    locations: Option<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pos_lexicon_tsv: String,
    pub ordered_lexicon_tsv: String,
    /// Keyword repository, in generation order.
    pub keywords: Vec<String>,
    /// Seed pairs for training.
    pub seed_pairs: PairDataset,
    pub test_queries: Vec<String>,
    /// One reference keyword per test query.
    pub test_pairs: PairDataset,
    pub labeled: Vec<LabeledPair>,
    /// Distinct-concept pairs plus injected trivial variants of some of them.
    pub injected_pairs: PairDataset,
    pub injected_count: usize,
}

impl SyntheticCorpus {
    pub fn canonicalizer(&self) -> Canonicalizer {
        let lexicon = PosLexicon::parse(&self.pos_lexicon_tsv).expect("generated lexicon parses");
        let ordered = OrderedLexicon::parse(&self.ordered_lexicon_tsv).expect("generated lexicon parses");
        Canonicalizer::new(lexicon, ordered)
    }

    pub fn labeled_tsv(&self) -> String {
        self.labeled
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.query, p.keyword, p.label as u8))
            .collect()
    }
}

fn lexicon_tsv() -> (String, String) {
    let mut pos = String::new();
    for (words, tag) in [
        (&INTERJECTIONS[..], PosTag::Interjection),
        (&MODALS[..], PosTag::Modal),
        (&AUXILIARIES[..], PosTag::Auxiliary),
        (&PUNCTUATION[..], PosTag::Punct),
    ] {
        for w in words {
            pos.push_str(&format!("{w}\t{tag}\n"));
        }
    }
    let ordered = LOCATIONS.iter().map(|l| format!("{l}\t{LOCATION_CATEGORY}\n")).collect();
    (pos, ordered)
}

fn redundant_words() -> Vec<&'static str> {
    INTERJECTIONS
        .iter()
        .chain(&MODALS)
        .chain(&AUXILIARIES)
        .chain(&PUNCTUATION)
        .copied()
        .collect()
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let reserved: HashSet<&str> = redundant_words().into_iter().chain(LOCATIONS).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if !reserved.contains(w.as_str()) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Generator {
    rng: ChaCha8Rng,
    pool: Vec<String>,
    redundant: Vec<&'static str>,
}

impl Generator {
    fn concept(&mut self, location_rate: f64) -> Concept {
        let n = self.rng.gen_range(2..=4);
        let mut words: Vec<String> = self.pool.choose_multiple(&mut self.rng, n).cloned().collect();
        words.sort();
        let locations = self.rng.gen_bool(location_rate).then(|| {
            let pair: Vec<&&str> = LOCATIONS.choose_multiple(&mut self.rng, 2).collect();
            (pair[0].to_string(), pair[1].to_string())
        });
        Concept { words, locations }
    }

    /// A word order: content words permuted, locations inserted in order.
    fn order(&mut self, c: &Concept) -> Vec<String> {
        let mut tokens = c.words.clone();
        tokens.shuffle(&mut self.rng);
        if let Some((a, b)) = &c.locations {
            let i = self.rng.gen_range(0..=tokens.len());
            tokens.insert(i, a.clone());
            let j = self.rng.gen_range(i + 1..=tokens.len());
            tokens.insert(j, b.clone());
        }
        tokens
    }

    fn decorate(&mut self, order: &[String], max_insertions: usize) -> String {
        let mut tokens = order.to_vec();
        for _ in 0..self.rng.gen_range(0..=max_insertions) {
            let w = *self.redundant.choose(&mut self.rng).unwrap();
            let i = self.rng.gen_range(0..=tokens.len());
            tokens.insert(i, w.to_string());
        }
        tokens.join(" ")
    }

    fn distinct_orders(&mut self, c: &Concept) -> (Vec<String>, Vec<String>) {
        let first = self.order(c);
        loop {
            let second = self.order(c);
            if second != first {
                return (first, second);
            }
        }
    }

    /// Four keywords: two orders, each plain and with inserted redundancy.
    fn keywords(&mut self, c: &Concept) -> Vec<String> {
        let (o1, o2) = self.distinct_orders(c);
        let mut out = Vec::with_capacity(4);
        for order in [o1, o2] {
            out.push(order.join(" "));
            loop {
                let decorated = self.decorate(&order, 2);
                if decorated != out[out.len() - 1] {
                    out.push(decorated);
                    break;
                }
            }
        }
        out
    }

    fn query(&mut self, c: &Concept) -> String {
        let order = self.order(c);
        self.decorate(&order, 2)
    }

    /// A look-alike concept with one content word swapped.
    fn perturbed(&mut self, c: &Concept) -> Concept {
        let mut out = c.clone();
        let i = self.rng.gen_range(0..out.words.len());
        loop {
            let w = self.pool.choose(&mut self.rng).unwrap().clone();
            if !out.words.contains(&w) {
                out.words[i] = w;
                out.words.sort();
                return out;
            }
        }
    }
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = pseudo_words(&mut rng, cfg.word_pool);
    let mut g = Generator {
        rng,
        pool,
        redundant: redundant_words(),
    };

    let mut concepts = Vec::with_capacity(cfg.concepts);
    let mut seen = HashSet::new();
    while concepts.len() < cfg.concepts {
        let c = g.concept(cfg.location_rate);
        if seen.insert((c.words.clone(), c.locations.clone())) {
            concepts.push(c);
        }
    }

    let mut keywords = Vec::with_capacity(cfg.concepts * 4);
    let mut by_concept = Vec::with_capacity(cfg.concepts);
    for c in &concepts {
        let ks = g.keywords(c);
        keywords.extend(ks.iter().cloned());
        by_concept.push(ks);
    }

    let train = cfg.train_concepts.min(cfg.concepts);
    let mut seed_pairs = PairDataset::new();
    for (c, ks) in concepts[..train].iter().zip(&by_concept) {
        let q = g.query(c);
        seed_pairs.insert(&q, &ks[0]);
        seed_pairs.insert(&q, &ks[2]);
    }

    let mut test_queries = Vec::new();
    let mut test_pairs = PairDataset::new();
    for (c, ks) in concepts[train..].iter().zip(&by_concept[train..]) {
        let q = g.query(c);
        test_pairs.insert(&q, ks.choose(&mut g.rng).unwrap());
        test_queries.push(q);
    }

    let mut labeled = Vec::with_capacity(cfg.labeled_pairs);
    for i in 0..cfg.labeled_pairs {
        let c = concepts.choose(&mut g.rng).unwrap().clone();
        let query = g.query(&c);
        let (keyword, label) = match i % 4 {
            0 | 1 => (g.query(&c), true),
            2 => {
                let near = g.perturbed(&c);
                (g.query(&near), false)
            }
            _ => {
                let other = concepts.choose(&mut g.rng).unwrap().clone();
                (g.query(&other), other == c)
            }
        };
        labeled.push(LabeledPair { query, keyword, label });
    }

    let (injected_pairs, injected_count) = injected_corpus(&mut g, &concepts, cfg);
    let (pos_lexicon_tsv, ordered_lexicon_tsv) = lexicon_tsv();
    SyntheticCorpus {
        pos_lexicon_tsv,
        ordered_lexicon_tsv,
        keywords,
        seed_pairs,
        test_queries,
        test_pairs,
        labeled,
        injected_pairs,
        injected_count,
    }
}

/// Base pairs link distinct concepts, so no two share a canonical class.
/// Injected pairs re-render a base pair with new order and redundancy.
fn injected_corpus(g: &mut Generator, concepts: &[Concept], cfg: &SyntheticConfig) -> (PairDataset, usize) {
    let n = cfg.injected_base_pairs.min(concepts.len() / 2);
    let mut base = Vec::with_capacity(n);
    let mut pairs = PairDataset::new();
    for i in 0..n {
        let (qc, kc) = (&concepts[2 * i], &concepts[2 * i + 1]);
        let (q, k) = (g.query(qc), g.query(kc));
        pairs.insert(&q, &k);
        base.push((qc, kc));
    }
    let target = (n as f64 * cfg.injected_fraction / (1.0 - cfg.injected_fraction)).round() as usize;
    let mut injected = 0;
    let mut attempts = 0;
    while injected < target && attempts < target * 100 {
        attempts += 1;
        let (qc, kc) = *base.choose(&mut g.rng).unwrap();
        let (q, k) = (g.query(qc), g.query(kc));
        if pairs.insert(&q, &k) {
            injected += 1;
        }
    }
    (pairs, injected)
}

/// Distinct BCW keys among `keywords`.
pub fn bcw_class_count<S: AsRef<str>>(keywords: &[S], canon: &Canonicalizer) -> usize {
    keywords
        .iter()
        .map(|k| canon.bcw(k.as_ref()).rendered())
        .collect::<BTreeSet<_>>()
        .len()
}
