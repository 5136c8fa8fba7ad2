#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use kwaug::translation::{Next, ScoringModel};
use kwaug::{CanonicalForm, KeywordTrie};

/// Deterministic pseudo-random scores keyed on (salt, prefix, candidate).
/// Scores are multiples of 0.5 in [-5, 0], so ties are common.
pub struct HashModel {
    pub salt: u64,
}

impl ScoringModel for HashModel {
    fn next_token_logprobs(&self, _: &CanonicalForm, prefix: &[&str], candidates: &[Next<'_>]) -> Vec<f64> {
        candidates
            .iter()
            .map(|c| {
                let mut h = DefaultHasher::new();
                self.salt.hash(&mut h);
                prefix.hash(&mut h);
                match c {
                    Next::Token(t) => t.hash(&mut h),
                    Next::Eos => "\u{0}eos".hash(&mut h),
                }
                -((h.finish() % 11) as f64) * 0.5
            })
            .collect()
    }
}

/// Scores every terminal path with the model, accumulating in the same
/// order as decoding so sums are bit-identical.
pub fn exhaustive(source: &CanonicalForm, trie: &KeywordTrie, model: &dyn ScoringModel) -> Vec<(Vec<String>, f64)> {
    let mut scored: Vec<(Vec<String>, f64)> = trie
        .paths()
        .into_iter()
        .map(|path| {
            let refs: Vec<&str> = path.iter().map(String::as_str).collect();
            let mut total = 0.0;
            for i in 0..refs.len() {
                total += model.next_token_logprobs(source, &refs[..i], &[Next::Token(refs[i])])[0];
            }
            total += model.next_token_logprobs(source, &refs, &[Next::Eos])[0];
            (path, total)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Largest number of trie nodes at any single depth.
pub fn max_level_width(trie: &KeywordTrie) -> usize {
    let mut level = vec![KeywordTrie::ROOT];
    let mut widest = 1;
    while !level.is_empty() {
        widest = widest.max(level.len());
        level = level
            .iter()
            .flat_map(|&n| trie.children(n).unwrap().iter().map(|&(_, c)| c).collect::<Vec<_>>())
            .collect();
    }
    widest
}
