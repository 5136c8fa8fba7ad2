use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Add-k smoothed bigram model over a closed target vocabulary plus EOS.
///
/// `p(t | h) = (c(h, t) + k) / (c(h) + k·|V ∪ {EOS}|)` for `t` in the
/// vocabulary, zero for tokens outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramLM {
    k: f64,
    vocab: BTreeSet<String>,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    history_totals: BTreeMap<String, u64>,
}

pub fn train_bigram_lm<S: AsRef<str>>(targets: &[Vec<S>], k: f64) -> Result<BigramLM> {
    train_bigram_lm_with_vocab(targets, std::iter::empty::<&str>(), k)
}

/// Like [`train_bigram_lm`] but extends the vocabulary with `extra` tokens
/// (e.g. every token the decoding trie can emit) so they receive smoothed
/// mass instead of zero.
pub fn train_bigram_lm_with_vocab<S, I, T>(targets: &[Vec<S>], extra: I, k: f64) -> Result<BigramLM>
where
    S: AsRef<str>,
    I: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    if targets.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!("smoothing constant must be positive, got {k}")));
    }
    let mut lm = BigramLM {
        k,
        vocab: BTreeSet::new(),
        counts: BTreeMap::new(),
        history_totals: BTreeMap::new(),
    };
    for seq in targets {
        let mut prev = BOS;
        for token in seq.iter().map(AsRef::as_ref).chain(std::iter::once(EOS)) {
            if token != EOS {
                lm.vocab.insert(token.to_string());
            }
            lm.add_count(prev, token, 1);
            prev = token;
        }
    }
    lm.vocab.extend(extra.into_iter().map(|t| t.as_ref().to_string()));
    Ok(lm)
}

impl BigramLM {
    fn add_count(&mut self, history: &str, token: &str, n: u64) {
        *self
            .counts
            .entry(history.to_string())
            .or_default()
            .entry(token.to_string())
            .or_default() += n;
        *self.history_totals.entry(history.to_string()).or_default() += n;
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// Vocabulary size including EOS.
    pub fn outcome_count(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn prob(&self, token: &str, history: &str) -> f64 {
        if token != EOS && !self.vocab.contains(token) {
            return 0.0;
        }
        let count = self
            .counts
            .get(history)
            .and_then(|row| row.get(token))
            .copied()
            .unwrap_or(0);
        let total = self.history_totals.get(history).copied().unwrap_or(0);
        (count as f64 + self.k) / (total as f64 + self.k * self.outcome_count() as f64)
    }

    /// Sorted `(history, token, count)` triples.
    pub fn counts(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.counts.iter().flat_map(|(h, row)| {
            row.iter().map(move |(t, &c)| (h.as_str(), t.as_str(), c))
        })
    }

    /// Rebuilds a model from its vocabulary and counts (snapshot loading).
    pub fn from_parts<'a, V, C>(k: f64, vocab: V, counts: C) -> Result<Self>
    where
        V: IntoIterator<Item = &'a str>,
        C: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!("smoothing constant must be positive, got {k}")));
        }
        let mut lm = BigramLM {
            k,
            vocab: vocab.into_iter().map(str::to_string).collect(),
            counts: BTreeMap::new(),
            history_totals: BTreeMap::new(),
        };
        for (h, t, c) in counts {
            lm.add_count(h, t, c);
        }
        Ok(lm)
    }
}
