use std::collections::BTreeMap;

use super::lexical::LexicalTable;
use super::lm::{BigramLM, BOS, EOS};
use crate::error::{Error, Result};
use crate::text::CanonicalForm;

/// A decoding step candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Next<'a> {
    Token(&'a str),
    Eos,
}

/// Scores the next token given a source form and the target prefix so far.
///
/// Implementations return one natural-log probability per candidate, in
/// candidate order. Values are finite or `-inf`.
pub trait ScoringModel: Send + Sync {
    fn next_token_logprobs(
        &self,
        source: &CanonicalForm,
        prefix: &[&str],
        candidates: &[Next<'_>],
    ) -> Vec<f64>;

    /// Log-probability of a complete sequence, EOS included.
    fn sequence_logprob(&self, source: &CanonicalForm, sequence: &[&str]) -> f64 {
        let mut total = 0.0;
        for i in 0..sequence.len() {
            total += self.next_token_logprobs(source, &sequence[..i], &[Next::Token(sequence[i])])[0];
        }
        total + self.next_token_logprobs(source, sequence, &[Next::Eos])[0]
    }
}

/// Mixture of a bigram LM and a lexical translation table:
///
/// `log(α·p_lm(t | prev) + (1 − α)·p_lex(t | source))`
///
/// where `p_lex` is the mean of `p(t | s)` over the source tokens, each
/// out-of-table entry replaced by `lex_floor`. EOS gets `lex_floor` as its
/// lexical term.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultModel {
    lex: LexicalTable,
    lm: BigramLM,
    alpha: f64,
    lex_floor: f64,
}

pub fn default_model_logprob(lex: LexicalTable, lm: BigramLM, alpha: f64) -> Result<DefaultModel> {
    DefaultModel::new(lex, lm, alpha, DefaultModel::DEFAULT_LEX_FLOOR)
}

const SNAPSHOT_HEADER: &str = "kwaug-model";
const SNAPSHOT_VERSION: u32 = 1;

impl DefaultModel {
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_LEX_FLOOR: f64 = 1e-6;

    pub fn new(lex: LexicalTable, lm: BigramLM, alpha: f64, lex_floor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha must be in [0, 1], got {alpha}")));
        }
        if !(0.0..1.0).contains(&lex_floor) {
            return Err(Error::InvalidConfig(format!("lex_floor must be in [0, 1), got {lex_floor}")));
        }
        Ok(Self {
            lex,
            lm,
            alpha,
            lex_floor,
        })
    }

    pub fn lexical(&self) -> &LexicalTable {
        &self.lex
    }

    pub fn lm(&self) -> &BigramLM {
        &self.lm
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lex_floor(&self) -> f64 {
        self.lex_floor
    }

    fn lexical_prob(&self, source_ids: &[Option<u32>], token: &str) -> f64 {
        if source_ids.is_empty() {
            return self.lex_floor;
        }
        let target = self.lex.target_id(token);
        let sum: f64 = source_ids
            .iter()
            .map(|&s| match (s, target) {
                (Some(s), Some(t)) => self.lex.entry(s, t).unwrap_or(self.lex_floor),
                _ => self.lex_floor,
            })
            .sum();
        sum / source_ids.len() as f64
    }

    /// Text snapshot: header, parameters, lexical entries and LM counts.
    /// `meta` pairs are written verbatim and returned by
    /// [`DefaultModel::from_snapshot`].
    pub fn to_snapshot(&self, meta: &BTreeMap<String, String>) -> String {
        let mut out = format!("{SNAPSHOT_HEADER}\t{SNAPSHOT_VERSION}\n");
        for (k, v) in meta {
            out.push_str(&format!("meta\t{k}\t{v}\n"));
        }
        out.push_str(&format!("alpha\t{:e}\n", self.alpha));
        out.push_str(&format!("lex_floor\t{:e}\n", self.lex_floor));
        out.push_str(&format!("lm_k\t{:e}\n", self.lm.k()));
        out.push_str("[lexical]\n");
        for (s, t, p) in self.lex.entries() {
            out.push_str(&format!("{s}\t{t}\t{p:e}\n"));
        }
        out.push_str("[lm_vocab]\n");
        for token in self.lm.vocab() {
            out.push_str(token);
            out.push('\n');
        }
        out.push_str("[lm_counts]\n");
        for (h, t, c) in self.lm.counts() {
            out.push_str(&format!("{h}\t{t}\t{c}\n"));
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<(Self, BTreeMap<String, String>)> {
        let bad = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, header)) if header == format!("{SNAPSHOT_HEADER}\t{SNAPSHOT_VERSION}") => {}
            _ => return Err(Error::Snapshot("missing or unsupported model header".into())),
        }

        let mut meta = BTreeMap::new();
        let mut params: BTreeMap<&str, f64> = BTreeMap::new();
        let mut lexical: Vec<(&str, &str, f64)> = Vec::new();
        let mut vocab: Vec<&str> = Vec::new();
        let mut counts: Vec<(&str, &str, u64)> = Vec::new();
        let mut section = "";
        for (n, line) in lines {
            if line.starts_with('[') && line.ends_with(']') {
                section = line;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match section {
                "" => match fields.as_slice() {
                    ["meta", k, v] => {
                        meta.insert(k.to_string(), v.to_string());
                    }
                    [name, value] => {
                        let value = value.parse().map_err(|_| bad(n, "bad parameter value"))?;
                        params.insert(name, value);
                    }
                    _ => return Err(bad(n, "bad parameter line")),
                },
                "[lexical]" => match fields.as_slice() {
                    [s, t, p] => lexical.push((s, t, p.parse().map_err(|_| bad(n, "bad probability"))?)),
                    _ => return Err(bad(n, "expected src<TAB>tgt<TAB>prob")),
                },
                "[lm_vocab]" => vocab.push(line),
                "[lm_counts]" => match fields.as_slice() {
                    [h, t, c] => counts.push((h, t, c.parse().map_err(|_| bad(n, "bad count"))?)),
                    _ => return Err(bad(n, "expected history<TAB>token<TAB>count")),
                },
                other => return Err(bad(n, &format!("unknown section {other}"))),
            }
        }
        let param = |name: &str| {
            params
                .get(name)
                .copied()
                .ok_or_else(|| Error::Snapshot(format!("missing parameter {name}")))
        };
        let lm = BigramLM::from_parts(param("lm_k")?, vocab, counts)?;
        let lex = LexicalTable::from_entries(lexical);
        Ok((Self::new(lex, lm, param("alpha")?, param("lex_floor")?)?, meta))
    }
}

impl ScoringModel for DefaultModel {
    fn next_token_logprobs(
        &self,
        source: &CanonicalForm,
        prefix: &[&str],
        candidates: &[Next<'_>],
    ) -> Vec<f64> {
        let history = prefix.last().copied().unwrap_or(BOS);
        let source_ids: Vec<Option<u32>> = source.tokens().map(|s| self.lex.source_id(s)).collect();
        candidates
            .iter()
            .map(|candidate| {
                let (lm, lex) = match *candidate {
                    Next::Token(t) => (self.lm.prob(t, history), self.lexical_prob(&source_ids, t)),
                    Next::Eos => (self.lm.prob(EOS, history), self.lex_floor),
                };
                (self.alpha * lm + (1.0 - self.alpha) * lex).ln()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translation::{train_bigram_lm, train_lexical_table};

    fn form(tokens: &[&str]) -> CanonicalForm {
        CanonicalForm::new(tokens.iter().map(|s| s.to_string()).collect(), vec![])
    }

    fn fixture(alpha: f64) -> DefaultModel {
        let pairs = vec![
            (form(&["a"]), vec!["x".to_string()]),
            (form(&["b"]), vec!["y".to_string(), "x".to_string()]),
        ];
        let lex = train_lexical_table(&pairs, 5).unwrap();
        let targets: Vec<Vec<String>> = pairs.iter().map(|(_, t)| t.clone()).collect();
        let lm = train_bigram_lm(&targets, 0.5).unwrap();
        default_model_logprob(lex, lm, alpha).unwrap()
    }

    #[test]
    fn alpha_one_is_pure_lm() {
        let model = fixture(1.0);
        let cands = [Next::Token("x"), Next::Token("y"), Next::Eos];
        let scores = model.next_token_logprobs(&form(&["a"]), &["y"], &cands);
        for (score, cand) in scores.iter().zip(cands) {
            let t = match cand {
                Next::Token(t) => t,
                Next::Eos => EOS,
            };
            assert!((score - model.lm().prob(t, "y").ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_follows_lexicon() {
        let model = fixture(0.0);
        let scores = model.next_token_logprobs(&form(&["a"]), &[], &[Next::Token("x"), Next::Token("y")]);
        assert!(scores[0] > scores[1]);
        assert!((scores[0] - model.lexical().prob("x", "a").ln()).abs() < 1e-12);
    }

    #[test]
    fn mixture_arithmetic() {
        let model = fixture(0.3);
        let source = form(&["a", "b"]);
        let p_lm = model.lm().prob("x", BOS);
        let p_lex = (model.lexical().prob("x", "a") + model.lexical().prob("x", "b")) / 2.0;
        let expected = (0.3 * p_lm + 0.7 * p_lex).ln();
        let got = model.next_token_logprobs(&source, &[], &[Next::Token("x")])[0];
        assert!((got - expected).abs() < 1e-12);

        let eos = model.next_token_logprobs(&source, &["x"], &[Next::Eos])[0];
        let expected_eos = (0.3 * model.lm().prob(EOS, "x") + 0.7 * DefaultModel::DEFAULT_LEX_FLOOR).ln();
        assert!((eos - expected_eos).abs() < 1e-12);
    }

    #[test]
    fn unknown_token_with_alpha_one_is_neg_infinity() {
        let model = fixture(1.0);
        let s = model.next_token_logprobs(&form(&["a"]), &[], &[Next::Token("nope")]);
        assert_eq!(s[0], f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_alpha() {
        let m = fixture(0.5);
        assert!(DefaultModel::new(m.lex.clone(), m.lm.clone(), 1.5, 1e-6).is_err());
    }

    #[test]
    fn snapshot_round_trip_reproduces_scores() {
        let model = fixture(0.4);
        let meta: BTreeMap<String, String> = [("strategy".to_string(), "BCW".to_string())].into();
        let text = model.to_snapshot(&meta);
        let (loaded, loaded_meta) = DefaultModel::from_snapshot(&text).unwrap();
        assert_eq!(loaded_meta, meta);
        assert_eq!(loaded.to_snapshot(&meta), text);
        let cands = [Next::Token("x"), Next::Token("y"), Next::Eos];
        for prefix in [&[][..], &["x"][..], &["y"][..]] {
            assert_eq!(
                model.next_token_logprobs(&form(&["a", "b"]), prefix, &cands),
                loaded.next_token_logprobs(&form(&["a", "b"]), prefix, &cands)
            );
        }
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(DefaultModel::from_snapshot("nope\n").is_err());
        assert!(DefaultModel::from_snapshot("kwaug-model\t1\nalpha\t0.5\n").is_err());
    }
}
