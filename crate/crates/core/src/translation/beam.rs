use std::cmp::Ordering;
use std::collections::HashSet;

use super::model::{Next, ScoringModel};
use crate::error::{Error, Result};
use crate::text::CanonicalForm;
use crate::trie::{KeywordTrie, NodeId, TokenId};

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_length: usize,
    /// Rank completed hypotheses by score / (tokens + 1) instead of the raw
    /// score. Off by default.
    pub length_normalize: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_size: 30,
            max_length: 20,
            length_normalize: false,
        }
    }
}

impl BeamConfig {
    pub fn with_beam(beam_size: usize) -> Self {
        Self {
            beam_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::InvalidConfig("beam size must be at least 1".into()));
        }
        if self.max_length == 0 {
            return Err(Error::InvalidConfig("max length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub node: NodeId,
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub finished: bool,
}

/// A completed decoding result.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<String>,
    pub score: f64,
}

/// Best score first; equal scores fall back to ascending token order.
fn rank(a_score: f64, a_tokens: &[TokenId], b_score: f64, b_tokens: &[TokenId]) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_tokens.cmp(b_tokens))
}

/// Beam search whose candidates at every step are exactly the trie children
/// of the hypothesis node, plus EOS when that node is terminal.
///
/// Finished hypotheses move to a completed pool; live hypotheses are
/// recombined per trie node and pruned to `beam_size`. At most `beam_size`
/// results are returned, best first. An empty trie, or one with no path
/// within `max_length`, yields an empty list.
pub fn constrained_beam_search(
    source: &CanonicalForm,
    trie: &KeywordTrie,
    model: &dyn ScoringModel,
    cfg: &BeamConfig,
) -> Result<Vec<Decoded>> {
    cfg.validate()?;
    let mut live = vec![Hypothesis {
        node: KeywordTrie::ROOT,
        tokens: Vec::new(),
        score: 0.0,
        finished: false,
    }];
    let mut completed: Vec<Hypothesis> = Vec::new();
    let mut candidates: Vec<Next<'_>> = Vec::new();

    for depth in 0..=cfg.max_length {
        let mut expansions: Vec<Hypothesis> = Vec::new();
        for hyp in &live {
            let children = trie.children(hyp.node)?;
            let terminal = trie.is_terminal(hyp.node)?;
            let can_extend = depth < cfg.max_length;

            candidates.clear();
            if can_extend {
                candidates.extend(children.iter().map(|&(t, _)| Next::Token(trie.token(t))));
            }
            if terminal {
                candidates.push(Next::Eos);
            }
            if candidates.is_empty() {
                continue;
            }

            let prefix: Vec<&str> = hyp.tokens.iter().map(|&t| trie.token(t)).collect();
            let scores = model.next_token_logprobs(source, &prefix, &candidates);
            debug_assert_eq!(scores.len(), candidates.len());

            let mut scores = scores.into_iter();
            if can_extend {
                for (&(token, child), score) in children.iter().zip(scores.by_ref()) {
                    let mut tokens = Vec::with_capacity(hyp.tokens.len() + 1);
                    tokens.extend_from_slice(&hyp.tokens);
                    tokens.push(token);
                    expansions.push(Hypothesis {
                        node: child,
                        tokens,
                        score: hyp.score + score,
                        finished: false,
                    });
                }
            }
            if terminal {
                let score = scores.next().expect("score for EOS");
                completed.push(Hypothesis {
                    node: hyp.node,
                    tokens: hyp.tokens.clone(),
                    score: hyp.score + score,
                    finished: true,
                });
            }
        }

        expansions.sort_by(|a, b| rank(a.score, &a.tokens, b.score, &b.tokens));
        let mut seen = HashSet::with_capacity(expansions.len());
        expansions.retain(|h| seen.insert(h.node));
        expansions.truncate(cfg.beam_size);
        live = expansions;
        if live.is_empty() {
            break;
        }
    }

    let key = |h: &Hypothesis| {
        if cfg.length_normalize {
            h.score / (h.tokens.len() + 1) as f64
        } else {
            h.score
        }
    };
    completed.sort_by(|a, b| rank(key(a), &a.tokens, key(b), &b.tokens));
    completed.truncate(cfg.beam_size);
    Ok(completed
        .into_iter()
        .map(|h| Decoded {
            tokens: h.tokens.iter().map(|&t| trie.token(t).to_string()).collect(),
            score: h.score,
        })
        .collect())
}
