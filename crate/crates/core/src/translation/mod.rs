//! Next-token scoring contract, the default lexical + bigram model, and
//! trie-constrained beam search.

mod beam;
mod lexical;
mod lm;
mod model;

pub use beam::{constrained_beam_search, BeamConfig, Decoded, Hypothesis};
pub use lexical::{train_lexical_table, LexicalTable};
pub use lm::{train_bigram_lm, train_bigram_lm_with_vocab, BigramLM, BOS, EOS};
pub use model::{default_model_logprob, DefaultModel, Next, ScoringModel};
