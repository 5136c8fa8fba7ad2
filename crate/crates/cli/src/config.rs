use std::path::{Path, PathBuf};

use anyhow::bail;
use clap::Args;
use kwaug::pipeline::ScoreSource;
use kwaug::Strategy;
use serde::{Deserialize, Serialize};

use crate::InputError;

/// Settings shared by every subcommand. Any field may come from the config
/// file; flags win over the file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML config file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Seed pairs, `query<TAB>keyword`.
    #[arg(long)]
    pub seed_pairs: Option<PathBuf>,
    /// Keyword repository, one per line.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Frequent queries to decode, one per line.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub pos_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub ordered_lexicon: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// BASE, CW or BCW.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_length: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lex_floor: Option<f64>,
    #[arg(long)]
    pub lm_k: Option<f64>,
    #[arg(long)]
    pub em_iterations: Option<usize>,
    /// Filter threshold τ.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// `none`, `external:<path>` or `classifier:<path>`.
    #[arg(long)]
    pub score_source: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decoding threads; 0 means one per core.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Labeled pairs `query<TAB>keyword<TAB>0|1` (train-filter, eval).
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// Reference pairs for eval.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Generated pairs for eval (default `<out>/generated.tsv`).
    #[arg(long)]
    pub generated: Option<PathBuf>,
    /// Pairs to filter (default `<out>/delta.tsv`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pairs to sample for human labeling in eval.
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Human labels for the sample, `query<TAB>keyword<TAB>0|1`.
    #[arg(long)]
    pub sample_labels: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    /// Reads the config file named by `--config`, if any, and overlays the
    /// flags on top of it.
    pub fn load(flags: &Settings) -> anyhow::Result<Settings> {
        let mut base = match &flags.config {
            Some(path) => {
                let text = read_input(path)?;
                toml::from_str::<Settings>(&text)
                    .map_err(|e| InputError(format!("{}: {e}", path.display())))?
            }
            None => Settings::default(),
        };
        overlay!(
            base, flags, seed_pairs, keywords, queries, pos_lexicon, ordered_lexicon, out, strategy, beam,
            max_length, alpha, lex_floor, lm_k, em_iterations, threshold, score_source, seed, workers, labeled,
            reference, generated, input, sample_size, sample_labels, epochs, learning_rate,
        );
        base.config = flags.config.clone();
        Ok(base)
    }
}

/// Fully resolved configuration with defaults applied.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed_pairs: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub ordered_lexicon: Option<PathBuf>,
    pub out: PathBuf,
    pub strategy: String,
    pub beam: usize,
    pub max_length: usize,
    pub alpha: f64,
    pub lex_floor: f64,
    pub lm_k: f64,
    pub em_iterations: usize,
    pub threshold: f64,
    pub score_source: ScoreSource,
    pub seed: u64,
    pub workers: usize,
    pub labeled: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub generated: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub sample_size: Option<usize>,
    pub sample_labels: Option<PathBuf>,
    pub epochs: usize,
    pub learning_rate: f64,
}

pub fn parse_score_source(s: &str) -> anyhow::Result<ScoreSource> {
    Ok(match s.split_once(':') {
        _ if s == "none" => ScoreSource::None,
        Some(("external", path)) if !path.is_empty() => ScoreSource::External(path.to_string()),
        Some(("classifier", path)) if !path.is_empty() => ScoreSource::Classifier(path.to_string()),
        _ => bail!(InputError(format!(
            "bad score source {s:?} (expected none, external:<path> or classifier:<path>)"
        ))),
    })
}

impl RunConfig {
    pub fn resolve(s: Settings) -> anyhow::Result<RunConfig> {
        let train = kwaug::pipeline::TrainConfig::default();
        let params = kwaug::discriminant::TrainParams::default();
        let beam = kwaug::translation::BeamConfig::default();
        let cfg = RunConfig {
            seed_pairs: s.seed_pairs,
            keywords: s.keywords,
            queries: s.queries,
            pos_lexicon: s.pos_lexicon,
            ordered_lexicon: s.ordered_lexicon,
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            strategy: s
                .strategy
                .unwrap_or_else(|| "BCW".into())
                .parse::<Strategy>()
                .map_err(InputError)?
                .to_string(),
            beam: s.beam.unwrap_or(beam.beam_size),
            max_length: s.max_length.unwrap_or(beam.max_length),
            alpha: s.alpha.unwrap_or(train.alpha),
            lex_floor: s.lex_floor.unwrap_or(train.lex_floor),
            lm_k: s.lm_k.unwrap_or(train.lm_k),
            em_iterations: s.em_iterations.unwrap_or(train.em_iterations),
            threshold: s.threshold.unwrap_or(0.5),
            score_source: parse_score_source(s.score_source.as_deref().unwrap_or("none"))?,
            seed: s.seed.unwrap_or(0),
            workers: s.workers.unwrap_or(1),
            labeled: s.labeled,
            reference: s.reference,
            generated: s.generated,
            input: s.input,
            sample_size: s.sample_size,
            sample_labels: s.sample_labels,
            epochs: s.epochs.unwrap_or(params.epochs),
            learning_rate: s.learning_rate.unwrap_or(params.learning_rate),
        };
        if cfg.beam == 0 {
            bail!(InputError("beam must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&cfg.threshold) {
            bail!(InputError(format!("threshold must be in [0, 1], got {}", cfg.threshold)));
        }
        Ok(cfg)
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy.parse().expect("validated on resolve")
    }

    pub fn artifacts_dir(&self) -> PathBuf {
        self.out.join("artifacts")
    }

    /// The path for `name`, or an input error naming the missing setting.
    pub fn require<'a>(&self, path: &'a Option<PathBuf>, name: &str) -> anyhow::Result<&'a Path> {
        match path {
            Some(p) => {
                if !p.exists() {
                    bail!(InputError(format!("{name}: file not found: {}", p.display())));
                }
                Ok(p)
            }
            None => bail!(InputError(format!("missing setting `{name}`"))),
        }
    }
}

pub fn read_input(path: &Path) -> anyhow::Result<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?)
}
