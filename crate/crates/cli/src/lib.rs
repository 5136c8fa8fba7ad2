//! Batch commands for building retrieval artifacts, decoding frequent
//! queries, filtering and evaluating the results.
//!
//! Every command writes `<out>/<command>.manifest.json` with the resolved
//! config, SHA-256 hashes of its inputs and outputs, and counts. Wall-clock
//! timings go to a separate `<out>/<command>.timing.json` so manifests are
//! byte-identical across reruns.

pub mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use kwaug::dataset::{load_lines, read_labeled, read_lines, PairDataset};
use kwaug::discriminant::{
    train_classifier, ClassifierScorer, CorpusStats, ExternalScores, FeatureExtractor, LabeledPair, LinearClassifier,
    PairScorer, TrainParams,
};
use kwaug::eval::{auc, generation_metrics, precision, precision_sample, recall_at_precision, render_table};
use kwaug::pipeline::{build_artifacts, merge_retrieval, retrieve, run_filter_stage, Artifacts, ScoreSource, TrainConfig};
use kwaug::synthetic::{generate, SyntheticConfig};
use kwaug::text::{OrderedLexicon, PosLexicon};
use kwaug::translation::BeamConfig;
use kwaug::Canonicalizer;

pub use config::{RunConfig, Settings};

/// Bad or missing input. Exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// An output failed a guaranteed property. Exit code 3.
#[derive(Debug)]
pub struct InvariantViolation(pub String);

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<InvariantViolation>()) {
        EXIT_INVARIANT
    } else {
        EXIT_INPUT
    }
}

#[derive(Debug, Parser)]
#[command(name = "kwaug", version, about = "Synonymous keyword retrieval for frequent queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform seed data, build the keyword trie and train the model.
    Build(Settings),
    /// Decode every query and write d_new, delta and the generated pairs.
    Retrieve(Settings),
    /// Keep delta pairs scoring at least the threshold.
    Filter(Settings),
    /// Train the logistic-regression filter on labeled pairs.
    TrainFilter(Settings),
    /// Generation and classification metrics.
    Eval(Settings),
    /// Write the synthetic trivial-variant corpus and a config for it.
    GenSynthetic {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value_t = 2500)]
        concepts: usize,
        #[arg(long, default_value_t = 1500)]
        train_concepts: usize,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Build(s) => cmd_build(&resolve(&s)?),
        Command::Retrieve(s) => cmd_retrieve(&resolve(&s)?),
        Command::Filter(s) => cmd_filter(&resolve(&s)?),
        Command::TrainFilter(s) => cmd_train_filter(&resolve(&s)?),
        Command::Eval(s) => cmd_eval(&resolve(&s)?),
        Command::GenSynthetic {
            settings,
            concepts,
            train_concepts,
        } => cmd_gen_synthetic(&resolve(&settings)?, concepts, train_concepts),
    }
}

fn resolve(flags: &Settings) -> anyhow::Result<RunConfig> {
    RunConfig::resolve(Settings::load(flags)?)
}

fn input_err(path: &Path, e: impl fmt::Display) -> anyhow::Error {
    InputError(format!("{}: {e}", path.display())).into()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct FileHash {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Default)]
struct Files(BTreeMap<String, FileHash>);

impl Files {
    fn add(&mut self, name: &str, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path).map_err(|e| input_err(path, e))?;
        self.0.insert(
            name.to_string(),
            FileHash {
                path: path.display().to_string(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
            },
        );
        Ok(())
    }

    fn add_opt(&mut self, name: &str, path: &Option<PathBuf>) -> anyhow::Result<()> {
        match path {
            Some(p) => self.add(name, p),
            None => Ok(()),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(
    cfg: &RunConfig,
    command: &str,
    inputs: Files,
    outputs: Files,
    counts: serde_json::Value,
) -> anyhow::Result<PathBuf> {
    let path = cfg.out.join(format!("{command}.manifest.json"));
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "inputs": inputs.0,
        "outputs": outputs.0,
        "counts": counts,
    });
    write_json(&path, &manifest)?;
    Ok(path)
}

fn write_timing(cfg: &RunConfig, command: &str, timing: serde_json::Value) -> anyhow::Result<()> {
    write_json(&cfg.out.join(format!("{command}.timing.json")), &timing)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn optional_input<'a>(path: &'a Option<PathBuf>, name: &str) -> anyhow::Result<Option<&'a Path>> {
    match path {
        Some(p) if !p.exists() => bail!(InputError(format!("{name}: file not found: {}", p.display()))),
        Some(p) => Ok(Some(p)),
        None => Ok(None),
    }
}

pub fn load_canonicalizer(cfg: &RunConfig) -> anyhow::Result<Canonicalizer> {
    let lexicon = match optional_input(&cfg.pos_lexicon, "pos_lexicon")? {
        Some(p) => PosLexicon::from_path(p).map_err(|e| input_err(p, e))?,
        None => PosLexicon::new(),
    };
    let ordered = match optional_input(&cfg.ordered_lexicon, "ordered_lexicon")? {
        Some(p) => OrderedLexicon::from_path(p).map_err(|e| input_err(p, e))?,
        None => OrderedLexicon::new(),
    };
    Ok(Canonicalizer::new(lexicon, ordered))
}

fn load_pairs(path: &Path) -> anyhow::Result<PairDataset> {
    PairDataset::load(path).map_err(|e| input_err(path, e))
}

fn load_items(path: &Path) -> anyhow::Result<Vec<String>> {
    load_lines(path).map_err(|e| input_err(path, e))
}

fn load_artifacts(cfg: &RunConfig) -> anyhow::Result<Artifacts> {
    let dir = cfg.artifacts_dir();
    Artifacts::load(&dir).map_err(|e| input_err(&dir, format!("cannot load artifacts ({e}); run `kwaug build` first")))
}

fn beam_config(cfg: &RunConfig) -> BeamConfig {
    BeamConfig {
        beam_size: cfg.beam,
        max_length: cfg.max_length,
        length_normalize: false,
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn lexicon_inputs(cfg: &RunConfig, files: &mut Files) -> anyhow::Result<()> {
    files.add_opt("pos_lexicon", &cfg.pos_lexicon)?;
    files.add_opt("ordered_lexicon", &cfg.ordered_lexicon)
}

pub fn cmd_build(cfg: &RunConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let seed_path = cfg.require(&cfg.seed_pairs, "seed_pairs")?;
    let keyword_path = cfg.require(&cfg.keywords, "keywords")?;
    let canon = load_canonicalizer(cfg)?;
    let d_old = load_pairs(seed_path)?;
    let keywords = load_items(keyword_path)?;
    let train = TrainConfig {
        em_iterations: cfg.em_iterations,
        lm_k: cfg.lm_k,
        alpha: cfg.alpha,
        lex_floor: cfg.lex_floor,
    };
    let (artifacts, stats) =
        build_artifacts(&d_old, &keywords, &canon, cfg.strategy(), &train).map_err(|e| InputError(e.to_string()))?;
    let ll = &stats.em_log_likelihoods;
    if ll.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs().max(1.0)) {
        bail!(InvariantViolation(format!("EM log-likelihood decreased: {ll:?}")));
    }
    let dir = cfg.artifacts_dir();
    artifacts.save(&dir).with_context(|| format!("writing {}", dir.display()))?;

    let mut inputs = Files::default();
    inputs.add("seed_pairs", seed_path)?;
    inputs.add("keywords", keyword_path)?;
    lexicon_inputs(cfg, &mut inputs)?;
    let mut outputs = Files::default();
    for name in [kwaug::pipeline::TRIE_FILE, kwaug::pipeline::MODEL_FILE, kwaug::pipeline::TABLE_FILE] {
        outputs.add(name, &dir.join(name))?;
    }
    write_manifest(cfg, "build", inputs, outputs, serde_json::to_value(&stats)?)?;
    write_timing(cfg, "build", json!({ "build_ms": ms(start) }))?;
    println!(
        "built {} trie paths from {} keywords ({} skipped); trained on {} seed pairs",
        stats.trie_paths, stats.keywords, stats.keywords_skipped, stats.seed_pairs - stats.seed_pairs_skipped
    );
    Ok(())
}

pub fn cmd_retrieve(cfg: &RunConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let query_path = cfg.require(&cfg.queries, "queries")?;
    let seed_path = cfg.require(&cfg.seed_pairs, "seed_pairs")?;
    let keyword_path = cfg.require(&cfg.keywords, "keywords")?;
    let canon = load_canonicalizer(cfg)?;
    let artifacts = load_artifacts(cfg)?;
    let queries = load_items(query_path)?;
    let d_old = load_pairs(seed_path)?;
    let keywords: std::collections::HashSet<String> = load_items(keyword_path)?.into_iter().collect();
    let load_ms = ms(start);

    let retrieval = retrieve(&queries, &artifacts, &canon, &beam_config(cfg), cfg.workers)
        .map_err(|e| InputError(e.to_string()))?;
    let merge_start = Instant::now();
    let (d_new, delta, generated) = merge_retrieval(&d_old, &retrieval);
    if !d_old.is_subset(&d_new) {
        bail!(InvariantViolation("d_old is not contained in d_new".into()));
    }
    if let Some((q, k)) = delta.pairs().find(|(_, k)| !keywords.contains(*k)) {
        bail!(InvariantViolation(format!("retrieved keyword {k:?} for {q:?} is not in the repository")));
    }

    let out = |name: &str| cfg.out.join(name);
    write_text(&out("d_new.tsv"), &d_new.to_tsv())?;
    write_text(&out("delta.tsv"), &delta.to_tsv())?;
    write_text(&out("generated.tsv"), &generated.to_tsv())?;
    let merge_ms = ms(merge_start);

    let mut inputs = Files::default();
    inputs.add("queries", query_path)?;
    inputs.add("seed_pairs", seed_path)?;
    inputs.add("keywords", keyword_path)?;
    lexicon_inputs(cfg, &mut inputs)?;
    let dir = cfg.artifacts_dir();
    for name in [kwaug::pipeline::TRIE_FILE, kwaug::pipeline::MODEL_FILE, kwaug::pipeline::TABLE_FILE] {
        inputs.add(name, &dir.join(name))?;
    }
    let mut outputs = Files::default();
    for name in ["d_new.tsv", "delta.tsv", "generated.tsv"] {
        outputs.add(name, &out(name))?;
    }
    let counts = json!({
        "strategy": artifacts.strategy.to_string(),
        "queries": queries.len(),
        "queries_skipped": retrieval.skipped,
        "generated_pairs": generated.pair_count(),
        "d_old_pairs": d_old.pair_count(),
        "d_new_pairs": d_new.pair_count(),
        "delta_pairs": delta.pair_count(),
        "diff_ratio": if d_old.is_empty() { 0.0 } else { delta.pair_count() as f64 / d_old.pair_count() as f64 },
    });
    write_manifest(cfg, "retrieve", inputs, outputs, counts)?;
    let decode_ms = retrieval.decode_seconds * 1000.0;
    write_timing(
        cfg,
        "retrieve",
        json!({
            "load_ms": load_ms,
            "decode_ms": decode_ms,
            "decode_ms_per_query": retrieval.ms_per_query(),
            "merge_ms": merge_ms,
            "total_ms": ms(start),
        }),
    )?;
    println!(
        "decoded {} queries ({} skipped) in {:.1} ms/query; {} new pairs",
        queries.len(),
        retrieval.skipped,
        retrieval.ms_per_query(),
        delta.pair_count()
    );
    Ok(())
}

/// Owns whatever a scorer borrows. Built once per command, so the size gap
/// between variants does not matter.
#[allow(clippy::large_enum_variant)]
enum ScorerSource {
    External(ExternalScores),
    Classifier {
        classifier: LinearClassifier,
        canon: Canonicalizer,
        stats: CorpusStats,
        artifacts: Artifacts,
    },
}

impl ScorerSource {
    fn load(cfg: &RunConfig, inputs: &mut Files) -> anyhow::Result<Self> {
        match &cfg.score_source {
            ScoreSource::None => bail!(InputError("no score source configured (set score_source)".into())),
            ScoreSource::External(path) => {
                let path = Path::new(path);
                if !path.exists() {
                    bail!(InputError(format!("score_source: file not found: {}", path.display())));
                }
                inputs.add("scores", path)?;
                let scores = kwaug::discriminant::load_external_scores(path).map_err(|e| input_err(path, e))?;
                Ok(Self::External(scores))
            }
            ScoreSource::Classifier(path) => {
                let path = Path::new(path);
                let text = config::read_input(path)?;
                inputs.add("classifier", path)?;
                let classifier = LinearClassifier::from_snapshot(&text).map_err(|e| input_err(path, e))?;
                let (canon, stats, artifacts) = feature_context(cfg, inputs)?;
                Ok(Self::Classifier {
                    classifier,
                    canon,
                    stats,
                    artifacts,
                })
            }
        }
    }

    fn scorer(&self) -> Box<dyn PairScorer + '_> {
        match self {
            Self::External(scores) => Box::new(scores),
            Self::Classifier {
                classifier,
                canon,
                stats,
                artifacts,
            } => Box::new(ClassifierScorer {
                classifier,
                extractor: FeatureExtractor::new(canon, stats).with_model(&artifacts.model, artifacts.strategy),
            }),
        }
    }

    fn duplicates(&self) -> usize {
        match self {
            Self::External(scores) => scores.duplicates,
            Self::Classifier { .. } => 0,
        }
    }
}

/// Lexicons, keyword statistics and the translation model used for
/// classifier features.
fn feature_context(cfg: &RunConfig, inputs: &mut Files) -> anyhow::Result<(Canonicalizer, CorpusStats, Artifacts)> {
    let keyword_path = cfg.require(&cfg.keywords, "keywords")?;
    inputs.add("keywords", keyword_path)?;
    lexicon_inputs(cfg, inputs)?;
    let canon = load_canonicalizer(cfg)?;
    let keywords = load_items(keyword_path)?;
    let stats = CorpusStats::build(&keywords, &canon);
    let artifacts = load_artifacts(cfg)?;
    Ok((canon, stats, artifacts))
}

pub fn cmd_filter(cfg: &RunConfig) -> anyhow::Result<()> {
    let input = cfg.input.clone().unwrap_or_else(|| cfg.out.join("delta.tsv"));
    let input = cfg.require(&Some(input), "input")?.to_path_buf();
    let mut inputs = Files::default();
    inputs.add("input", &input)?;
    let delta = load_pairs(&input)?;
    let source = ScorerSource::load(cfg, &mut inputs)?;
    let scorer = source.scorer();
    let filtered = run_filter_stage(&delta, scorer.as_ref(), cfg.threshold).map_err(|e| InputError(e.to_string()))?;
    if !filtered.is_subset(&delta) {
        bail!(InvariantViolation("filter produced pairs that were not in its input".into()));
    }

    let mut outputs = Files::default();
    let filtered_path = cfg.out.join("delta.filtered.tsv");
    write_text(&filtered_path, &filtered.to_tsv())?;
    outputs.add("delta.filtered.tsv", &filtered_path)?;
    if let Some(seed_path) = optional_input(&cfg.seed_pairs, "seed_pairs")? {
        inputs.add("seed_pairs", seed_path)?;
        let mut d_new = load_pairs(seed_path)?;
        d_new.merge(&filtered);
        let path = cfg.out.join("d_new.filtered.tsv");
        write_text(&path, &d_new.to_tsv())?;
        outputs.add("d_new.filtered.tsv", &path)?;
    }
    let counts = json!({
        "input_pairs": delta.pair_count(),
        "retained_pairs": filtered.pair_count(),
        "removed_pairs": delta.pair_count() - filtered.pair_count(),
        "duplicate_scores": source.duplicates(),
    });
    write_manifest(cfg, "filter", inputs, outputs, counts)?;
    println!("kept {} of {} pairs at threshold {}", filtered.pair_count(), delta.pair_count(), cfg.threshold);
    Ok(())
}

fn load_labeled(path: &Path) -> anyhow::Result<Vec<LabeledPair>> {
    let text = config::read_input(path)?;
    Ok(read_labeled(&text)
        .map_err(|e| input_err(path, e))?
        .into_iter()
        .map(|(query, keyword, label)| LabeledPair { query, keyword, label })
        .collect())
}

pub fn cmd_train_filter(cfg: &RunConfig) -> anyhow::Result<()> {
    let labeled_path = cfg.require(&cfg.labeled, "labeled")?;
    let mut inputs = Files::default();
    inputs.add("labeled", labeled_path)?;
    let data = load_labeled(labeled_path)?;
    let (canon, stats, artifacts) = feature_context(cfg, &mut inputs)?;
    let extractor = FeatureExtractor::new(&canon, &stats).with_model(&artifacts.model, artifacts.strategy);
    let params = TrainParams {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        ..TrainParams::default()
    };
    let classifier = train_classifier(&data, |q, k| extractor.extract(q, k), &params)
        .map_err(|e| input_err(labeled_path, e))?;

    let path = cfg.out.join("classifier.txt");
    write_text(&path, &classifier.to_snapshot())?;
    let mut outputs = Files::default();
    outputs.add("classifier.txt", &path)?;
    let counts = json!({
        "pairs": data.len(),
        "positives": data.iter().filter(|p| p.label).count(),
        "epochs": classifier.epochs,
        "initial_loss": classifier.loss_history.first(),
        "final_loss": classifier.loss_history.last(),
    });
    write_manifest(cfg, "train-filter", inputs, outputs, counts)?;
    println!(
        "trained on {} pairs; loss {:.4} -> {:.4}",
        data.len(),
        classifier.loss_history.first().unwrap_or(&f64::NAN),
        classifier.loss_history.last().unwrap_or(&f64::NAN)
    );
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> anyhow::Result<()> {
    let generated_path = cfg.generated.clone().unwrap_or_else(|| cfg.out.join("generated.tsv"));
    let generated_path = cfg.require(&Some(generated_path), "generated")?.to_path_buf();
    let reference_path = cfg.require(&cfg.reference, "reference")?;
    let mut inputs = Files::default();
    inputs.add("generated", &generated_path)?;
    inputs.add("reference", reference_path)?;
    lexicon_inputs(cfg, &mut inputs)?;
    let canon = load_canonicalizer(cfg)?;
    let d1 = load_pairs(&generated_path)?;
    let d_test = load_pairs(reference_path)?;
    let mut report = generation_metrics(&d1, &d_test, &canon).map_err(|e| input_err(reference_path, e))?;
    report.strategy = match Artifacts::load(cfg.artifacts_dir()) {
        Ok(a) => format!("{}-M", a.strategy),
        Err(_) => format!("{}-M", cfg.strategy),
    };
    report.beam_size = cfg.beam;

    let mut outputs = Files::default();
    if let Some(labeled_path) = optional_input(&cfg.labeled, "labeled")? {
        if cfg.score_source != ScoreSource::None {
            inputs.add("labeled", labeled_path)?;
            let data = load_labeled(labeled_path)?;
            let source = ScorerSource::load(cfg, &mut inputs)?;
            let scorer = source.scorer();
            let scored: Vec<(f64, bool)> = data
                .iter()
                .map(|p| scorer.score(&p.query, &p.keyword).map(|s| (s, p.label)))
                .collect::<kwaug::Result<_>>()
                .map_err(|e| InputError(e.to_string()))?;
            report.auc = Some(auc(&scored).map_err(|e| input_err(labeled_path, e))?);
            report.recall_at_p = Some(recall_at_precision(&scored, 0.95).map_err(|e| input_err(labeled_path, e))?);
            report.scored_pairs = scored.len();
        }
    }
    if let Some(n) = cfg.sample_size {
        let pairs: Vec<(&str, &str)> = d1.pairs().collect();
        let sample = precision_sample(&pairs, n, cfg.seed).map_err(|e| InputError(e.to_string()))?;
        let path = cfg.out.join("precision_sample.tsv");
        write_text(&path, &sample.iter().map(|(q, k)| format!("{q}\t{k}\n")).collect::<String>())?;
        outputs.add("precision_sample.tsv", &path)?;
        report.precision_sample = sample.len();
    }
    if let Some(labels_path) = optional_input(&cfg.sample_labels, "sample_labels")? {
        inputs.add("sample_labels", labels_path)?;
        let labels: Vec<bool> = load_labeled(labels_path)?.into_iter().map(|p| p.label).collect();
        report.precision = Some(precision(&labels));
        report.precision_sample = labels.len();
    }

    let metrics_path = cfg.out.join("metrics.json");
    std::fs::create_dir_all(&cfg.out)?;
    write_json(&metrics_path, &report)?;
    outputs.add("metrics.json", &metrics_path)?;
    write_manifest(cfg, "eval", inputs, outputs, serde_json::to_value(&report)?)?;

    // Decoding time is wall-clock, so it only goes in the human-readable table.
    let mut row = report.clone();
    let timing_path = cfg.out.join("retrieve.timing.json");
    if let Ok(text) = std::fs::read_to_string(&timing_path) {
        if let Ok(timing) = serde_json::from_str::<serde_json::Value>(&text) {
            row.decode_ms_per_query = timing["decode_ms_per_query"].as_f64();
        }
    }
    let table = render_table(&[row]);
    write_text(&cfg.out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn read_check(text: &str) -> anyhow::Result<()> {
    read_lines(text).map(|_| ()).map_err(|e| InvariantViolation(e.to_string()).into())
}

pub fn cmd_gen_synthetic(cfg: &RunConfig, concepts: usize, train_concepts: usize) -> anyhow::Result<()> {
    let synth = SyntheticConfig {
        seed: cfg.seed,
        concepts,
        train_concepts,
        ..SyntheticConfig::default()
    };
    let corpus = generate(&synth);
    let files: [(&str, String); 8] = [
        ("pos_lexicon.tsv", corpus.pos_lexicon_tsv.clone()),
        ("ordered_lexicon.tsv", corpus.ordered_lexicon_tsv.clone()),
        ("keywords.txt", corpus.keywords.iter().map(|k| format!("{k}\n")).collect()),
        ("seed_pairs.tsv", corpus.seed_pairs.to_tsv()),
        ("test_queries.txt", corpus.test_queries.iter().map(|q| format!("{q}\n")).collect()),
        ("test_pairs.tsv", corpus.test_pairs.to_tsv()),
        ("labeled.tsv", corpus.labeled_tsv()),
        ("injected_pairs.tsv", corpus.injected_pairs.to_tsv()),
    ];
    let mut outputs = Files::default();
    for (name, text) in &files {
        if name.ends_with(".txt") {
            read_check(text)?;
        }
        let path = cfg.out.join(name);
        write_text(&path, text)?;
        outputs.add(name, &path)?;
    }
    let config = format!(
        "# Run from this directory: kwaug build --config config.toml\n\
         seed_pairs = \"seed_pairs.tsv\"\n\
         keywords = \"keywords.txt\"\n\
         queries = \"test_queries.txt\"\n\
         pos_lexicon = \"pos_lexicon.tsv\"\n\
         ordered_lexicon = \"ordered_lexicon.tsv\"\n\
         reference = \"test_pairs.tsv\"\n\
         labeled = \"labeled.tsv\"\n\
         out = \"run\"\n\
         strategy = \"BCW\"\n\
         beam = 30\n\
         seed = {}\n",
        cfg.seed
    );
    let config_path = cfg.out.join("config.toml");
    write_text(&config_path, &config)?;
    outputs.add("config.toml", &config_path)?;
    let counts = json!({
        "keywords": corpus.keywords.len(),
        "seed_pairs": corpus.seed_pairs.pair_count(),
        "test_queries": corpus.test_queries.len(),
        "test_pairs": corpus.test_pairs.pair_count(),
        "labeled_pairs": corpus.labeled.len(),
        "injected_pairs": corpus.injected_pairs.pair_count(),
        "injected_variants": corpus.injected_count,
    });
    write_manifest(cfg, "gen-synthetic", Files::default(), outputs, counts)?;
    println!(
        "wrote {} keywords, {} seed pairs and {} test queries to {}",
        corpus.keywords.len(),
        corpus.seed_pairs.pair_count(),
        corpus.test_queries.len(),
        cfg.out.display()
    );
    Ok(())
}
