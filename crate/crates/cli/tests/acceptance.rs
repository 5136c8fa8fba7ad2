//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kwaug::discriminant::{
    filter_pairs, loss_and_gradient, train_classifier, ClassifierScorer, CorpusStats, ExternalScores,
    FeatureExtractor, PairScorer, TrainParams,
};
use kwaug::eval::{auc, bleu_n, diff_ratio, dist_n, generation_metrics, online_metrics, recall_at_precision};
use kwaug::pipeline::{build_artifacts, canonical_dedup, retrieve, Artifacts, Retrieval, TrainConfig};
use kwaug::synthetic::{generate, SyntheticConfig, SyntheticCorpus};
use kwaug::translation::{
    constrained_beam_search, train_bigram_lm_with_vocab, train_lexical_table, BeamConfig, DefaultModel, Next,
    ScoringModel,
};
use kwaug::{build_trie, CanonicalForm, Canonicalizer, KeywordTrie, PairDataset, Strategy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const BEAM: usize = 30;
const MEMBERSHIP_SECONDS: f64 = 60.0;
const TREND_SECONDS: f64 = 300.0;
const DEDUP_SLACK: f64 = 0.01;
const METRIC_TOL: f64 = 1e-9;
const EM_SLACK: f64 = 1e-9;
const FORCED_TOL: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_STEP: f64 = 1e-5;
const BEAM_SCORE_TOL: f64 = 1e-9;
const MIN_QPS: f64 = 100.0;

struct Run {
    artifacts: Artifacts,
    retrieval: Retrieval,
    build_seconds: f64,
    diff: f64,
}

fn run_strategy(corpus: &SyntheticCorpus, canon: &Canonicalizer, strategy: Strategy) -> Run {
    let start = Instant::now();
    let (artifacts, _) =
        build_artifacts(&corpus.seed_pairs, &corpus.keywords, canon, strategy, &TrainConfig::default()).unwrap();
    let build_seconds = start.elapsed().as_secs_f64();
    let retrieval = retrieve(&corpus.test_queries, &artifacts, canon, &BeamConfig::with_beam(BEAM), 1).unwrap();
    let d1 = retrieval.generated();
    let diff = generation_metrics(&d1, &corpus.test_pairs, canon).unwrap().diff_ratio;
    Run {
        artifacts,
        retrieval,
        build_seconds,
        diff,
    }
}

struct Shared {
    corpus: SyntheticCorpus,
    canon: Canonicalizer,
    runs: BTreeMap<Strategy, Run>,
    trend_seconds: f64,
}

fn shared() -> Shared {
    let corpus = generate(&SyntheticConfig::default());
    let canon = corpus.canonicalizer();
    let start = Instant::now();
    let runs = [Strategy::Base, Strategy::Cw, Strategy::Bcw]
        .into_iter()
        .map(|s| (s, run_strategy(&corpus, &canon, s)))
        .collect();
    Shared {
        trend_seconds: start.elapsed().as_secs_f64(),
        corpus,
        canon,
        runs,
    }
}

type Check = Result<String, String>;

type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Check + 'a>);

fn verdict(pass: bool, detail: String) -> Check {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Every keyword reached through the inverse table is in the repository and
/// transforms back to the decoded path.
fn membership(s: &Shared) -> Check {
    let run = &s.runs[&Strategy::Bcw];
    let start = Instant::now();
    let repo: BTreeSet<&str> = s.corpus.keywords.iter().map(String::as_str).collect();
    let mut violations = 0usize;
    let mut checked = 0usize;
    for result in &run.retrieval.results {
        for decoded in &result.decoded {
            if !run.artifacts.trie.contains(&decoded.tokens) {
                violations += 1;
            }
            for k in run.artifacts.keywords_for(decoded).unwrap() {
                checked += 1;
                let back = s.canon.transform(Strategy::Bcw, k).sequence;
                if !repo.contains(k.as_str()) || back != decoded.tokens {
                    violations += 1;
                }
            }
        }
    }
    let queries = run.retrieval.results.len() + run.retrieval.skipped;
    let seconds = run.build_seconds + run.retrieval.decode_seconds + start.elapsed().as_secs_f64();
    verdict(
        violations == 0 && queries == 1000 && repo.len() == 10_000 && seconds < MEMBERSHIP_SECONDS,
        format!(
            "{queries} queries, {} keywords, {checked} joined keywords, {violations} violations, {seconds:.1}s (< {MEMBERSHIP_SECONDS}s)",
            repo.len()
        ),
    )
}

/// Every complete path of the trie, scored with the model in decoding order,
/// sorted best first with ties broken by token order.
fn exhaustive(source: &CanonicalForm, trie: &KeywordTrie, model: &dyn ScoringModel) -> Vec<(Vec<String>, f64)> {
    fn walk(trie: &KeywordTrie, node: kwaug::trie::NodeId, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if trie.is_terminal(node).unwrap() {
            out.push(prefix.clone());
        }
        for &(token, child) in trie.children(node).unwrap() {
            prefix.push(trie.token(token).to_string());
            walk(trie, child, prefix, out);
            prefix.pop();
        }
    }
    let mut paths = Vec::new();
    walk(trie, KeywordTrie::ROOT, &mut Vec::new(), &mut paths);
    let mut scored: Vec<(Vec<String>, f64)> = paths
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

fn random_tokens(rng: &mut ChaCha8Rng, vocab: &[String], max_len: usize) -> Vec<String> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect()
}

fn beam_vs_exhaustive() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vocab: Vec<String> = (0..7).map(|i| format!("w{i}")).collect();
    let src_vocab: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
    let mut mismatches = 0usize;
    let mut largest = 0usize;
    for _ in 0..200 {
        let wanted = rng.gen_range(1..=200);
        let seqs: BTreeSet<Vec<String>> = (0..wanted).map(|_| random_tokens(&mut rng, &vocab, 4)).collect();
        let seqs: Vec<Vec<String>> = seqs.into_iter().collect();
        let trie = build_trie(&seqs).unwrap();
        assert!(trie.path_count() <= 200);
        largest = largest.max(trie.path_count());

        let pairs: Vec<(CanonicalForm, Vec<String>)> = (0..rng.gen_range(3..15))
            .map(|_| {
                let free = random_tokens(&mut rng, &src_vocab, 3);
                (CanonicalForm::new(free, vec![]), seqs.choose(&mut rng).unwrap().clone())
            })
            .collect();
        let lex = train_lexical_table(&pairs, 5).unwrap();
        let targets: Vec<Vec<String>> = pairs.iter().map(|(_, t)| t.clone()).collect();
        let lm = train_bigram_lm_with_vocab(&targets, trie.vocab(), 0.1).unwrap();
        let model = DefaultModel::new(lex, lm, 0.5, 1e-6).unwrap();
        let source = CanonicalForm::new(random_tokens(&mut rng, &src_vocab, 3), vec![]);

        let beam = constrained_beam_search(&source, &trie, &model, &BeamConfig::with_beam(trie.path_count())).unwrap();
        let oracle = exhaustive(&source, &trie, &model);
        let same = beam.len() == oracle.len()
            && beam
                .iter()
                .zip(&oracle)
                .all(|(d, (tokens, score))| &d.tokens == tokens && (d.score - score).abs() <= BEAM_SCORE_TOL);
        if !same {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("200 tries (largest {largest} paths), {mismatches} mismatches"),
    )
}

fn trend(s: &Shared) -> Check {
    let (base, cw, bcw) = (s.runs[&Strategy::Base].diff, s.runs[&Strategy::Cw].diff, s.runs[&Strategy::Bcw].diff);
    verdict(
        bcw >= 2.0 * base && bcw >= cw && cw >= base && s.trend_seconds < TREND_SECONDS,
        format!(
            "diff BASE {base:.4}, CW {cw:.4}, BCW {bcw:.4} at B={BEAM}; ratio {:.2} (>= 2); {:.1}s (< {TREND_SECONDS}s)",
            bcw / base,
            s.trend_seconds
        ),
    )
}

fn dedup(s: &Shared) -> Check {
    let pairs = &s.corpus.injected_pairs;
    let kept = canonical_dedup(pairs, &s.canon, Strategy::Bcw);
    let shrinkage = 1.0 - kept.pair_count() as f64 / pairs.pair_count() as f64;
    let injected = s.corpus.injected_count as f64 / pairs.pair_count() as f64;
    verdict(
        shrinkage >= injected - DEDUP_SLACK,
        format!(
            "{} -> {} pairs, shrinkage {:.4}, injected fraction {:.4} (slack {DEDUP_SLACK})",
            pairs.pair_count(),
            kept.pair_count(),
            shrinkage,
            injected
        ),
    )
}

fn metrics() -> Check {
    let close = |a: f64, b: f64| (a - b).abs() <= METRIC_TOL;
    let mut failures = Vec::new();

    let auc_value = auc(&[(0.9, true), (0.4, true), (0.6, false), (0.1, false)]).unwrap();
    if !close(auc_value, 0.75) {
        failures.push(format!("auc {auc_value}"));
    }

    let d_test: PairDataset = [("q", "a"), ("q", "b"), ("r", "c"), ("r", "d")].into_iter().collect();
    let d1: PairDataset = [("q", "a"), ("r", "c"), ("q", "x"), ("q", "y"), ("r", "z")].into_iter().collect();
    let diff = diff_ratio(&d1, &d_test).unwrap();
    if !close(diff, 0.75) {
        failures.push(format!("diff {diff}"));
    }

    let dist1 = dist_n(&[vec!["a", "b"], vec!["a", "c"]], 1).unwrap();
    let dist2 = dist_n(&vec![vec!["a", "b", "c"]; 4], 2).unwrap();
    if !close(dist1, 0.75) || !close(dist2, 0.25) {
        failures.push(format!("dist {dist1} {dist2}"));
    }

    // add-one smoothing: p1 = (2+1)/(3+1), p2 = (1+1)/(2+1), no brevity penalty
    let bleu = bleu_n(&["a", "b", "c"], &["a", "b", "d"], 2).unwrap();
    if !close(bleu, (0.75f64 * 2.0 / 3.0).sqrt()) {
        failures.push(format!("bleu {bleu}"));
    }
    let exact = bleu_n(&["a", "b", "c"], &["a", "b", "c"], 2).unwrap();
    if !close(exact, 1.0) {
        failures.push(format!("bleu identity {exact}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let shows = rng.gen_range(1..100_000u64);
        let clicks = rng.gen_range(1..=shows);
        let searches = rng.gen_range(1..1_000_000u64);
        let revenue = rng.gen_range(0.0..10_000.0);
        let m = online_metrics(searches, clicks, revenue, shows).unwrap();
        let identity = m.ctr * m.acp * 1000.0;
        if (m.cpm - identity).abs() > METRIC_TOL * m.cpm.abs().max(1.0) {
            failures.push(format!("cpm {} vs {identity}", m.cpm));
            break;
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("auc {auc_value}, diff {diff}, dist {dist1}/{dist2}, bleu2 {bleu:.12}, cpm identity x1000 (tol {METRIC_TOL:e})")
        } else {
            failures.join("; ")
        },
    )
}

fn filtering(s: &Shared) -> Check {
    let bcw = &s.runs[&Strategy::Bcw].artifacts;
    let stats = CorpusStats::build(&s.corpus.keywords, &s.canon);
    let extractor = FeatureExtractor::new(&s.canon, &stats).with_model(&bcw.model, bcw.strategy);
    let classifier = train_classifier(&s.corpus.labeled, |q, k| extractor.extract(q, k), &TrainParams::default()).unwrap();
    let scorer = ClassifierScorer {
        classifier: &classifier,
        extractor: FeatureExtractor::new(&s.canon, &stats).with_model(&bcw.model, bcw.strategy),
    };
    let scored: Vec<(f64, bool)> = s
        .corpus
        .labeled
        .iter()
        .map(|p| (scorer.score(&p.query, &p.keyword).unwrap(), p.label))
        .collect();
    let targets = [0.5, 0.8, 0.9, 0.95, 0.99];
    let recalls: Vec<f64> = targets.iter().map(|&p| recall_at_precision(&scored, p).unwrap()).collect();
    let sweep_ok = recalls.windows(2).all(|w| w[1] <= w[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..200);
        let text: String = (0..n)
            .map(|i| format!("q{}\tk{i}\t{}\n", i % 7, rng.gen_range(0.0..=1.0f64)))
            .collect();
        let scores = ExternalScores::parse(&text).unwrap();
        let pairs: Vec<(String, String)> = (0..n).map(|i| (format!("q{}", i % 7), format!("k{i}"))).collect();
        let refs = pairs.iter().map(|(q, k)| (q.as_str(), k.as_str()));
        let mut taus: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..=1.0)).collect();
        taus.sort_by(f64::total_cmp);
        let kept: Vec<BTreeSet<(&str, &str)>> = taus
            .iter()
            .map(|&t| filter_pairs(refs.clone(), &scores, t).unwrap().into_iter().collect())
            .collect();
        if kept.windows(2).any(|w| !w[1].is_subset(&w[0])) {
            violations += 1;
        }
    }
    verdict(
        sweep_ok && violations == 0 && scored.len() == 1000,
        format!(
            "recall@p {:?} over {:?} on {} pairs; 100 score sets, {violations} monotonicity violations",
            recalls.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
            targets,
            scored.len()
        ),
    )
}

fn em() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let src: Vec<String> = (0..8).map(|i| format!("s{i}")).collect();
    let tgt: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let mut decreases = 0usize;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let pairs: Vec<(CanonicalForm, Vec<String>)> = (0..rng.gen_range(2..25))
            .map(|_| {
                (
                    CanonicalForm::new(random_tokens(&mut rng, &src, 4), vec![]),
                    random_tokens(&mut rng, &tgt, 4),
                )
            })
            .collect();
        let table = train_lexical_table(&pairs, 10).unwrap();
        for w in table.log_likelihoods().windows(2) {
            worst = worst.min(w[1] - w[0]);
            if w[1] < w[0] - EM_SLACK * w[0].abs().max(1.0) {
                decreases += 1;
            }
        }
    }

    let forced: Vec<(CanonicalForm, Vec<String>)> = (0..50)
        .map(|i| {
            let j = i % 8;
            (CanonicalForm::new(vec![src[j].clone()], vec![]), vec![tgt[j].clone()])
        })
        .collect();
    let table = train_lexical_table(&forced, 10).unwrap();
    let max_err = (0..8).map(|j| (table.prob(&tgt[j], &src[j]) - 1.0).abs()).fold(0.0, f64::max);
    verdict(
        decreases == 0 && max_err <= FORCED_TOL,
        format!("100 corpora x 10 iterations, {decreases} decreases (min step {worst:.3e}); forced alignment |p-1| <= {max_err:.1e}"),
    )
}

fn gradient() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(5..40);
        let d = rng.gen_range(1..8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let l2 = rng.gen_range(0.0..0.1);
        let (_, grad, grad_b) = loss_and_gradient(&w, b, &x, &y, l2);
        let rel = |analytic: f64, numeric: f64| {
            let scale = analytic.abs().max(numeric.abs());
            if scale < 1e-7 {
                0.0
            } else {
                (analytic - numeric).abs() / scale
            }
        };
        for i in 0..d {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += GRAD_STEP;
            down[i] -= GRAD_STEP;
            let numeric = (loss_and_gradient(&up, b, &x, &y, l2).0 - loss_and_gradient(&down, b, &x, &y, l2).0)
                / (2.0 * GRAD_STEP);
            worst = worst.max(rel(grad[i], numeric));
        }
        let numeric_b = (loss_and_gradient(&w, b + GRAD_STEP, &x, &y, l2).0
            - loss_and_gradient(&w, b - GRAD_STEP, &x, &y, l2).0)
            / (2.0 * GRAD_STEP);
        worst = worst.max(rel(grad_b, numeric_b));
    }
    verdict(
        worst <= GRAD_REL_TOL,
        format!("20 batches, worst relative error {worst:.2e} (<= {GRAD_REL_TOL:.0e})"),
    )
}

fn kwaug(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_kwaug")).args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "kwaug {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// gen-synthetic, build, retrieve, train-filter, filter, eval in a fresh
/// directory; returns file name → sha256 for the compared outputs.
fn pipeline_run() -> BTreeMap<String, String> {
    let tmp = tempfile::tempdir().unwrap();
    kwaug(tmp.path(), &["gen-synthetic", "--out", "syn", "--concepts", "300", "--train-concepts", "180"]);
    let dir = tmp.path().join("syn");
    let scored = ["--config", "config.toml", "--score-source", "classifier:run/classifier.txt"];
    kwaug(&dir, &["build", "--config", "config.toml"]);
    kwaug(&dir, &["retrieve", "--config", "config.toml", "--workers", "4"]);
    kwaug(&dir, &["train-filter", "--config", "config.toml"]);
    kwaug(&dir, &[&["filter"], &scored[..]].concat());
    kwaug(&dir, &[&["eval"], &scored[..]].concat());
    let mut hashes = BTreeMap::new();
    for rel in [
        "gen-synthetic.manifest.json",
        "run/delta.tsv",
        "run/delta.filtered.tsv",
        "run/build.manifest.json",
        "run/retrieve.manifest.json",
        "run/train-filter.manifest.json",
        "run/filter.manifest.json",
        "run/eval.manifest.json",
    ] {
        let bytes = std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        hashes.insert(rel.to_string(), hex::encode(Sha256::digest(&bytes)));
    }
    hashes
}

fn reproducible() -> Check {
    let first = pipeline_run();
    let second = pipeline_run();
    let differing: Vec<&String> = first.keys().filter(|k| first[*k] != second[*k]).collect();
    verdict(
        differing.is_empty(),
        format!(
            "{} files compared, delta.tsv sha256 {}..., differing: {differing:?}",
            first.len(),
            &first["run/delta.tsv"][..12]
        ),
    )
}

/// Queries per second for one worker, on the BCW trie and on the BASE trie,
/// which has one path per keyword.
fn throughput(s: &Shared) -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    for strategy in [Strategy::Bcw, Strategy::Base] {
        let run = &s.runs[&strategy];
        let r = &run.retrieval;
        let queries = r.results.len() + r.skipped;
        let qps = queries as f64 / r.decode_seconds;
        pass &= qps >= MIN_QPS;
        lines.push(format!(
            "{strategy} {qps:.0} queries/s ({queries} queries, {}-path trie)",
            run.artifacts.trie.path_count()
        ));
    }
    verdict(pass, format!("B={BEAM}, 1 worker: {} (>= {MIN_QPS})", lines.join(", ")))
}

fn main() {
    let shared = shared();
    let criteria: Vec<Criterion> = vec![
        ("1", "inverse-join membership", Box::new(|| membership(&shared))),
        ("2", "beam equals exhaustive", Box::new(beam_vs_exhaustive)),
        ("3", "strategy trend", Box::new(|| trend(&shared))),
        ("4", "BCW dedup shrinkage", Box::new(|| dedup(&shared))),
        ("5", "metric exactness", Box::new(metrics)),
        ("6", "filter sweep and monotonicity", Box::new(|| filtering(&shared))),
        ("7", "EM monotonicity and forced alignment", Box::new(em)),
        ("8", "gradient check", Box::new(gradient)),
        ("9", "reproducible pipeline", Box::new(reproducible)),
        ("10", "decoding throughput", Box::new(|| throughput(&shared))),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
