//! Pair features, a logistic-regression discriminator, external score files
//! and threshold filtering.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::dataset::records;
use crate::error::{Error, Result};
use crate::eval::bleu_n;
use crate::text::{Canonicalizer, Strategy};
use crate::translation::ScoringModel;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Stand-in for a missing translation score.
pub const TRANSLATION_SENTINEL: f64 = -1e9;

pub const FEATURE_NAMES: [&str; 7] = [
    "max_match_len",
    "match_ratio",
    "miss_ratio",
    "bm25",
    "bleu1",
    "bleu2",
    "translation_logprob",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub max_match_len: usize,
    pub match_ratio: f64,
    pub miss_ratio: f64,
    pub bm25: f64,
    pub bleu1: f64,
    pub bleu2: f64,
    pub translation_logprob: f64,
}

impl PairFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.max_match_len as f64,
            self.match_ratio,
            self.miss_ratio,
            self.bm25,
            self.bleu1,
            self.bleu2,
            self.translation_logprob,
        ]
    }
}

/// Document frequencies and average length of the keyword repository, for
/// BM25.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    doc_freq: HashMap<String, usize>,
    docs: usize,
    avg_len: f64,
}

impl CorpusStats {
    pub fn build<S: AsRef<str>>(keywords: &[S], canon: &Canonicalizer) -> Self {
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_len = 0usize;
        for keyword in keywords {
            let tokens = canon.tokenize(keyword.as_ref()).surfaces();
            total_len += tokens.len();
            let unique: HashSet<String> = tokens.into_iter().collect();
            for token in unique {
                *doc_freq.entry(token).or_default() += 1;
            }
        }
        let docs = keywords.len();
        Self {
            doc_freq,
            docs,
            avg_len: if docs == 0 { 0.0 } else { total_len as f64 / docs as f64 },
        }
    }

    pub fn docs(&self) -> usize {
        self.docs
    }

    fn idf(&self, term: &str) -> f64 {
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (self.docs as f64 - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 of `doc` for the distinct terms of `query`.
    pub fn bm25<S: AsRef<str>>(&self, query: &[S], doc: &[S]) -> f64 {
        let mut tf: HashMap<&str, usize> = HashMap::new();
        for t in doc {
            *tf.entry(t.as_ref()).or_default() += 1;
        }
        let norm = 1.0 - BM25_B + BM25_B * doc.len() as f64 / self.avg_len.max(f64::MIN_POSITIVE);
        // ordered so the floating-point sum is reproducible
        let terms: BTreeSet<&str> = query.iter().map(AsRef::as_ref).collect();
        terms
            .into_iter()
            .map(|term| {
                let f = tf.get(term).copied().unwrap_or(0) as f64;
                if f == 0.0 {
                    0.0
                } else {
                    self.idf(term) * f * (BM25_K1 + 1.0) / (f + BM25_K1 * norm)
                }
            })
            .sum()
    }
}

/// Longest run of consecutive tokens shared by both sequences.
pub fn longest_common_run<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut best = 0;
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            if x.as_ref() == y.as_ref() {
                cur[j + 1] = prev[j] + 1;
                best = best.max(cur[j + 1]);
            }
        }
        prev = cur;
    }
    best
}

fn common_multiset<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in b {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    a.iter()
        .filter(|t| match counts.get_mut(t.as_ref()) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

/// Computes [`PairFeatures`] for query/keyword pairs.
pub struct FeatureExtractor<'a> {
    canon: &'a Canonicalizer,
    stats: &'a CorpusStats,
    model: Option<(&'a dyn ScoringModel, Strategy)>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(canon: &'a Canonicalizer, stats: &'a CorpusStats) -> Self {
        Self {
            canon,
            stats,
            model: None,
        }
    }

    /// Enables the translation feature: the model's log-probability of the
    /// keyword's transformed sequence given the query's transformed form.
    pub fn with_model(mut self, model: &'a dyn ScoringModel, strategy: Strategy) -> Self {
        self.model = Some((model, strategy));
        self
    }

    pub fn extract(&self, query: &str, keyword: &str) -> Result<PairFeatures> {
        extract_features(query, keyword, self.canon, self.stats, self.model)
    }
}

pub fn extract_features(
    query: &str,
    keyword: &str,
    canon: &Canonicalizer,
    stats: &CorpusStats,
    model: Option<(&dyn ScoringModel, Strategy)>,
) -> Result<PairFeatures> {
    if stats.docs == 0 {
        return Err(Error::MissingStats);
    }
    let q = canon.tokenize(query).surfaces();
    let k = canon.tokenize(keyword).surfaces();
    let common = common_multiset(&q, &k) as f64;
    let match_ratio = if q.is_empty() { 0.0 } else { common / q.len() as f64 };
    let miss_ratio = if k.is_empty() { 1.0 } else { 1.0 - common / k.len() as f64 };
    let (bleu1, bleu2) = if k.is_empty() {
        (0.0, 0.0)
    } else {
        (bleu_n(&k, &q, 1)?, bleu_n(&k, &q, 2)?)
    };
    let translation_logprob = match model {
        Some((model, strategy)) => {
            let source = canon.transform(strategy, query).form;
            let target = canon.transform(strategy, keyword).sequence;
            let target: Vec<&str> = target.iter().map(String::as_str).collect();
            model.sequence_logprob(&source, &target).max(TRANSLATION_SENTINEL)
        }
        None => TRANSLATION_SENTINEL,
    };
    Ok(PairFeatures {
        max_match_len: longest_common_run(&q, &k),
        match_ratio,
        miss_ratio,
        bm25: stats.bm25(&q, &k),
        bleu1,
        bleu2,
        translation_logprob,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub query: String,
    pub keyword: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub query: String,
    pub keyword: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.2,
            l2: 1e-3,
        }
    }
}

/// Logistic regression over z-score normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    /// Training loss before each epoch and after the last one.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `l2/2·‖w‖²`, with its gradient in `(weights,
/// bias)`.
pub fn loss_and_gradient(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[bool], l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let t = label as u8 as f64;
        loss += softplus(z) - t * z;
        let err = sigmoid(z) - t;
        for (g, a) in grad.iter_mut().zip(row) {
            *g += err * a;
        }
        grad_b += err;
    }
    loss /= n;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss, grad, grad_b / n)
}

impl LinearClassifier {
    /// Untrained classifier with identity normalization.
    pub fn zeros(features: usize) -> Self {
        Self {
            means: vec![0.0; features],
            stds: vec![1.0; features],
            weights: vec![0.0; features],
            bias: 0.0,
            epochs: 0,
            loss_history: Vec::new(),
        }
    }

    pub fn normalize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// `logistic(w·x̂ + b)`.
    pub fn predict(&self, features: &[f64]) -> f64 {
        let x = self.normalize(features);
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
    }

    /// Full-batch gradient descent from zero weights.
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &TrainParams) -> Result<Self> {
        if !(y.iter().any(|&l| l) && y.iter().any(|&l| !l)) {
            return Err(Error::SingleClassCorpus);
        }
        let dims = x[0].len();
        let n = x.len() as f64;
        let means: Vec<f64> = (0..dims).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds: Vec<f64> = (0..dims)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 { var.sqrt() } else { 1.0 }
            })
            .collect();
        let mut clf = Self {
            means,
            stds,
            ..Self::zeros(dims)
        };
        let xn: Vec<Vec<f64>> = x.iter().map(|r| clf.normalize(r)).collect();

        for _ in 0..params.epochs {
            let (loss, grad, grad_b) = loss_and_gradient(&clf.weights, clf.bias, &xn, y, params.l2);
            clf.loss_history.push(loss);
            for (w, g) in clf.weights.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            clf.bias -= params.learning_rate * grad_b;
        }
        clf.loss_history
            .push(loss_and_gradient(&clf.weights, clf.bias, &xn, y, params.l2).0);
        clf.epochs = params.epochs;
        Ok(clf)
    }

    /// Versioned text snapshot.
    pub fn to_snapshot(&self) -> String {
        let mut out = format!("kwaug-classifier\t1\nbias\t{:e}\nepochs\t{}\n", self.bias, self.epochs);
        for (j, w) in self.weights.iter().enumerate() {
            let name = FEATURE_NAMES.get(j).copied().unwrap_or("feature");
            out.push_str(&format!("feature\t{name}\t{:e}\t{:e}\t{w:e}\n", self.means[j], self.stds[j]));
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l) != Some("kwaug-classifier\t1") {
            return Err(Error::Snapshot("missing or unsupported classifier header".into()));
        }
        let mut clf = Self::zeros(0);
        for (i, line) in lines {
            let bad = || Error::Parse {
                line: i + 1,
                message: "malformed classifier line".into(),
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            match line.split('\t').collect::<Vec<_>>().as_slice() {
                ["bias", v] => clf.bias = num(v)?,
                ["epochs", v] => clf.epochs = v.parse().map_err(|_| bad())?,
                ["feature", _, m, s, w] => {
                    clf.means.push(num(m)?);
                    clf.stds.push(num(s)?);
                    clf.weights.push(num(w)?);
                }
                _ => return Err(bad()),
            }
        }
        Ok(clf)
    }
}

/// Extracts features for every pair and fits the classifier.
pub fn train_classifier<F>(data: &[LabeledPair], features: F, params: &TrainParams) -> Result<LinearClassifier>
where
    F: Fn(&str, &str) -> Result<PairFeatures>,
{
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let x: Vec<Vec<f64>> = data
        .iter()
        .map(|p| features(&p.query, &p.keyword).map(|f| f.to_vec()))
        .collect::<Result<_>>()?;
    let y: Vec<bool> = data.iter().map(|p| p.label).collect();
    LinearClassifier::fit(&x, &y, params)
}

pub fn score<F>(classifier: &LinearClassifier, query: &str, keyword: &str, features: F) -> Result<f64>
where
    F: Fn(&str, &str) -> Result<PairFeatures>,
{
    Ok(classifier.predict(&features(query, keyword)?.to_vec()))
}

/// Anything that can score a query/keyword pair in `[0, 1]`.
pub trait PairScorer: Sync {
    fn score(&self, query: &str, keyword: &str) -> Result<f64>;
}

impl<T: PairScorer + ?Sized> PairScorer for &T {
    fn score(&self, query: &str, keyword: &str) -> Result<f64> {
        (**self).score(query, keyword)
    }
}

pub struct ClassifierScorer<'a> {
    pub classifier: &'a LinearClassifier,
    pub extractor: FeatureExtractor<'a>,
}

impl PairScorer for ClassifierScorer<'_> {
    fn score(&self, query: &str, keyword: &str) -> Result<f64> {
        score(self.classifier, query, keyword, |q, k| self.extractor.extract(q, k))
    }
}

/// Scores produced elsewhere, keyed by `(query, keyword)`.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    scores: HashMap<(String, String), f64>,
    /// Keys that appeared more than once; the last value wins.
    pub duplicates: usize,
}

impl ExternalScores {
    /// Parses `query<TAB>keyword<TAB>score` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (line, fields) in records(text) {
            let [q, k, s] = fields.as_slice() else {
                return Err(Error::Parse {
                    line,
                    message: "expected query<TAB>keyword<TAB>score".into(),
                });
            };
            let score: f64 = s.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad score {s:?}"),
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::ScoreOutOfRange { line, score });
            }
            if out.scores.insert((q.to_string(), k.to_string()), score).is_some() {
                out.duplicates += 1;
            }
        }
        Ok(out)
    }

    pub fn get(&self, query: &str, keyword: &str) -> Option<f64> {
        // Borrowed tuple lookups are not supported by HashMap, so allocate.
        self.scores.get(&(query.to_string(), keyword.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn load_external_scores(path: impl AsRef<Path>) -> Result<ExternalScores> {
    ExternalScores::parse(&std::fs::read_to_string(path)?)
}

impl PairScorer for ExternalScores {
    fn score(&self, query: &str, keyword: &str) -> Result<f64> {
        self.get(query, keyword).ok_or_else(|| Error::MissingScore {
            query: query.to_string(),
            keyword: keyword.to_string(),
        })
    }
}

/// Keeps pairs with score ≥ `threshold`, in input order.
pub fn filter_pairs<'p, I>(pairs: I, scorer: &dyn PairScorer, threshold: f64) -> Result<Vec<(&'p str, &'p str)>>
where
    I: IntoIterator<Item = (&'p str, &'p str)>,
{
    let mut kept = Vec::new();
    for (q, k) in pairs {
        if scorer.score(q, k)? >= threshold {
            kept.push((q, k));
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> Canonicalizer {
        Canonicalizer::default()
    }

    fn stats(canon: &Canonicalizer) -> CorpusStats {
        CorpusStats::build(&["a b c", "b c d", "x y", "d e"], canon)
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identity_profile() {
        let c = canon();
        let s = stats(&c);
        let f = extract_features("a b c", "a b c", &c, &s, None).unwrap();
        assert_eq!(f.max_match_len, 3);
        assert_eq!((f.match_ratio, f.miss_ratio), (1.0, 0.0));
        assert!((f.bleu1 - 1.0).abs() < 1e-12 && (f.bleu2 - 1.0).abs() < 1e-12);
        assert_eq!(f.translation_logprob, TRANSLATION_SENTINEL);
    }

    #[test]
    fn disjoint_profile() {
        let c = canon();
        let s = stats(&c);
        let f = extract_features("a b c", "x y z", &c, &s, None).unwrap();
        assert_eq!(f.match_ratio, 0.0);
        assert_eq!(f.bm25, 0.0);
        // add-one floor 1 / (len + 1)
        assert!((f.bleu1 - 0.25).abs() < 1e-12);
    }

    /// Brute force: try every start pair and extend.
    fn brute_common_run(a: &[String], b: &[String]) -> usize {
        let mut best = 0;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut len = 0;
                while i + len < a.len() && j + len < b.len() && a[i + len] == b[j + len] {
                    len += 1;
                }
                best = best.max(len);
            }
        }
        best
    }

    #[test]
    fn partial_overlap() {
        let c = canon();
        let s = stats(&c);
        let f = extract_features("a b c", "b c d", &c, &s, None).unwrap();
        assert_eq!(f.max_match_len, 2);
        assert_eq!(f.max_match_len, brute_common_run(&toks("a b c"), &toks("b c d")));
        assert!((f.match_ratio - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.miss_ratio - 1.0 / 3.0).abs() < 1e-12);
        assert!(f.bm25 > 0.0);
    }

    #[test]
    fn common_run_matches_brute_force() {
        let cases = ["a b a b c", "c a b", "b b b", "", "a"];
        for x in cases {
            for y in cases {
                assert_eq!(longest_common_run(&toks(x), &toks(y)), brute_common_run(&toks(x), &toks(y)));
            }
        }
    }

    #[test]
    fn missing_stats() {
        let c = canon();
        assert!(matches!(
            extract_features("a", "b", &c, &CorpusStats::default(), None),
            Err(Error::MissingStats)
        ));
    }

    #[test]
    fn bm25_hand_value() {
        let c = canon();
        let s = stats(&c);
        // df(a) = 1, N = 4, avgdl = 10/4
        let idf = (1.0f64 + (4.0 - 1.0 + 0.5) / 1.5).ln();
        let norm = 1.0 - BM25_B + BM25_B * 3.0 / 2.5;
        let expected = idf * 2.2 / (1.0 + BM25_K1 * norm);
        assert!((s.bm25(&toks("a"), &toks("a b c")) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_classifier_scores_half() {
        let clf = LinearClassifier::zeros(7);
        assert_eq!(clf.predict(&[0.0; 7]), 0.5);
        let mut biased = LinearClassifier::zeros(7);
        biased.bias = 1.3;
        assert!((biased.predict(&[0.0; 7]) - sigmoid(1.3)).abs() < 1e-15);
    }

    #[test]
    fn two_feature_arithmetic() {
        let clf = LinearClassifier {
            means: vec![1.0, 2.0],
            stds: vec![2.0, 4.0],
            weights: vec![0.5, -1.0],
            bias: 0.1,
            ..LinearClassifier::zeros(2)
        };
        // x̂ = (1.5, 0.5); z = 0.1 + 0.75 - 0.5 = 0.35
        let expected = 1.0 / (1.0 + (-0.35f64).exp());
        assert!((clf.predict(&[4.0, 4.0]) - expected).abs() < 1e-15);
        assert!(clf.predict(&[5.0, 4.0]) > clf.predict(&[4.0, 4.0]));
    }

    #[test]
    fn separable_toy_set() {
        let c = canon();
        let keywords = ["a b", "c d", "e f", "g h", "i j", "k l"];
        let s = CorpusStats::build(&keywords, &c);
        let mut data = Vec::new();
        for (i, k) in keywords.iter().enumerate() {
            data.push(LabeledPair { query: k.to_string(), keyword: k.to_string(), label: true });
            let other = keywords[(i + 1) % keywords.len()];
            data.push(LabeledPair { query: k.to_string(), keyword: other.to_string(), label: false });
        }
        let fe = FeatureExtractor::new(&c, &s);
        let clf = train_classifier(&data, |q, k| fe.extract(q, k), &TrainParams::default()).unwrap();
        for p in &data {
            let sc = score(&clf, &p.query, &p.keyword, |q, k| fe.extract(q, k)).unwrap();
            assert_eq!(sc >= 0.5, p.label, "{p:?} scored {sc}");
        }
        assert!(clf.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            LinearClassifier::fit(&x, &[true, true], &TrainParams::default()),
            Err(Error::SingleClassCorpus)
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = vec![vec![0.5, -1.0], vec![1.5, 2.0], vec![-0.3, 0.7]];
        let y = [true, false, true];
        let w = [0.2, -0.4];
        let b = 0.1;
        let (_, grad, grad_b) = loss_and_gradient(&w, b, &x, &y, 0.01);
        let h = 1e-6;
        for j in 0..2 {
            let mut up = w;
            let mut down = w;
            up[j] += h;
            down[j] -= h;
            let fd = (loss_and_gradient(&up, b, &x, &y, 0.01).0 - loss_and_gradient(&down, b, &x, &y, 0.01).0) / (2.0 * h);
            assert!((fd - grad[j]).abs() / grad[j].abs().max(1e-8) < 1e-5);
        }
        let fd_b = (loss_and_gradient(&w, b + h, &x, &y, 0.01).0 - loss_and_gradient(&w, b - h, &x, &y, 0.01).0) / (2.0 * h);
        assert!((fd_b - grad_b).abs() / grad_b.abs().max(1e-8) < 1e-5);
    }

    #[test]
    fn classifier_snapshot_round_trip() {
        let clf = LinearClassifier {
            means: vec![1.0, 0.1],
            stds: vec![2.0, 0.3],
            weights: vec![0.5, -1.0 / 3.0],
            bias: 0.1,
            epochs: 12,
            loss_history: vec![],
        };
        assert_eq!(LinearClassifier::from_snapshot(&clf.to_snapshot()).unwrap(), clf);
        assert!(LinearClassifier::from_snapshot("garbage").is_err());
    }

    #[test]
    fn external_scores() {
        let s = ExternalScores::parse("q\ta\t0.1\nq\tb\t0.9\nr\tc\t1\n").unwrap();
        assert_eq!(s.len(), 3);
        assert!(matches!(
            ExternalScores::parse("q\ta\t0.2\nq\tb\t1.5\n"),
            Err(Error::ScoreOutOfRange { line: 2, .. })
        ));
        assert!(matches!(ExternalScores::parse("q\ta\n"), Err(Error::Parse { line: 1, .. })));
        let dup = ExternalScores::parse("q\ta\t0.2\nq\ta\t0.7\n").unwrap();
        assert_eq!(dup.duplicates, 1);
        assert_eq!(dup.get("q", "a"), Some(0.7));
    }

    #[test]
    fn filtering() {
        let scores = ExternalScores::parse("q\ta\t0.3\nq\tb\t0.9\nq\tc\t0.95\n").unwrap();
        let pairs = [("q", "a"), ("q", "b"), ("q", "c")];
        assert_eq!(filter_pairs(pairs, &scores, 0.0).unwrap().len(), 3);
        assert!(filter_pairs(pairs, &scores, 1.01).unwrap().is_empty());
        assert_eq!(filter_pairs(pairs, &scores, 0.9).unwrap(), [("q", "b"), ("q", "c")]);
        assert!(matches!(
            filter_pairs([("q", "zzz")], &scores, 0.5),
            Err(Error::MissingScore { .. })
        ));
    }
}
