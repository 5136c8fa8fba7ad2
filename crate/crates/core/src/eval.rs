//! Offline retrieval metrics, discriminator metrics and online log formulas.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PairDataset;
use crate::error::{Error, Result};
use crate::text::Canonicalizer;

/// `|d1 − d_test| / |d_test|`.
pub fn diff_ratio(d1: &PairDataset, d_test: &PairDataset) -> Result<f64> {
    if d_test.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(d1.difference(d_test).pair_count() as f64 / d_test.pair_count() as f64)
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts
                .entry(window.iter().map(AsRef::as_ref).collect())
                .or_default() += 1;
        }
    }
    counts
}

/// BLEU up to order `n` against a single reference.
pub fn bleu_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Result<f64> {
    bleu_n_multi(candidate, std::slice::from_ref(&reference), n)
}

/// BLEU up to order `n`: geometric mean of add-one smoothed, clipped n-gram
/// precisions times the brevity penalty against the closest reference
/// length.
pub fn bleu_n_multi<S: AsRef<str>, R: AsRef<[S]>>(candidate: &[S], references: &[R], n: usize) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    if n == 0 {
        return Err(Error::InvalidConfig("BLEU order must be at least 1".into()));
    }
    let mut log_sum = 0.0;
    for order in 1..=n {
        let cand = ngram_counts(candidate, order);
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for reference in references {
            for (gram, c) in ngram_counts(reference.as_ref(), order) {
                let slot = max_ref.entry(gram).or_default();
                *slot = (*slot).max(c);
            }
        }
        let clipped: usize = cand
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = candidate.len().saturating_sub(order - 1);
        log_sum += ((clipped as f64 + 1.0) / (total as f64 + 1.0)).ln();
    }

    let c = candidate.len();
    let r = references
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(0);
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / n as f64).exp())
}

/// Distinct n-grams over total n-grams across the corpus.
pub fn dist_n<S: AsRef<str>>(corpus: &[Vec<S>], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
    }
    let mut distinct: HashSet<Vec<&str>> = HashSet::new();
    let mut total = 0usize;
    for sentence in corpus {
        for window in sentence.windows(n) {
            distinct.insert(window.iter().map(AsRef::as_ref).collect());
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(distinct.len() as f64 / total as f64)
}

fn split_classes(scored: &[(f64, bool)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (pos, neg): (Vec<&(f64, bool)>, Vec<_>) = scored.iter().partition(|(_, label)| *label);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    Ok((pos.iter().map(|p| p.0).collect(), neg.iter().map(|n| n.0).collect()))
}

/// Probability that a random positive outranks a random negative, ties
/// counted one half, by exhaustive pair counting.
pub fn auc(scored: &[(f64, bool)]) -> Result<f64> {
    let (pos, neg) = split_classes(scored)?;
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

/// Maximum recall over all thresholds `score ≥ t` whose retained set has
/// precision at least `target`; 0 when no threshold qualifies.
pub fn recall_at_precision(scored: &[(f64, bool)], target: f64) -> Result<f64> {
    let (pos, _) = split_classes(scored)?;
    let positives = pos.len() as f64;
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best = 0.0f64;
    let (mut tp, mut retained) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            retained += 1;
            tp += sorted[i].1 as usize;
            i += 1;
        }
        if tp as f64 / retained as f64 >= target {
            best = best.max(tp as f64 / positives);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineMetrics {
    pub show: u64,
    pub ctr: f64,
    pub acp: f64,
    pub cpm: f64,
    /// Set when there were no clicks and ACP was reported as 0.
    pub acp_undefined: bool,
}

/// CTR = clicks / searches, ACP = revenue / clicks, CPM = CTR · ACP · 1000.
pub fn online_metrics(searches: u64, clicks: u64, revenue: f64, shows: u64) -> Result<OnlineMetrics> {
    if searches == 0 {
        return Err(Error::ZeroSearches);
    }
    if clicks == 0 && revenue != 0.0 {
        return Err(Error::RevenueWithoutClicks { revenue });
    }
    let ctr = clicks as f64 / searches as f64;
    let (acp, acp_undefined) = if clicks == 0 {
        (0.0, true)
    } else {
        (revenue / clicks as f64, false)
    };
    Ok(OnlineMetrics {
        show: shows,
        ctr,
        acp,
        cpm: ctr * acp * 1000.0,
        acp_undefined,
    })
}

/// Seeded uniform sample without replacement, in sampling order.
pub fn precision_sample<T: Clone>(items: &[T], size: usize, seed: u64) -> Result<Vec<T>> {
    if size > items.len() {
        return Err(Error::SampleTooLarge {
            requested: size,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, items.len(), size)
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}

/// Fraction of positive labels; 0 for an empty sample.
pub fn precision(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64
}

/// One row of the strategy comparison table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub strategy: String,
    pub beam_size: usize,
    pub diff_ratio: f64,
    pub bleu2: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub precision: Option<f64>,
    pub auc: Option<f64>,
    pub recall_at_p: Option<f64>,
    pub decode_ms_per_query: Option<f64>,
    pub generated_pairs: usize,
    pub reference_pairs: usize,
    pub bleu_pairs: usize,
    pub precision_sample: usize,
    pub scored_pairs: usize,
}

/// Diff ratio, mean BLEU-2 and Dist-1/2 of generated pairs `d1` against the
/// reference set. BLEU scores each generated keyword against all reference
/// keywords of its query; queries without references are skipped.
pub fn generation_metrics(d1: &PairDataset, d_test: &PairDataset, canon: &Canonicalizer) -> Result<MetricReport> {
    let diff = diff_ratio(d1, d_test)?;
    let tokens = |s: &str| canon.tokenize(s).surfaces();

    let mut bleu_total = 0.0;
    let mut bleu_pairs = 0usize;
    let mut corpus = Vec::with_capacity(d1.pair_count());
    for query in d1.queries() {
        let generated = d1.keywords(query).into_iter().flatten();
        let references: Option<Vec<Vec<String>>> = d_test
            .keywords(query)
            .map(|ks| ks.iter().map(|k| tokens(k)).collect());
        for keyword in generated {
            let cand = tokens(keyword);
            if cand.is_empty() {
                continue;
            }
            if let Some(refs) = &references {
                bleu_total += bleu_n_multi(&cand, refs, 2)?;
                bleu_pairs += 1;
            }
            corpus.push(cand);
        }
    }
    let (dist1, dist2) = if corpus.is_empty() {
        (0.0, 0.0)
    } else {
        (dist_n(&corpus, 1)?, dist_n(&corpus, 2).unwrap_or(0.0))
    };
    Ok(MetricReport {
        diff_ratio: diff,
        bleu2: if bleu_pairs == 0 { 0.0 } else { bleu_total / bleu_pairs as f64 },
        dist1,
        dist2,
        generated_pairs: d1.pair_count(),
        reference_pairs: d_test.pair_count(),
        bleu_pairs,
        ..MetricReport::default()
    })
}

/// Renders rows with the columns Strategy, Beam Size, Diff ratio, BLEU-2,
/// Dist-1/2, Precision and Decoding Time.
pub fn render_table(rows: &[MetricReport]) -> String {
    let header = [
        "Strategy",
        "Beam Size",
        "Diff ratio",
        "BLEU-2",
        "Dist-1/2",
        "Precision",
        "Decoding Time (ms/query)",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.strategy.clone(),
                r.beam_size.to_string(),
                format!("{:.3}%", r.diff_ratio * 100.0),
                format!("{:.3}", r.bleu2),
                format!("{:.4}/{:.3}", r.dist1, r.dist2),
                r.precision.map_or("-".into(), |p| format!("{:.1}%", p * 100.0)),
                r.decode_ms_per_query.map_or("-".into(), |t| format!("{t:.1}")),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|row| row[c].chars().count())
                .chain([header[c].len()])
                .max()
                .unwrap()
        })
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn diff_ratio_cases() {
        let test: PairDataset = [("q", "a"), ("q", "b"), ("r", "c"), ("r", "d")].into_iter().collect();
        assert_eq!(diff_ratio(&test, &test).unwrap(), 0.0);
        let disjoint: PairDataset = [("q", "w"), ("q", "x"), ("r", "y"), ("r", "z")].into_iter().collect();
        assert_eq!(diff_ratio(&disjoint, &test).unwrap(), 1.0);
        let mixed: PairDataset = [("q", "a"), ("r", "c"), ("q", "n1"), ("q", "n2"), ("s", "n3")]
            .into_iter()
            .collect();
        assert!((diff_ratio(&mixed, &test).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(diff_ratio(&test, &PairDataset::new()), Err(Error::EmptyReference)));
    }

    #[test]
    fn bleu_cases() {
        let a = toks("a b c");
        assert!((bleu_n(&a, &a, 2).unwrap() - 1.0).abs() < 1e-12);
        let disjoint = toks("x y z");
        assert!((bleu_n(&disjoint, &a, 1).unwrap() - 1.0 / 4.0).abs() < 1e-12);
        // p1 = 3/4, p2 = 2/3
        let got = bleu_n(&a, &toks("a b d"), 2).unwrap();
        assert!((got - (0.75f64 * 2.0 / 3.0).sqrt()).abs() < 1e-12);
        assert!(matches!(bleu_n::<String>(&[], &a, 2), Err(Error::EmptyCandidate)));
    }

    #[test]
    fn bleu_brevity_penalty() {
        // c = 2, r = 4: BP = exp(1 - 2)
        let got = bleu_n(&toks("a b"), &toks("a b c d"), 1).unwrap();
        assert!((got - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dist_cases() {
        let same = vec![toks("a b c"), toks("a b c"), toks("a b c")];
        assert!((dist_n(&same, 2).unwrap() - 2.0 / 6.0).abs() < 1e-12);
        let apart = vec![toks("a b"), toks("c d")];
        assert_eq!(dist_n(&apart, 1).unwrap(), 1.0);
        assert!((dist_n(&[toks("a b"), toks("a c")], 1).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(dist_n::<String>(&[], 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn auc_cases() {
        let fixture = [(0.9, true), (0.4, true), (0.6, false), (0.1, false)];
        assert!((auc(&fixture).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(auc(&[(0.9, true), (0.1, false)]).unwrap(), 1.0);
        assert_eq!(auc(&[(0.5, true), (0.5, false), (0.5, true)]).unwrap(), 0.5);
        assert!(matches!(auc(&[(0.5, true)]), Err(Error::SingleClass)));
    }

    #[test]
    fn recall_at_precision_cases() {
        let perfect = [(0.9, true), (0.8, true), (0.2, false)];
        assert_eq!(recall_at_precision(&perfect, 0.95).unwrap(), 1.0);
        let hopeless = [(0.9, false), (0.8, false), (0.2, true)];
        assert_eq!(recall_at_precision(&hopeless, 0.95).unwrap(), 0.0);
    }

    #[test]
    fn online_cases() {
        let m = online_metrics(1000, 50, 10.0, 70).unwrap();
        assert!((m.ctr - 0.05).abs() < 1e-15);
        assert!((m.acp - 0.2).abs() < 1e-15);
        assert!((m.cpm - 10.0).abs() < 1e-9);
        assert_eq!(m.show, 70);
        let none = online_metrics(1000, 0, 0.0, 5).unwrap();
        assert!(none.acp_undefined && none.cpm == 0.0);
        assert!(matches!(online_metrics(0, 0, 0.0, 0), Err(Error::ZeroSearches)));
        assert!(online_metrics(10, 0, 3.0, 0).is_err());
    }

    #[test]
    fn sampling() {
        let items: Vec<u32> = (0..100).collect();
        let a = precision_sample(&items, 10, 7).unwrap();
        assert_eq!(a, precision_sample(&items, 10, 7).unwrap());
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 10);
        assert!(matches!(precision_sample(&items, 101, 7), Err(Error::SampleTooLarge { .. })));
        assert_eq!(precision(&[true, true, true, false]), 0.75);
        assert_eq!(precision(&[true; 4]), 1.0);
    }

    #[test]
    fn table_has_all_columns() {
        let row = MetricReport {
            strategy: "BCW".into(),
            beam_size: 30,
            diff_ratio: 0.72522,
            precision: Some(0.825),
            decode_ms_per_query: Some(2.5),
            ..MetricReport::default()
        };
        let table = render_table(&[row]);
        assert!(table.starts_with("Strategy"));
        assert!(table.contains("72.522%") && table.contains("82.5%"));
    }
}
