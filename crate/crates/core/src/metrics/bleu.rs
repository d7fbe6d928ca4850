use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    /// 0–100.
    pub score: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts<T: Hash + Eq>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Integer sufficient statistics of one hypothesis against its references.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Stats {
    matches: [usize; MAX_ORDER],
    totals: [usize; MAX_ORDER],
    hyp_len: usize,
    ref_len: usize,
}

impl Stats {
    fn add(mut self, other: Stats) -> Stats {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }
}

/// Reference length closest to `hyp_len`; ties go to the shorter reference.
fn closest_ref_len<R: AsRef<[T]>, T>(hyp_len: usize, refs: &[R]) -> usize {
    refs.iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn sentence_stats<T: Hash + Eq, R: AsRef<[T]>>(hyp: &[T], refs: &[R]) -> Stats {
    let mut stats = Stats {
        hyp_len: hyp.len(),
        ref_len: closest_ref_len(hyp.len(), refs),
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(hyp, n);
        // Clip against the largest count of each n-gram in any single reference.
        let mut max_ref: HashMap<&[T], usize> = HashMap::new();
        for r in refs {
            for (gram, c) in ngram_counts(r.as_ref(), n) {
                let e = max_ref.entry(gram).or_insert(0);
                *e = (*e).max(c);
            }
        }
        stats.matches[n - 1] = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
        stats.totals[n - 1] = hyp.len().saturating_sub(n - 1);
    }
    stats
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp().min(1.0)
    }
}

fn compose(precisions: [f64; MAX_ORDER], stats: &Stats) -> BleuScore {
    let brevity_penalty = brevity_penalty(stats.hyp_len, stats.ref_len);
    let score = if precisions.iter().all(|&p| p > 0.0) {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        (100.0 * brevity_penalty * mean_log.exp()).clamp(0.0, 100.0)
    } else {
        0.0
    };
    BleuScore {
        precisions,
        brevity_penalty,
        score,
        hyp_len: stats.hyp_len,
        ref_len: stats.ref_len,
    }
}

/// Corpus BLEU-4 with multi-reference clipping and closest-length brevity.
/// Statistics are summed as integers before any division, so the result does
/// not depend on evaluation order. An order with no hypothesis n-grams at all
/// is 0/0 and counts as 1, so a short hypothesis can still match exactly.
pub fn corpus_bleu<T, H, R>(hypotheses: &[H], references: &[Vec<R>]) -> Result<BleuScore>
where
    T: Hash + Eq + Sync,
    H: AsRef<[T]> + Sync,
    R: AsRef<[T]> + Sync,
{
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            what: "hypotheses and reference sets",
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("reference set {i} is empty")));
    }
    let stats = hypotheses
        .par_iter()
        .zip(references.par_iter())
        .map(|(h, r)| sentence_stats(h.as_ref(), r))
        .reduce(Stats::default, Stats::add);
    let precisions: [f64; MAX_ORDER] = std::array::from_fn(|n| {
        if stats.totals[n] > 0 {
            stats.matches[n] as f64 / stats.totals[n] as f64
        } else {
            1.0
        }
    });
    Ok(compose(precisions, &stats))
}

/// Sentence BLEU with +1 smoothing of orders 2–4; order 1 is unsmoothed. An
/// order the hypothesis is too short for contributes (0+1)/(0+1) = 1.
pub fn sentence_bleu_smoothed<T, R>(hypothesis: &[T], references: &[R]) -> BleuScore
where
    T: Hash + Eq,
    R: AsRef<[T]>,
{
    let stats = sentence_stats(hypothesis, references);
    let precisions: [f64; MAX_ORDER] = std::array::from_fn(|n| match n {
        0 if stats.totals[0] > 0 => stats.matches[0] as f64 / stats.totals[0] as f64,
        0 => 0.0,
        _ => (stats.matches[n] + 1) as f64 / (stats.totals[n] + 1) as f64,
    });
    compose(precisions, &stats)
}

/// Shorthand for the score of [`sentence_bleu_smoothed`].
pub fn sentence_bleu<T, R>(hypothesis: &[T], references: &[R]) -> f64
where
    T: Hash + Eq,
    R: AsRef<[T]>,
{
    sentence_bleu_smoothed(hypothesis, references).score
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_is_100() {
        let h = vec![toks("a b c d e"), toks("x y")];
        let refs: Vec<Vec<Vec<&str>>> = h.iter().map(|s| vec![s.clone()]).collect();
        assert!((corpus_bleu(&h, &refs).unwrap().score - 100.0).abs() < 1e-12);
        assert!((sentence_bleu(&h[0], &[h[0].clone()]) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_token_corpus_is_zero() {
        let s = corpus_bleu(&[toks("the the the")], &[vec![toks("the cat")]]).unwrap();
        assert!((s.precisions[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.precisions[1], 0.0);
        assert_eq!(s.score, 0.0);
    }

    #[test]
    fn brevity_case() {
        let s = corpus_bleu(&[toks("a b c d")], &[vec![toks("a b c d e")]]).unwrap();
        assert_eq!(s.precisions, [1.0; 4]);
        let bp = (1.0f64 - 5.0 / 4.0).exp();
        assert!((s.brevity_penalty - bp).abs() < 1e-12);
        assert!((s.score - 100.0 * bp).abs() < 1e-9);
        assert!((s.score - 77.88).abs() < 0.01);
    }

    #[test]
    fn smoothed_sentence_case() {
        let s = sentence_bleu_smoothed(&toks("the the the"), &[toks("the cat")]);
        let expected = 100.0 * (1.0f64 / 3.0 * 1.0 / 3.0 * 1.0 / 2.0 * 1.0).powf(0.25);
        assert!((s.score - expected).abs() < 1e-9);
        assert!((s.score - 48.55).abs() < 0.01);
        assert_eq!(s.brevity_penalty, 1.0);
        assert_eq!(sentence_bleu(&toks("x"), &[toks("y z")]), 0.0);
    }

    #[test]
    fn short_hypothesis_has_no_empty_order_penalty() {
        let s = corpus_bleu(&[toks("a")], &[vec![toks("a")]]).unwrap();
        assert!((s.score - 100.0).abs() < 1e-12);
        let s = corpus_bleu(&[toks("a")], &[vec![toks("a b c")]]).unwrap();
        assert!((s.score - 100.0 * (-2.0f64).exp()).abs() < 1e-9);
        assert_eq!(corpus_bleu(&[toks("x")], &[vec![toks("a b")]]).unwrap().score, 0.0);
    }

    #[test]
    fn clips_against_best_single_reference() {
        // "a a" against {"a b", "a a"}: the second reference allows two matches.
        let s = corpus_bleu(&[toks("a a")], &[vec![toks("a b"), toks("a a")]]).unwrap();
        assert_eq!(s.precisions[0], 1.0);
    }

    #[test]
    fn closest_length_prefers_shorter_on_ties() {
        let refs = [toks("a b"), toks("a b c d")];
        assert_eq!(closest_ref_len(3, &refs), 2);
        assert_eq!(closest_ref_len(4, &refs), 4);
    }

    #[test]
    fn mismatch_errors() {
        let refs: Vec<Vec<Vec<&str>>> = vec![];
        assert!(corpus_bleu(&[toks("a")], &refs).is_err());
        assert!(corpus_bleu(&[toks("a")], &[Vec::<Vec<&str>>::new()]).is_err());
    }
}
