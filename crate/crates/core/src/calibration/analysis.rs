use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CopyDetector, ParallelCorpus, TokenId, UNK};
use crate::metrics::sentence_bleu;
use crate::model::{sequence_log_prob, ConditionalSequenceModel};
use crate::rng::derive_seed;
use crate::search::{default_max_len, sample};
use crate::{Error, Result};

/// Values at the requested percentiles by the nearest-rank rule: the
/// `ceil(q/100 · N)`-th smallest value (the smallest for `q = 0`).
pub fn nearest_rank_quantiles(values: &[f64], quantiles: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to summarize".into()));
    }
    if let Some(q) = quantiles.iter().find(|q| !(0.0..=100.0).contains(*q)) {
        return Err(Error::InvalidArgument(format!("quantile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(quantiles
        .iter()
        .map(|q| {
            let rank = (q / 100.0 * n as f64).ceil() as usize;
            sorted[rank.clamp(1, n) - 1]
        })
        .collect())
}

/// Pools the per-position probabilities (EOS included) of every output
/// across the corpus, then takes nearest-rank quantiles.
pub fn token_prob_quantiles<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    outputs: &[Vec<TokenId>],
    quantiles: &[f64],
) -> Result<Vec<f64>> {
    if sources.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            what: "sources and outputs",
            left: sources.len(),
            right: outputs.len(),
        });
    }
    let per_sentence: Vec<Vec<f64>> = sources
        .par_iter()
        .zip(outputs.par_iter())
        .map(|(s, o)| {
            Ok(sequence_log_prob(model, s, o)?
                .token_log_probs
                .iter()
                .map(|lp| lp.exp())
                .collect())
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = per_sentence.into_iter().flatten().collect();
    nearest_rank_quantiles(&pooled, quantiles)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionStat {
    /// 1-based target position.
    pub position: usize,
    pub mean_prob: f64,
    pub count: usize,
}

/// Mean model probability of the output token at each position; sentences
/// shorter than a position drop out of that position's mean.
pub fn per_position_avg_prob<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    outputs: &[Vec<TokenId>],
) -> Result<Vec<PositionStat>> {
    if sources.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            what: "sources and outputs",
            left: sources.len(),
            right: outputs.len(),
        });
    }
    let scores: Vec<Vec<f64>> = sources
        .par_iter()
        .zip(outputs.par_iter())
        .map(|(s, o)| Ok(sequence_log_prob(model, s, o)?.token_log_probs))
        .collect::<Result<_>>()?;
    let longest = outputs.iter().map(Vec::len).max().unwrap_or(0);
    let mut sums = vec![0.0; longest];
    let mut counts = vec![0usize; longest];
    for (lps, o) in scores.iter().zip(outputs) {
        for (k, lp) in lps[..o.len()].iter().enumerate() {
            sums[k] += lp.exp();
            counts[k] += 1;
        }
    }
    Ok((0..longest)
        .map(|k| PositionStat {
            position: k + 1,
            mean_prob: sums[k] / counts[k] as f64,
            count: counts[k],
        })
        .collect())
}

/// Each source rendered in the model's target vocabulary, token by token;
/// spellings the target vocabulary lacks become UNK.
pub fn copy_targets<M: ConditionalSequenceModel + ?Sized>(model: &M, sources: &[Vec<TokenId>]) -> Vec<Vec<TokenId>> {
    sources
        .iter()
        .map(|s| {
            model
                .source_vocab()
                .decode(s)
                .map(|w| model.target_vocab().id(w).unwrap_or(UNK))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceMatch {
    pub source: Vec<TokenId>,
    pub occurrences: usize,
    /// `(target, empirical probability, model probability)`, most frequent first.
    pub targets: Vec<(Vec<TokenId>, f64, f64)>,
    /// Total variation between the empirical and model distributions; model
    /// mass on unlisted targets counts in full.
    pub total_variation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RepeatedSourceReport {
    Found { sources: Vec<SourceMatch> },
    NoQualifyingSource,
}

/// Occurrences of each distinct target of one source.
type TargetCounts<'a> = BTreeMap<&'a [TokenId], usize>;

/// Compares, for every source occurring at least `min_occurrences` times, its
/// empirical target distribution with the model's. Ids are those of `corpus`;
/// the model is queried through token spellings.
pub fn repeated_source_match<M: ConditionalSequenceModel + ?Sized>(
    corpus: &ParallelCorpus,
    model: &M,
    min_occurrences: usize,
) -> Result<RepeatedSourceReport> {
    let mut groups: BTreeMap<&[TokenId], TargetCounts> = BTreeMap::new();
    for pair in corpus.pairs() {
        *groups.entry(&pair.source).or_default().entry(&pair.target).or_insert(0) += 1;
    }
    let qualifying: Vec<(&[TokenId], TargetCounts)> = groups
        .into_iter()
        .filter(|(_, targets)| targets.values().sum::<usize>() >= min_occurrences.max(1))
        .collect();
    if qualifying.is_empty() {
        return Ok(RepeatedSourceReport::NoQualifyingSource);
    }
    let mut sources: Vec<SourceMatch> = qualifying
        .par_iter()
        .map(|(source, targets)| {
            let occurrences: usize = targets.values().sum();
            let model_source = model.source_vocab().translate_ids(corpus.source_vocab(), source)?;
            let mut rows = Vec::with_capacity(targets.len());
            for (target, &count) in targets {
                let model_target = model.target_vocab().translate_ids(corpus.target_vocab(), target)?;
                let p = sequence_log_prob(model, &model_source, &model_target)?.log_prob.exp();
                rows.push((target.to_vec(), count as f64 / occurrences as f64, p));
            }
            rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let listed: f64 = rows.iter().map(|r| r.2).sum();
            let gaps: f64 = rows.iter().map(|r| (r.1 - r.2).abs()).sum();
            Ok(SourceMatch {
                source: source.to_vec(),
                occurrences,
                targets: rows,
                total_variation: 0.5 * (gaps + (1.0 - listed).max(0.0)),
            })
        })
        .collect::<Result<_>>()?;
    sources.sort_by(|a, b| b.occurrences.cmp(&a.occurrences).then_with(|| a.source.cmp(&b.source)));
    Ok(RepeatedSourceReport::Found { sources })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub log_prob: f64,
    pub bleu: f64,
    pub is_copy: bool,
}

/// One `(log_prob, BLEU)` point per sample, flagged when the sample copies
/// the source at the default IoU threshold.
pub fn logprob_bleu_scatter<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    reference: &[TokenId],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<ScatterPoint>> {
    let samples = sample(model, source, n_samples, seed, default_max_len(source.len()))?;
    let source_words: Vec<&str> = model.source_vocab().decode(source).collect();
    let detector = CopyDetector::new(&source_words);
    Ok(samples
        .into_iter()
        .map(|h| {
            let words: Vec<&str> = model.target_vocab().decode(&h.tokens).collect();
            ScatterPoint {
                log_prob: h.log_prob,
                bleu: sentence_bleu(&h.tokens, std::slice::from_ref(&reference)),
                is_copy: detector.is_copy(&words, crate::corpus::DEFAULT_COPY_THRESHOLD),
            }
        })
        .collect())
}

/// Running selections among the first `n` samples, averaged over sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub n: usize,
    /// Token-averaged probability `exp(norm_score)` of the best-scoring sample.
    pub best_logprob_prob: f64,
    pub best_logprob_bleu: f64,
    /// Highest sentence BLEU among the first `n` samples.
    pub best_bleu_bleu: f64,
    pub best_bleu_prob: f64,
}

pub fn selection_curves<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    references: &[Vec<TokenId>],
    n_max: usize,
    seed: u64,
) -> Result<Vec<SelectionPoint>> {
    if sources.len() != references.len() {
        return Err(Error::LengthMismatch {
            what: "sources and references",
            left: sources.len(),
            right: references.len(),
        });
    }
    if n_max == 0 || sources.is_empty() {
        return Err(Error::InvalidArgument("need at least one source and one sample".into()));
    }
    let per_source: Vec<Vec<[f64; 4]>> = sources
        .par_iter()
        .zip(references.par_iter())
        .enumerate()
        .map(|(i, (s, r))| {
            let samples = sample(model, s, n_max, derive_seed(seed, i as u64), default_max_len(s.len()))?;
            let mut by_score: Option<(f64, f64)> = None;
            let mut by_bleu: Option<(f64, f64)> = None;
            let mut curve = Vec::with_capacity(n_max);
            for h in &samples {
                let bleu = sentence_bleu(&h.tokens, std::slice::from_ref(r));
                let prob = h.norm_score.exp();
                if by_score.is_none_or(|(p, _)| prob > p) {
                    by_score = Some((prob, bleu));
                }
                if by_bleu.is_none_or(|(b, _)| bleu > b) {
                    by_bleu = Some((bleu, prob));
                }
                let (sp, sb) = by_score.unwrap();
                let (bb, bp) = by_bleu.unwrap();
                curve.push([sp, sb, bb, bp]);
            }
            Ok(curve)
        })
        .collect::<Result<_>>()?;
    let k = per_source.len() as f64;
    Ok((0..n_max)
        .map(|n| {
            let mean = |j: usize| per_source.iter().map(|c| c[n][j]).sum::<f64>() / k;
            SelectionPoint {
                n: n + 1,
                best_logprob_prob: mean(0),
                best_logprob_bleu: mean(1),
                best_bleu_bleu: mean(2),
                best_bleu_prob: mean(3),
            }
        })
        .collect())
}
