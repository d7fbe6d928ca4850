//! Decoding: length-normalized beam search, greedy search, ancestral
//! sampling and an exhaustive argmax used as an oracle.

mod beam;
mod sample;

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use beam::{beam_search, greedy, no_copy_constraint, BeamResult, SearchStatus};
pub use sample::sample;

use crate::corpus::{TokenId, Vocabulary};
use crate::model::{enumerate_distribution, sequence_log_prob, ConditionalSequenceModel};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// A decoded target sequence. `tokens` excludes the closing EOS, which is
/// still counted in `log_prob` and in the length used by `norm_score`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub log_prob: f64,
    pub norm_score: f64,
    pub finished: bool,
    /// EOS was forced because the length cap was reached.
    pub truncated: bool,
}

impl Hypothesis {
    pub(crate) fn finish(tokens: Vec<TokenId>, log_prob: f64, truncated: bool) -> Self {
        let norm_score = log_prob / (tokens.len() + 1) as f64;
        Hypothesis {
            tokens,
            log_prob,
            norm_score,
            finished: true,
            truncated,
        }
    }

    pub fn score(&self, length_normalization: bool) -> f64 {
        if length_normalization {
            self.norm_score
        } else {
            self.log_prob
        }
    }
}

/// Best first: higher score, then lexicographically smaller token ids.
pub fn rank_order(a: &Hypothesis, b: &Hypothesis, length_normalization: bool) -> Ordering {
    b.score(length_normalization)
        .total_cmp(&a.score(length_normalization))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// Prune finished hypotheses whose source IoU reaches `threshold`.
    NoCopy { threshold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_width: usize,
    /// Defaults to `2 · source length + 10`.
    pub max_len: Option<usize>,
    pub length_normalization: bool,
    pub constraints: Vec<Constraint>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_width: 5,
            max_len: None,
            length_normalization: true,
            constraints: Vec::new(),
        }
    }
}

impl BeamConfig {
    pub fn with_width(beam_width: usize) -> Self {
        BeamConfig {
            beam_width,
            ..Default::default()
        }
    }

    pub fn no_copy(mut self, threshold: f64) -> Self {
        self.constraints.push(Constraint::NoCopy { threshold });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::InvalidArgument("beam width must be at least 1".into()));
        }
        if self.max_len == Some(0) {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_len_for(&self, source_len: usize) -> usize {
        self.max_len.unwrap_or_else(|| default_max_len(source_len))
    }
}

pub fn default_max_len(source_len: usize) -> usize {
    2 * source_len + 10
}

/// Exhaustive argmax under the beam ranking rule.
pub fn exact_top1<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    max_len: usize,
    length_normalization: bool,
) -> Result<Hypothesis> {
    let support = enumerate_distribution(model, source, max_len)?;
    let mut best: Option<Hypothesis> = None;
    for (tokens, p) in support {
        if p <= 0.0 {
            continue;
        }
        // Scored through the same chain of conditionals as beam search so
        // that exact ties resolve identically.
        let log_prob = sequence_log_prob(model, source, &tokens)?.log_prob;
        let candidate = Hypothesis::finish(tokens, log_prob, false);
        if best
            .as_ref()
            .is_none_or(|b| rank_order(&candidate, b, length_normalization).is_lt())
        {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("model has an empty support".into()))
}

/// Beam search over every source, in parallel; output order follows input order.
pub fn decode_all<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    config: &BeamConfig,
) -> Result<Vec<BeamResult>> {
    config.validate()?;
    sources
        .par_iter()
        .map(|source| beam_search(model, source, config))
        .collect()
}

/// `n` samples per source; sentence `i` draws from `derive_seed(seed, i)`.
pub fn sample_all<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    n: usize,
    seed: u64,
    max_len: Option<usize>,
) -> Result<Vec<Vec<Hypothesis>>> {
    sources
        .par_iter()
        .enumerate()
        .map(|(i, source)| {
            let cap = max_len.unwrap_or_else(|| default_max_len(source.len()));
            sample(model, source, n, derive_seed(seed, i as u64), cap)
        })
        .collect()
}

/// TSV rows `sentence_index, rank, norm_score, log_prob, tokens`; ranks start at 1.
pub fn write_beam_tsv<W: Write>(out: &mut W, results: &[BeamResult], vocab: &Vocabulary) -> Result<()> {
    writeln!(out, "sentence_index\trank\tnorm_score\tlog_prob\ttokens")?;
    for (i, result) in results.iter().enumerate() {
        for (rank, h) in result.hypotheses.iter().enumerate() {
            writeln!(
                out,
                "{i}\t{}\t{}\t{}\t{}",
                rank + 1,
                h.norm_score,
                h.log_prob,
                vocab.detokenize(&h.tokens)
            )?;
        }
    }
    Ok(())
}

/// TSV rows `sentence_index, sample_index, norm_score, log_prob, truncated, tokens`.
pub fn write_sample_tsv<W: Write>(out: &mut W, samples: &[Vec<Hypothesis>], vocab: &Vocabulary) -> Result<()> {
    writeln!(
        out,
        "sentence_index\tsample_index\tnorm_score\tlog_prob\ttruncated\ttokens"
    )?;
    for (i, row) in samples.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            writeln!(
                out,
                "{i}\t{j}\t{}\t{}\t{}\t{}",
                h.norm_score,
                h.log_prob,
                u8::from(h.truncated),
                vocab.detokenize(&h.tokens)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TabularModel;

    #[test]
    fn exact_top1_prefers_table_max_without_normalization() {
        let m = TabularModel::from_strings(&[("x", vec![("a b c", 0.3), ("d", 0.25), ("e f", 0.45)])]).unwrap();
        let best = exact_top1(&m, &[3], 5, false).unwrap();
        assert_eq!(m.target_vocab().detokenize(&best.tokens), "e f");
    }

    #[test]
    fn exact_top1_breaks_ties_lexicographically() {
        // "b" is interned first, so it carries the smaller id.
        let m = TabularModel::from_strings(&[("x", vec![("b", 0.5), ("a", 0.5)])]).unwrap();
        let best = exact_top1(&m, &[3], 3, true).unwrap();
        assert_eq!(best.tokens, [m.target_vocab().id("b").unwrap()]);
        assert!(m.target_vocab().id("b") < m.target_vocab().id("a"));
    }

    #[test]
    fn tsv_layout() {
        let m = TabularModel::from_strings(&[("x", vec![("a", 0.6), ("b c", 0.4)])]).unwrap();
        let results = decode_all(&m, &[vec![3]], &BeamConfig::with_width(2)).unwrap();
        let mut buf = Vec::new();
        write_beam_tsv(&mut buf, &results, m.target_vocab()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0\t1\t"));
        assert!(lines[1].ends_with("\ta"));
        assert!(lines[2].ends_with("\tb c"));
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(BeamConfig::with_width(0).validate().is_err());
        let cfg = BeamConfig {
            max_len: Some(0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
