use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, Vocabulary};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBin {
    /// Percentile range of the frequency-ranked types; 0 is the most frequent end.
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    pub reference_mass: f64,
    pub beam_mass: f64,
    pub sample_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBinReport {
    pub bins: Vec<FrequencyBin>,
}

/// Bin index of every ordinary type of `vocab`. Types are ranked by training
/// frequency (descending, ties by id) and cut into `n_bins` groups whose sizes
/// differ by at most one; bin 0 holds the most frequent types.
pub fn frequency_bins<S: AsRef<[TokenId]>>(
    training_targets: &[S],
    vocab: &Vocabulary,
    n_bins: usize,
) -> Result<HashMap<TokenId, usize>> {
    let types: Vec<TokenId> = vocab.ordinary_ids().collect();
    if n_bins == 0 || n_bins > types.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} types into {n_bins} bins",
            types.len()
        )));
    }
    let mut freq: HashMap<TokenId, usize> = HashMap::new();
    for s in training_targets {
        for &t in s.as_ref() {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    let mut ranked = types;
    ranked.sort_by_key(|t| (std::cmp::Reverse(freq.get(t).copied().unwrap_or(0)), *t));
    let n = ranked.len();
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(rank, t)| (t, rank * n_bins / n))
        .collect())
}

fn masses<S: AsRef<[TokenId]>>(outputs: &[S], bins: &HashMap<TokenId, usize>, n_bins: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; n_bins];
    let mut total = 0usize;
    for s in outputs {
        for t in s.as_ref() {
            let b = bins
                .get(t)
                .ok_or_else(|| Error::OutOfVocabulary { token: t.to_string() })?;
            counts[*b] += 1;
            total += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect())
}

/// Share of each series' output tokens falling in each training-frequency bin.
pub fn unigram_freq_bins<S: AsRef<[TokenId]>>(
    training_targets: &[S],
    vocab: &Vocabulary,
    reference: &[Vec<TokenId>],
    beam: &[Vec<TokenId>],
    sample: &[Vec<TokenId>],
    n_bins: usize,
) -> Result<FrequencyBinReport> {
    let bins = frequency_bins(training_targets, vocab, n_bins)?;
    let r = masses(reference, &bins, n_bins)?;
    let b = masses(beam, &bins, n_bins)?;
    let s = masses(sample, &bins, n_bins)?;
    let width = 100.0 / n_bins as f64;
    Ok(FrequencyBinReport {
        bins: (0..n_bins)
            .map(|i| FrequencyBin {
                lower_percentile: i as f64 * width,
                upper_percentile: (i + 1) as f64 * width,
                reference_mass: r[i],
                beam_mass: b[i],
                sample_mass: s[i],
            })
            .collect(),
    })
}
