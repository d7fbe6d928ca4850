use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::sentence_bleu;
use crate::corpus::TokenId;
use crate::model::{enumerate_distribution, ConditionalSequenceModel};
use crate::search::sample;
use crate::{Error, Result};

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Estimate {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_error, n }
    }

    /// Mean of independent per-source estimates; errors add in quadrature.
    pub fn average(parts: &[Estimate]) -> Estimate {
        let k = parts.len() as f64;
        Estimate {
            mean: parts.iter().map(|e| e.mean).sum::<f64>() / k,
            std_error: parts.iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt() / k,
            n: parts.iter().map(|e| e.n).sum(),
        }
    }
}

/// `Σ_{x,x'} p(x) p(x') BLEU(x, x')` over an explicit distribution.
pub fn expected_inter_bleu_explicit<T: Hash + Eq>(support: &[(Vec<T>, f64)]) -> f64 {
    let mut total = 0.0;
    for (x, px) in support {
        for (y, py) in support {
            total += px * py * sentence_bleu(x, std::slice::from_ref(y));
        }
    }
    total
}

/// Mean BLEU over independently drawn ordered pairs `(x, x')`.
pub fn expected_inter_bleu_pairs<T: Hash + Eq>(pairs: &[(Vec<T>, Vec<T>)]) -> Result<Estimate> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("at least one pair is required".into()));
    }
    let values: Vec<f64> = pairs
        .iter()
        .map(|(x, y)| sentence_bleu(x, std::slice::from_ref(y)))
        .collect();
    Ok(Estimate::from_values(&values))
}

/// Exact expected inter-sentence BLEU of `p(· | source)`, by enumeration.
pub fn model_inter_bleu_explicit<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    max_len: usize,
) -> Result<f64> {
    Ok(expected_inter_bleu_explicit(&enumerate_distribution(
        model, source, max_len,
    )?))
}

/// Monte-Carlo estimate from `n_pairs` pairs of ancestral samples.
pub fn model_inter_bleu_sampled<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    n_pairs: usize,
    seed: u64,
    max_len: usize,
) -> Result<Estimate> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let draws = sample(model, source, 2 * n_pairs, seed, max_len)?;
    let pairs: Vec<(Vec<TokenId>, Vec<TokenId>)> = draws
        .chunks(2)
        .map(|c| (c[0].tokens.clone(), c[1].tokens.clone()))
        .collect();
    expected_inter_bleu_pairs(&pairs)
}
