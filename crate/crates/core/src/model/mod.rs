//! Conditional sequence models `p(t_k | t_<k, x)`.
//!
//! A model exposes the next-token distribution over its target vocabulary, with
//! the EOS symbol at index [`EOS`]. BOS and UNK always receive zero probability.
//! Three implementations ship with the crate:
//!
//! * [`TabularModel`]: an explicit table of target sequences per source, exact
//!   and enumerable.
//! * [`MixtureModel`]: a count-based translation model trained from a parallel
//!   corpus, with a copy mechanism, a target bigram and a length model.
//! * [`TaskModel`]: the closed-form data distribution of a synthetic task.

mod mixture;
mod tabular;
mod task;

use serde::{Deserialize, Serialize};

pub use mixture::{MixtureModel, MixtureParams};
pub use tabular::TabularModel;
pub use task::TaskModel;

use crate::corpus::{TokenId, Vocabulary, BOS, EOS, UNK};
use crate::{Error, Result};

pub trait ConditionalSequenceModel: Send + Sync {
    fn source_vocab(&self) -> &Vocabulary;

    fn target_vocab(&self) -> &Vocabulary;

    /// Writes `p(· | prefix, source)` into `out`, resized to the target vocabulary.
    fn next_token_distribution_into(&self, source: &[TokenId], prefix: &[TokenId], out: &mut Vec<f64>);

    fn next_token_distribution(&self, source: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        let mut out = Vec::new();
        self.next_token_distribution_into(source, prefix, &mut out);
        out
    }

    /// The complete support of `p(· | source)` when the model stores it explicitly.
    fn explicit_support(&self, _source: &[TokenId]) -> Option<Vec<(Vec<TokenId>, f64)>> {
        None
    }
}

impl<M: ConditionalSequenceModel + ?Sized> ConditionalSequenceModel for &M {
    fn source_vocab(&self) -> &Vocabulary {
        (**self).source_vocab()
    }

    fn target_vocab(&self) -> &Vocabulary {
        (**self).target_vocab()
    }

    fn next_token_distribution_into(&self, source: &[TokenId], prefix: &[TokenId], out: &mut Vec<f64>) {
        (**self).next_token_distribution_into(source, prefix, out)
    }

    fn explicit_support(&self, source: &[TokenId]) -> Option<Vec<(Vec<TokenId>, f64)>> {
        (**self).explicit_support(source)
    }
}

/// Joint log-probability of a target sequence, including the final EOS emission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub log_prob: f64,
    /// One value per target token followed by the EOS position.
    pub token_log_probs: Vec<f64>,
}

impl SequenceScore {
    /// Log-probability averaged over positions (tokens plus EOS).
    pub fn mean_log_prob(&self) -> f64 {
        self.log_prob / self.token_log_probs.len() as f64
    }
}

fn check_target(vocab: &Vocabulary, target: &[TokenId]) -> Result<()> {
    match target.iter().find(|&&t| !vocab.contains_id(t) || t == BOS || t == EOS) {
        Some(t) => Err(Error::OutOfVocabulary {
            token: vocab.token(*t).map_or_else(|| t.to_string(), str::to_owned),
        }),
        None => Ok(()),
    }
}

/// `Σ_i log p(t_i | t_<i, source)` over the target tokens and the closing EOS.
///
/// The empty target is accepted and scores the immediate EOS emission.
pub fn sequence_log_prob<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    target: &[TokenId],
) -> Result<SequenceScore> {
    check_target(model.target_vocab(), target)?;
    let mut dist = Vec::new();
    let mut token_log_probs = Vec::with_capacity(target.len() + 1);
    for i in 0..=target.len() {
        model.next_token_distribution_into(source, &target[..i], &mut dist);
        let next = target.get(i).copied().unwrap_or(EOS);
        token_log_probs.push(dist[next as usize].ln());
    }
    let log_prob = token_log_probs.iter().sum();
    Ok(SequenceScore {
        log_prob,
        token_log_probs,
    })
}

/// Upper bound on the number of sequences [`enumerate_distribution`] will produce.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Every target sequence of length ≤ `max_len` with non-zero probability,
/// together with its exact probability. Models with an explicit table return
/// it verbatim.
pub fn enumerate_distribution<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    max_len: usize,
) -> Result<Vec<(Vec<TokenId>, f64)>> {
    if let Some(table) = model.explicit_support(source) {
        return Ok(table);
    }
    let mut finished = Vec::new();
    // (prefix, per-position log-probs); the log-probs are summed in the same
    // order as `sequence_log_prob` so both routes agree bit for bit.
    let mut frontier: Vec<(Vec<TokenId>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
    let mut dist = Vec::new();
    for depth in 0..=max_len {
        let mut next_frontier = Vec::new();
        for (prefix, logs) in &frontier {
            model.next_token_distribution_into(source, prefix, &mut dist);
            if dist[EOS as usize] > 0.0 {
                let mut all = logs.clone();
                all.push(dist[EOS as usize].ln());
                finished.push((prefix.clone(), all.iter().sum::<f64>().exp()));
            }
            if depth < max_len {
                for (t, &p) in dist.iter().enumerate() {
                    let t = t as TokenId;
                    if p > 0.0 && t != EOS && t != BOS && t != UNK {
                        let mut next = prefix.clone();
                        next.push(t);
                        let mut next_logs = logs.clone();
                        next_logs.push(p.ln());
                        next_frontier.push((next, next_logs));
                    }
                }
            }
            if finished.len() + next_frontier.len() > ENUMERATION_LIMIT {
                return Err(Error::EnumerationTooLarge {
                    limit: ENUMERATION_LIMIT,
                });
            }
        }
        frontier = next_frontier;
    }
    Ok(finished)
}

/// Checks the distribution invariants: non-negative, sums to 1 within `tol`,
/// and reserved BOS/UNK entries are zero.
pub fn is_proper_distribution(dist: &[f64], tol: f64) -> bool {
    let total: f64 = dist.iter().sum();
    dist.iter().all(|&p| p >= 0.0)
        && (total - 1.0).abs() <= tol
        && dist.get(BOS as usize).copied().unwrap_or(0.0) == 0.0
        && dist.get(UNK as usize).copied().unwrap_or(0.0) == 0.0
}
