use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ParallelCorpus, Sentence, SentencePair, Vocabulary};
use crate::rng::seeded;
use crate::{Error, Result};

/// Result of [`inject_copy_noise`]: the new corpus and the indices whose target was replaced.
#[derive(Clone, Debug)]
pub struct NoisedCorpus {
    pub corpus: ParallelCorpus,
    pub replaced: Vec<usize>,
}

/// Extends the target vocabulary with every source token, then replaces each
/// target by a verbatim copy of its source with probability `p_noise`.
pub fn inject_copy_noise(corpus: &ParallelCorpus, p_noise: f64, seed: u64) -> Result<NoisedCorpus> {
    if !(0.0..=1.0).contains(&p_noise) {
        return Err(Error::InvalidArgument(format!(
            "p_noise must lie in [0, 1], got {p_noise}"
        )));
    }
    let mut target_vocab = corpus.target_vocab().clone();
    let copy_ids: Vec<_> = corpus
        .source_vocab()
        .entries()
        .iter()
        .enumerate()
        .map(
            |(id, token)| {
                if id < 3 {
                    id as u32
                } else {
                    target_vocab.insert(token)
                }
            },
        )
        .collect();

    let mut rng = seeded(seed);
    let mut replaced = Vec::new();
    let mut pairs = Vec::with_capacity(corpus.len());
    for (i, pair) in corpus.pairs().iter().enumerate() {
        if rng.gen_bool(p_noise) {
            let copy = pair.source.iter().map(|&s| copy_ids[s as usize]).collect();
            pairs.push(SentencePair {
                source: pair.source.clone(),
                target: Sentence(copy),
            });
            replaced.push(i);
        } else {
            pairs.push(pair.clone());
        }
    }
    let corpus = ParallelCorpus {
        pairs,
        source_vocab: corpus.source_vocab().clone(),
        target_vocab,
    };
    Ok(NoisedCorpus { corpus, replaced })
}

/// Rewrites each target occurrence of `word` to `w1` with probability `rate`, else to `w2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementSpec {
    pub word: String,
    pub w1: String,
    pub w2: String,
    pub rate: f64,
}

impl ReplacementSpec {
    fn validate(&self, corpus: &ParallelCorpus) -> Result<()> {
        if self.w1 == self.w2 {
            return Err(Error::InvalidArgument("w1 and w2 must differ".into()));
        }
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::InvalidArgument(format!(
                "replacement rate must lie in [0, 1], got {}",
                self.rate
            )));
        }
        for alt in [&self.w1, &self.w2] {
            if Vocabulary::is_reserved(alt) || alt.split_whitespace().count() != 1 {
                return Err(Error::InvalidArgument(format!("{alt:?} is not a valid token")));
            }
            if let Some(id) = corpus.target_vocab().id(alt) {
                if corpus.pairs().iter().any(|p| p.target.contains(&id)) {
                    return Err(Error::InvalidArgument(format!(
                        "replacement token {alt:?} already occurs in the corpus"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn inject_replacement(corpus: &ParallelCorpus, spec: &ReplacementSpec, seed: u64) -> Result<ParallelCorpus> {
    spec.validate(corpus)?;
    let word = corpus
        .target_vocab()
        .id(&spec.word)
        .filter(|id| corpus.pairs().iter().any(|p| p.target.contains(id)))
        .ok_or_else(|| Error::WordNotFound(spec.word.clone()))?;

    let mut target_vocab = corpus.target_vocab().clone();
    let w1 = target_vocab.insert(&spec.w1);
    let w2 = target_vocab.insert(&spec.w2);

    let mut rng = seeded(seed);
    let pairs = corpus
        .pairs()
        .iter()
        .map(|pair| {
            let target = pair
                .target
                .iter()
                .map(|&t| {
                    if t != word {
                        t
                    } else if rng.gen_bool(spec.rate) {
                        w1
                    } else {
                        w2
                    }
                })
                .collect();
            SentencePair {
                source: pair.source.clone(),
                target: Sentence(target),
            }
        })
        .collect();
    Ok(ParallelCorpus {
        pairs,
        source_vocab: corpus.source_vocab().clone(),
        target_vocab,
    })
}
