//! Parallel corpora: tokenization, copy detection, noise injection, filtering
//! and synthetic task generation.

mod copy;
mod filter;
pub mod io;
mod noise;
mod synthetic;
mod vocab;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use copy::{is_copy, is_excluded_token, CopyDetector, DEFAULT_COPY_THRESHOLD};
pub use filter::{filter_by_score, pair_scores};
pub use noise::{inject_copy_noise, inject_replacement, NoisedCorpus, ReplacementSpec};
pub use synthetic::{generate_synthetic, SyntheticTaskSpec, TaskSampler, TranslationOption};
pub use vocab::{TokenId, Vocabulary, BOS, BOS_TOKEN, EOS, EOS_TOKEN, UNK, UNK_TOKEN};

use crate::{Error, Result};

/// A non-empty sequence of token ids, without BOS/EOS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<TokenId>", into = "Vec<TokenId>")]
pub struct Sentence(Vec<TokenId>);

impl Sentence {
    pub fn new(tokens: Vec<TokenId>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::InvalidArgument("sentence must be non-empty".into()));
        }
        Ok(Sentence(tokens))
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }
}

impl Deref for Sentence {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl TryFrom<Vec<TokenId>> for Sentence {
    type Error = Error;

    fn try_from(tokens: Vec<TokenId>) -> Result<Self> {
        Sentence::new(tokens)
    }
}

impl From<Sentence> for Vec<TokenId> {
    fn from(sentence: Sentence) -> Self {
        sentence.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: Sentence,
    pub target: Sentence,
}

/// Aligned source/target sentences plus the vocabularies their ids refer to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
}

impl ParallelCorpus {
    pub fn new(pairs: Vec<SentencePair>, source_vocab: Vocabulary, target_vocab: Vocabulary) -> Result<Self> {
        for pair in &pairs {
            check_ids(&pair.source, &source_vocab)?;
            check_ids(&pair.target, &target_vocab)?;
        }
        Ok(ParallelCorpus {
            pairs,
            source_vocab,
            target_vocab,
        })
    }

    /// Tokenizes aligned lines in building mode.
    pub fn from_lines<S: AsRef<str>>(sources: &[S], targets: &[S]) -> Result<Self> {
        if sources.len() != targets.len() {
            return Err(Error::LengthMismatch {
                what: "source and target line counts",
                left: sources.len(),
                right: targets.len(),
            });
        }
        let mut source_vocab = Vocabulary::new();
        let mut target_vocab = Vocabulary::new();
        let mut pairs = Vec::with_capacity(sources.len());
        for (i, (s, t)) in sources.iter().zip(targets).enumerate() {
            pairs.push(SentencePair {
                source: source_vocab.tokenize_extend(s.as_ref(), i + 1)?,
                target: target_vocab.tokenize_extend(t.as_ref(), i + 1)?,
            });
        }
        Ok(ParallelCorpus {
            pairs,
            source_vocab,
            target_vocab,
        })
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_vocab(&self) -> &Vocabulary {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &Vocabulary {
        &self.target_vocab
    }

    /// Pairs at the given indices, sharing this corpus' vocabularies.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> ParallelCorpus {
        ParallelCorpus {
            pairs: indices.into_iter().map(|i| self.pairs[i].clone()).collect(),
            source_vocab: self.source_vocab.clone(),
            target_vocab: self.target_vocab.clone(),
        }
    }

    /// Appends the pairs of `other`, which must share both vocabularies.
    pub fn concat(&self, other: &ParallelCorpus) -> Result<ParallelCorpus> {
        if self.source_vocab != other.source_vocab || self.target_vocab != other.target_vocab {
            return Err(Error::InvalidArgument(
                "cannot concatenate corpora with different vocabularies".into(),
            ));
        }
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        Ok(ParallelCorpus {
            pairs,
            source_vocab: self.source_vocab.clone(),
            target_vocab: self.target_vocab.clone(),
        })
    }

    pub fn source_line(&self, index: usize) -> String {
        self.source_vocab.detokenize(&self.pairs[index].source)
    }

    pub fn target_line(&self, index: usize) -> String {
        self.target_vocab.detokenize(&self.pairs[index].target)
    }
}

fn check_ids(sentence: &Sentence, vocab: &Vocabulary) -> Result<()> {
    match sentence.iter().find(|&&id| !vocab.contains_id(id)) {
        Some(id) => Err(Error::OutOfVocabulary { token: id.to_string() }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_rejects_empty() {
        assert!(Sentence::new(vec![]).is_err());
    }

    #[test]
    fn corpus_validates_ids() {
        let vocab = Vocabulary::from_tokens(["a"]);
        let pair = SentencePair {
            source: Sentence::new(vec![3]).unwrap(),
            target: Sentence::new(vec![9]).unwrap(),
        };
        assert!(ParallelCorpus::new(vec![pair], vocab.clone(), vocab).is_err());
    }

    #[test]
    fn from_lines_requires_equal_counts() {
        let err = ParallelCorpus::from_lines(&["a b"], &[]).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn from_lines_reports_the_bad_line() {
        let err = ParallelCorpus::from_lines(&["a", "b"], &["x", "  "]).unwrap_err();
        assert!(matches!(err, Error::EmptyLine { line: 2 }));
    }
}
