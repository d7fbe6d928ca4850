use super::ConditionalSequenceModel;
use crate::corpus::{SyntheticTaskSpec, TokenId, Vocabulary, EOS};
use crate::Result;

/// The exact conditional data distribution of a [`SyntheticTaskSpec`]:
/// position `k` is drawn from the options of source token `k`, and EOS follows
/// the last position with probability 1.
#[derive(Clone, Debug)]
pub struct TaskModel {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    options: Vec<Vec<(TokenId, f64)>>,
}

impl TaskModel {
    pub fn new(spec: &SyntheticTaskSpec) -> Result<Self> {
        spec.validate()?;
        let (source_vocab, target_vocab) = spec.vocabularies();
        Ok(TaskModel {
            source_vocab,
            target_vocab,
            options: spec.option_table(),
        })
    }
}

impl ConditionalSequenceModel for TaskModel {
    fn source_vocab(&self) -> &Vocabulary {
        &self.source_vocab
    }

    fn target_vocab(&self) -> &Vocabulary {
        &self.target_vocab
    }

    fn next_token_distribution_into(&self, source: &[TokenId], prefix: &[TokenId], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.target_vocab.len(), 0.0);
        match source.get(prefix.len()) {
            Some(&s) if !self.options[s as usize].is_empty() => {
                for &(t, p) in &self.options[s as usize] {
                    out[t as usize] += p;
                }
            }
            _ => out[EOS as usize] = 1.0,
        }
    }
}
