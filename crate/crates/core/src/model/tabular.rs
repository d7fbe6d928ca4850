use std::collections::{HashMap, HashSet};

use super::ConditionalSequenceModel;
use crate::corpus::{TokenId, Vocabulary, BOS, EOS, UNK};
use crate::{Error, Result};

/// Explicit per-source distribution over whole target sequences.
///
/// Next-token probabilities are obtained by marginalizing the table over every
/// entry sharing the prefix. Sources missing from the table, and prefixes with
/// no mass, put all probability on EOS.
#[derive(Clone, Debug)]
pub struct TabularModel {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    table: HashMap<Vec<TokenId>, Vec<(Vec<TokenId>, f64)>>,
}

impl TabularModel {
    pub fn new(
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        table: HashMap<Vec<TokenId>, Vec<(Vec<TokenId>, f64)>>,
    ) -> Result<Self> {
        for (source, entries) in &table {
            let total: f64 = entries.iter().map(|e| e.1).sum();
            if (total - 1.0).abs() > 1e-9 || entries.iter().any(|e| e.1.is_nan() || e.1 < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "table entries for source {source:?} sum to {total}"
                )));
            }
            let distinct: HashSet<&Vec<TokenId>> = entries.iter().map(|e| &e.0).collect();
            if distinct.len() != entries.len() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate targets for source {source:?}"
                )));
            }
            let bad_target = entries
                .iter()
                .flat_map(|e| e.0.iter())
                .find(|&&t| !target_vocab.contains_id(t) || t == BOS || t == EOS || t == UNK);
            let bad_source = source.iter().find(|&&s| !source_vocab.contains_id(s));
            if let Some(id) = bad_target.or(bad_source) {
                return Err(Error::OutOfVocabulary { token: id.to_string() });
            }
        }
        Ok(TabularModel {
            source_vocab,
            target_vocab,
            table,
        })
    }

    /// Builds a model from token strings; vocabularies are collected from the table.
    pub fn from_strings(table: &[(&str, Vec<(&str, f64)>)]) -> Result<Self> {
        let mut source_vocab = Vocabulary::new();
        let mut target_vocab = Vocabulary::new();
        let mut map = HashMap::new();
        for (source, entries) in table {
            let source: Vec<TokenId> = source.split_whitespace().map(|t| source_vocab.insert(t)).collect();
            let entries = entries
                .iter()
                .map(|(target, p)| {
                    let ids = target.split_whitespace().map(|t| target_vocab.insert(t)).collect();
                    (ids, *p)
                })
                .collect();
            map.insert(source, entries);
        }
        TabularModel::new(source_vocab, target_vocab, map)
    }

    pub fn entries(&self, source: &[TokenId]) -> Option<&[(Vec<TokenId>, f64)]> {
        self.table.get(source).map(Vec::as_slice)
    }

    pub fn sources(&self) -> impl Iterator<Item = &[TokenId]> {
        self.table.keys().map(Vec::as_slice)
    }
}

impl ConditionalSequenceModel for TabularModel {
    fn source_vocab(&self) -> &Vocabulary {
        &self.source_vocab
    }

    fn target_vocab(&self) -> &Vocabulary {
        &self.target_vocab
    }

    fn next_token_distribution_into(&self, source: &[TokenId], prefix: &[TokenId], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.target_vocab.len(), 0.0);
        let mut mass = 0.0;
        if let Some(entries) = self.table.get(source) {
            for (target, p) in entries {
                if *p > 0.0 && target.starts_with(prefix) {
                    let next = target.get(prefix.len()).copied().unwrap_or(EOS);
                    out[next as usize] += p;
                    mass += p;
                }
            }
        }
        if mass > 0.0 {
            out.iter_mut().for_each(|p| *p /= mass);
        } else {
            out[EOS as usize] = 1.0;
        }
    }

    fn explicit_support(&self, source: &[TokenId]) -> Option<Vec<(Vec<TokenId>, f64)>> {
        self.table.get(source).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_distribution, is_proper_distribution, sequence_log_prob};

    fn ab_model() -> TabularModel {
        TabularModel::from_strings(&[("x", vec![("A", 0.6), ("B", 0.4)])]).unwrap()
    }

    #[test]
    fn delta_table_scores_zero() {
        let m = TabularModel::from_strings(&[("x", vec![("a b c", 1.0)])]).unwrap();
        let src = [m.source_vocab().id("x").unwrap()];
        let tgt = m.target_vocab().tokenize_frozen("a b c", 1).unwrap();
        assert_eq!(sequence_log_prob(&m, &src, &tgt).unwrap().log_prob, 0.0);
    }

    #[test]
    fn two_entry_table_lookup() {
        let m = ab_model();
        let src = [3];
        let a = [m.target_vocab().id("A").unwrap()];
        let score = sequence_log_prob(&m, &src, &a).unwrap();
        assert!((score.log_prob - 0.6f64.ln()).abs() < 1e-15);
        assert_eq!(score.token_log_probs.len(), 2);
    }

    #[test]
    fn shared_prefixes_marginalize() {
        let m = TabularModel::from_strings(&[("x", vec![("a b", 0.5), ("a c", 0.2), ("a", 0.1), ("d", 0.2)])]).unwrap();
        let v = m.target_vocab();
        let a = v.id("a").unwrap();
        let d = m.next_token_distribution(&[3], &[a]);
        assert!(is_proper_distribution(&d, 1e-12));
        assert!((d[v.id("b").unwrap() as usize] - 0.625).abs() < 1e-12);
        assert!((d[EOS as usize] - 0.125).abs() < 1e-12);
        for (target, p) in m.entries(&[3]).unwrap() {
            let lp = sequence_log_prob(&m, &[3], target).unwrap().log_prob;
            assert!((lp.exp() - p).abs() <= 1e-12 * p);
        }
    }

    #[test]
    fn enumeration_returns_table() {
        let m = ab_model();
        let support = enumerate_distribution(&m, &[3], 5).unwrap();
        assert_eq!(support, m.entries(&[3]).unwrap().to_vec());
        let total: f64 = support.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_source_emits_eos() {
        let m = ab_model();
        let d = m.next_token_distribution(&[4, 4], &[]);
        assert_eq!(d[EOS as usize], 1.0);
    }

    #[test]
    fn rejects_improper_tables() {
        assert!(TabularModel::from_strings(&[("x", vec![("A", 0.6), ("B", 0.3)])]).is_err());
        assert!(TabularModel::from_strings(&[("x", vec![("A", 0.5), ("A", 0.5)])]).is_err());
    }
}
