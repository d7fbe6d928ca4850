use std::collections::BTreeSet;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sentence_bleu;
use crate::{Error, Result};

/// Multi-reference diagnostics of one ranked hypothesis list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Sentence BLEU of the top hypothesis against its best-matching reference.
    pub oracle_reference: f64,
    /// Best-matching-reference BLEU averaged over all hypotheses.
    pub average_oracle: f64,
    /// Distinct references that are the best match of at least one hypothesis.
    pub refs_covered: usize,
}

/// Per-sentence averages of [`OracleReport`] fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusOracleReport {
    pub oracle_reference: f64,
    pub average_oracle: f64,
    pub refs_covered: f64,
    pub sentences: usize,
}

/// Index and BLEU of the reference that best matches `hyp`; ties go to the
/// lowest index.
pub fn best_reference<T, R>(hyp: &[T], references: &[R]) -> (usize, f64)
where
    T: Hash + Eq,
    R: AsRef<[T]>,
{
    let mut best = (0, f64::NEG_INFINITY);
    for (j, r) in references.iter().enumerate() {
        let b = sentence_bleu(hyp, std::slice::from_ref(r));
        if b > best.1 {
            best = (j, b);
        }
    }
    best
}

/// `hypotheses` must be ranked best first.
pub fn oracle_metrics<T, H, R>(hypotheses: &[H], references: &[R]) -> Result<OracleReport>
where
    T: Hash + Eq,
    H: AsRef<[T]>,
    R: AsRef<[T]>,
{
    if hypotheses.is_empty() || references.is_empty() {
        return Err(Error::InvalidArgument(
            "oracle metrics need at least one hypothesis and one reference".into(),
        ));
    }
    let matches: Vec<(usize, f64)> = hypotheses
        .iter()
        .map(|h| best_reference(h.as_ref(), references))
        .collect();
    let covered: BTreeSet<usize> = matches.iter().map(|m| m.0).collect();
    Ok(OracleReport {
        oracle_reference: matches[0].1,
        average_oracle: matches.iter().map(|m| m.1).sum::<f64>() / matches.len() as f64,
        refs_covered: covered.len(),
    })
}

pub fn corpus_oracle_metrics<T, H, R>(hypotheses: &[Vec<H>], references: &[Vec<R>]) -> Result<CorpusOracleReport>
where
    T: Hash + Eq + Sync,
    H: AsRef<[T]> + Sync,
    R: AsRef<[T]> + Sync,
{
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            what: "hypothesis lists and reference sets",
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::InvalidArgument("no sentences to evaluate".into()));
    }
    let reports: Vec<OracleReport> = hypotheses
        .par_iter()
        .zip(references.par_iter())
        .map(|(h, r)| oracle_metrics(h, r))
        .collect::<Result<_>>()?;
    let n = reports.len() as f64;
    Ok(CorpusOracleReport {
        oracle_reference: reports.iter().map(|r| r.oracle_reference).sum::<f64>() / n,
        average_oracle: reports.iter().map(|r| r.average_oracle).sum::<f64>() / n,
        refs_covered: reports.iter().map(|r| r.refs_covered as f64).sum::<f64>() / n,
        sentences: reports.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn self_reference() {
        let refs = vec![toks("a b c d e"), toks("f g h i"), toks("a b x y z")];
        let r = oracle_metrics(&refs, &refs).unwrap();
        assert_eq!(r.oracle_reference, 100.0);
        assert_eq!(r.average_oracle, 100.0);
        assert_eq!(r.refs_covered, 3);
    }

    #[test]
    fn picks_best_reference() {
        let hyp = toks("a b c d e f");
        let refs = vec![toks("a x y z"), toks("a b c d e g"), toks("a b c y z")];
        let bleus: Vec<f64> = refs
            .iter()
            .map(|r| sentence_bleu(&hyp, std::slice::from_ref(r)))
            .collect();
        let max = bleus.iter().cloned().fold(f64::MIN, f64::max);
        let r = oracle_metrics(&[hyp], &refs).unwrap();
        assert_eq!(r.oracle_reference, max);
        assert_eq!(r.average_oracle, max);
        assert_eq!(r.refs_covered, 1);
        assert_eq!(best_reference(&toks("a b c d e f"), &refs).0, 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let refs = vec![toks("a b"), toks("a b")];
        assert_eq!(best_reference(&toks("a b"), &refs).0, 0);
        let r = oracle_metrics(&[toks("a b"), toks("a b c")], &refs).unwrap();
        assert_eq!(r.refs_covered, 1);
    }

    #[test]
    fn single_reference_collapses() {
        let refs = vec![toks("p q r s")];
        let hyps = vec![toks("p q r t"), toks("p z")];
        let r = oracle_metrics(&hyps, &refs).unwrap();
        assert_eq!(r.oracle_reference, sentence_bleu(&hyps[0], &refs));
        assert_eq!(r.refs_covered, 1);
    }
}
