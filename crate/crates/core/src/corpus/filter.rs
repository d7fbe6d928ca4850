use rayon::prelude::*;

use super::ParallelCorpus;
use crate::model::{sequence_log_prob, ConditionalSequenceModel};
use crate::{Error, Result};

/// Per-position average target log-probability (EOS included) of every pair.
/// Source ids are mapped onto the model vocabulary by spelling and must exist there.
pub fn pair_scores<M: ConditionalSequenceModel>(corpus: &ParallelCorpus, model: &M) -> Result<Vec<f64>> {
    corpus
        .pairs()
        .par_iter()
        .map(|pair| {
            let source = model
                .source_vocab()
                .translate_ids(corpus.source_vocab(), &pair.source)?;
            // Target spellings the model has never seen score as UNK, which
            // has zero probability, so such pairs rank last.
            let target = model
                .target_vocab()
                .translate_ids_lossy(corpus.target_vocab(), &pair.target);
            Ok(sequence_log_prob(model, &source, &target)?.mean_log_prob())
        })
        .collect()
}

/// Drops the lowest-scoring `drop_fraction` of pairs, keeping
/// `ceil((1 - drop_fraction) · N)`. Equal scores keep the lower index; the
/// survivors stay in corpus order.
pub fn filter_by_score<M: ConditionalSequenceModel>(
    corpus: &ParallelCorpus,
    model: &M,
    drop_fraction: f64,
) -> Result<ParallelCorpus> {
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(Error::InvalidArgument(format!(
            "drop fraction must lie in [0, 1), got {drop_fraction}"
        )));
    }
    let scores = pair_scores(corpus, model)?;
    let keep = ((1.0 - drop_fraction) * corpus.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept = order[..keep.min(order.len())].to_vec();
    kept.sort_unstable();
    Ok(corpus.select(kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticTaskSpec};
    use crate::model::{MixtureModel, MixtureParams};

    fn setup(n: usize) -> (ParallelCorpus, MixtureModel) {
        let c = generate_synthetic(&SyntheticTaskSpec::desk_scale(12, 15, (3, 6), n, 5)).unwrap();
        let m = MixtureModel::train(&c, MixtureParams::default()).unwrap();
        (c, m)
    }

    #[test]
    fn zero_fraction_is_identity() {
        let (c, m) = setup(50);
        assert_eq!(filter_by_score(&c, &m, 0.0).unwrap(), c);
    }

    #[test]
    fn keeps_ceiling_count() {
        let (c, m) = setup(10);
        assert_eq!(filter_by_score(&c, &m, 0.2).unwrap().len(), 8);
        assert_eq!(filter_by_score(&c, &m, 0.25).unwrap().len(), 8);
        assert!(filter_by_score(&c, &m, 1.0).is_err());
    }

    #[test]
    fn ties_keep_lower_index() {
        let (c, m) = setup(5);
        let dup = c.select([0, 0, 0, 0]);
        let out = filter_by_score(&dup, &m, 0.5).unwrap();
        assert_eq!(out.len(), 2);
    }
}
