use rand::Rng as _;

use super::Hypothesis;
use crate::corpus::{TokenId, EOS};
use crate::model::ConditionalSequenceModel;
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// Inverse-CDF draw; falls back to the last positive entry when rounding
/// leaves `u` above the accumulated mass.
fn draw(dist: &[f64], rng: &mut Rng) -> TokenId {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = EOS;
    for (t, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = t as TokenId;
            if u < acc {
                return last;
            }
        }
    }
    last
}

/// `n` independent ancestral samples, drawn one token at a time until EOS.
/// A sample reaching `max_len` tokens gets a forced EOS and is flagged
/// `truncated`; its log-probability still charges the EOS step.
pub fn sample<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    n: usize,
    seed: u64,
    max_len: usize,
) -> Result<Vec<Hypothesis>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let mut dist = Vec::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tokens = Vec::new();
        let mut log_prob = 0.0;
        loop {
            model.next_token_distribution_into(source, &tokens, &mut dist);
            if tokens.len() >= max_len {
                log_prob += dist[EOS as usize].ln();
                out.push(Hypothesis::finish(tokens, log_prob, true));
                break;
            }
            let t = draw(&dist, &mut rng);
            log_prob += dist[t as usize].ln();
            if t == EOS {
                out.push(Hypothesis::finish(tokens, log_prob, false));
                break;
            }
            tokens.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sequence_log_prob, TabularModel};

    #[test]
    fn delta_model_samples_agree() {
        let m = TabularModel::from_strings(&[("x", vec![("a b", 1.0)])]).unwrap();
        let s = sample(&m, &[3], 20, 1, 10).unwrap();
        assert!(s.iter().all(|h| h == &s[0] && h.log_prob == 0.0));
    }

    #[test]
    fn same_seed_same_samples() {
        let m = TabularModel::from_strings(&[("x", vec![("a", 0.3), ("b c", 0.7)])]).unwrap();
        assert_eq!(
            sample(&m, &[3], 50, 9, 10).unwrap(),
            sample(&m, &[3], 50, 9, 10).unwrap()
        );
        assert_ne!(
            sample(&m, &[3], 50, 9, 10).unwrap(),
            sample(&m, &[3], 50, 10, 10).unwrap()
        );
    }

    #[test]
    fn frequency_concentrates() {
        let m = TabularModel::from_strings(&[("x", vec![("A", 0.6), ("B", 0.4)])]).unwrap();
        let a = m.target_vocab().id("A").unwrap();
        let s = sample(&m, &[3], 100_000, 4, 5).unwrap();
        let freq = s.iter().filter(|h| h.tokens == [a]).count() as f64 / 1e5;
        assert!((0.59..=0.61).contains(&freq), "{freq}");
    }

    #[test]
    fn truncation_is_flagged_and_scored() {
        let m = TabularModel::from_strings(&[("x", vec![("a b c", 0.5), ("a", 0.5)])]).unwrap();
        let s = sample(&m, &[3], 200, 2, 2).unwrap();
        assert!(s.iter().any(|h| h.truncated));
        for h in &s {
            let lp = sequence_log_prob(&m, &[3], &h.tokens).unwrap().log_prob;
            assert_eq!(lp, h.log_prob);
            assert_eq!(h.truncated, h.tokens.len() == 2);
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let m = TabularModel::from_strings(&[("x", vec![("a", 1.0)])]).unwrap();
        assert!(sample(&m, &[3], 0, 0, 5).is_err());
    }
}
