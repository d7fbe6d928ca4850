//! Distribution-matching diagnostics: set-level calibration, coverage
//! curves, token probability quantiles, per-position probabilities,
//! repeated-source matching and the log-probability/BLEU scatter.
//!
//! Probability masses are always raw joint probabilities. Length
//! normalization only affects which hypotheses a beam returns.

mod analysis;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use analysis::{
    copy_targets, logprob_bleu_scatter, nearest_rank_quantiles, per_position_avg_prob, repeated_source_match,
    selection_curves, token_prob_quantiles, PositionStat, RepeatedSourceReport, ScatterPoint, SelectionPoint,
    SourceMatch,
};

use crate::corpus::TokenId;
use crate::model::ConditionalSequenceModel;
use crate::rng::derive_seed;
use crate::search::{beam_search, default_max_len, sample, BeamConfig, Hypothesis};
use crate::table::Table;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub mean_set_mass: f64,
    pub empirical_rate: f64,
    pub bin_count: usize,
}

impl CalibrationPoint {
    /// Three-sigma binomial half-width around `mean_set_mass`.
    pub fn band(&self) -> f64 {
        let p = self.mean_set_mass;
        3.0 * (p * (1.0 - p) / self.bin_count as f64).sqrt()
    }

    pub fn within_band(&self) -> bool {
        (self.empirical_rate - self.mean_set_mass).abs() <= self.band()
    }
}

/// How the per-sentence hypothesis set `S` is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetBuilder {
    Beam(BeamConfig),
    /// Distinct sequences among `n` samples.
    Samples {
        n: usize,
        seed: u64,
        max_len: Option<usize>,
    },
}

/// Model mass of one hypothesis set and whether it contains the reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetObservation {
    pub mass: f64,
    pub contains_reference: bool,
}

/// Distinct hypotheses in arrival order.
fn unique(hypotheses: &[Hypothesis]) -> Vec<&Hypothesis> {
    let mut seen = HashSet::new();
    hypotheses.iter().filter(|h| seen.insert(&h.tokens)).collect()
}

pub fn observe_set(hypotheses: &[Hypothesis], reference: &[TokenId]) -> SetObservation {
    let members = unique(hypotheses);
    SetObservation {
        mass: members.iter().map(|h| h.log_prob.exp()).sum::<f64>().min(1.0),
        contains_reference: members.iter().any(|h| h.tokens == reference),
    }
}

/// Builds the hypothesis set of every distinct source once, in parallel.
/// Sampled sets of a source are seeded by the index of its first occurrence.
pub fn build_sets<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    sources: &[Vec<TokenId>],
    builder: &SetBuilder,
) -> Result<HashMap<Vec<TokenId>, Vec<Hypothesis>>> {
    let mut first: Vec<(usize, &Vec<TokenId>)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, s) in sources.iter().enumerate() {
        if seen.insert(s) {
            first.push((i, s));
        }
    }
    first
        .par_iter()
        .map(|&(i, s)| {
            let set = match builder {
                SetBuilder::Beam(config) => beam_search(model, s, config)?.hypotheses,
                SetBuilder::Samples { n, seed, max_len } => {
                    let cap = max_len.unwrap_or_else(|| default_max_len(s.len()));
                    sample(model, s, *n, derive_seed(*seed, i as u64), cap)?
                }
            };
            Ok((s.clone(), set))
        })
        .collect()
}

/// Sorts observations by mass (stable, so ties keep input order) and splits
/// them into `n_bins` equal-count bins; the last bin takes the remainder.
pub fn calibration_bins(observations: &[SetObservation], n_bins: usize) -> Result<Vec<CalibrationPoint>> {
    if n_bins == 0 || observations.len() < n_bins {
        return Err(Error::TooFewSentences {
            sentences: observations.len(),
            bins: n_bins,
        });
    }
    let mut sorted = observations.to_vec();
    sorted.sort_by(|a, b| a.mass.total_cmp(&b.mass));
    let size = sorted.len() / n_bins;
    Ok((0..n_bins)
        .map(|b| {
            let end = if b + 1 == n_bins { sorted.len() } else { (b + 1) * size };
            let bin = &sorted[b * size..end];
            let n = bin.len() as f64;
            CalibrationPoint {
                mean_set_mass: bin.iter().map(|o| o.mass).sum::<f64>() / n,
                empirical_rate: bin.iter().filter(|o| o.contains_reference).count() as f64 / n,
                bin_count: bin.len(),
            }
        })
        .collect())
}

/// Set-level calibration over `(source, reference)` pairs.
pub fn set_calibration<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    eval_pairs: &[(Vec<TokenId>, Vec<TokenId>)],
    builder: &SetBuilder,
    n_bins: usize,
) -> Result<Vec<CalibrationPoint>> {
    if eval_pairs.len() < n_bins {
        return Err(Error::TooFewSentences {
            sentences: eval_pairs.len(),
            bins: n_bins,
        });
    }
    let sources: Vec<Vec<TokenId>> = eval_pairs.iter().map(|p| p.0.clone()).collect();
    let sets = build_sets(model, &sources, builder)?;
    let observations: Vec<SetObservation> = eval_pairs.iter().map(|(s, r)| observe_set(&sets[s], r)).collect();
    calibration_bins(&observations, n_bins)
}

pub fn calibration_table(points: &[CalibrationPoint]) -> Table {
    let mut t = Table::new(&["bin", "mean_set_mass", "empirical_rate", "bin_count", "within_3sigma"]);
    for (i, p) in points.iter().enumerate() {
        t.push(&[
            i.to_string(),
            p.mean_set_mass.to_string(),
            p.empirical_rate.to_string(),
            p.bin_count.to_string(),
            p.within_band().to_string(),
        ]);
    }
    t
}

/// Cumulative probability of the distinct hypotheses among the first `n`
/// items, for `n = 1..=N`. A repeated sequence adds no mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub points: Vec<(usize, f64)>,
}

impl CoverageCurve {
    pub fn final_mass(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Items are taken in the given order: rank order for a beam, arrival order
/// for samples.
pub fn cumulative_coverage(hypotheses: &[Hypothesis]) -> CoverageCurve {
    let mut seen = HashSet::new();
    let mut mass = 0.0f64;
    let points = hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if seen.insert(&h.tokens) {
                mass += h.log_prob.exp();
            }
            (i + 1, mass.min(1.0))
        })
        .collect();
    CoverageCurve { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_distribution, TabularModel};
    use crate::search::BeamConfig;

    fn ab() -> TabularModel {
        TabularModel::from_strings(&[("x", vec![("A", 0.6), ("B", 0.4)])]).unwrap()
    }

    #[test]
    fn full_support_sets_sit_at_one() {
        let m = TabularModel::from_strings(&[
            ("x", vec![("A", 0.6), ("B", 0.4)]),
            ("y", vec![("C", 0.3), ("D E", 0.7)]),
        ])
        .unwrap();
        let mut pairs = Vec::new();
        for (s, targets) in [(3, ["A", "B"]), (4, ["C", "D E"])] {
            for t in targets {
                let tgt = m.target_vocab().tokenize_frozen(t, 1).unwrap().into_inner();
                pairs.push((vec![s], tgt));
            }
        }
        let points = set_calibration(&m, &pairs, &SetBuilder::Beam(BeamConfig::with_width(5)), 2).unwrap();
        for p in points {
            assert!((p.mean_set_mass - 1.0).abs() < 1e-12);
            assert_eq!(p.empirical_rate, 1.0);
        }
    }

    #[test]
    fn bins_partition_with_remainder_last() {
        let obs: Vec<SetObservation> = (0..23)
            .map(|i| SetObservation {
                mass: (i % 7) as f64 / 7.0,
                contains_reference: i % 2 == 0,
            })
            .collect();
        let points = calibration_bins(&obs, 5).unwrap();
        let counts: Vec<usize> = points.iter().map(|p| p.bin_count).collect();
        assert_eq!(counts, [4, 4, 4, 4, 7]);
        assert!(points.windows(2).all(|w| w[0].mean_set_mass <= w[1].mean_set_mass));
        assert!(calibration_bins(&obs[..3], 5).is_err());
    }

    #[test]
    fn coverage_of_two_entry_beam() {
        let m = ab();
        let beam = beam_search(&m, &[3], &BeamConfig::with_width(2)).unwrap();
        let c = cumulative_coverage(&beam.hypotheses);
        assert_eq!(c.points.len(), 2);
        assert!((c.points[0].1 - 0.6).abs() < 1e-12);
        assert!((c.points[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_ignores_duplicates() {
        let m = ab();
        let mut s = sample(&m, &[3], 50, 3, 5).unwrap();
        let before = cumulative_coverage(&s).final_mass();
        s.push(s[0].clone());
        assert_eq!(cumulative_coverage(&s).final_mass(), before);
    }

    #[test]
    fn sampled_coverage_matches_enumeration() {
        let m = TabularModel::from_strings(&[(
            "x",
            vec![
                ("a", 0.5),
                ("b", 0.2),
                ("c d", 0.1),
                ("e", 0.1),
                ("f", 0.05),
                ("g h", 0.05),
            ],
        )])
        .unwrap();
        let s = sample(&m, &[3], 40, 5, 5).unwrap();
        let observed: HashSet<&Vec<TokenId>> = s.iter().map(|h| &h.tokens).collect();
        let exact: f64 = enumerate_distribution(&m, &[3], 5)
            .unwrap()
            .iter()
            .filter(|(t, _)| observed.contains(t))
            .map(|e| e.1)
            .sum();
        assert!((cumulative_coverage(&s).final_mass() - exact).abs() < 1e-12);
    }

    #[test]
    fn set_mass_sums_raw_probabilities() {
        let m = ab();
        let beam = beam_search(&m, &[3], &BeamConfig::with_width(1)).unwrap();
        let a = m.target_vocab().id("A").unwrap();
        let obs = observe_set(&beam.hypotheses, &[a]);
        assert!((obs.mass - 0.6).abs() < 1e-12);
        assert!(obs.contains_reference);
    }
}
