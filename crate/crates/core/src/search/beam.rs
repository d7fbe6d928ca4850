use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{rank_order, BeamConfig, Constraint, Hypothesis};
use crate::corpus::{CopyDetector, TokenId, Vocabulary, BOS, EOS, UNK};
use crate::model::ConditionalSequenceModel;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Complete,
    /// Every finished hypothesis was removed by a constraint.
    AllPruned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamResult {
    /// At most `beam_width` finished hypotheses, best first.
    pub hypotheses: Vec<Hypothesis>,
    pub status: SearchStatus,
}

impl BeamResult {
    pub fn best(&self) -> Option<&Hypothesis> {
        self.hypotheses.first()
    }
}

/// True when the finished hypothesis must be pruned: its unigram IoU with the
/// source reaches `threshold`.
pub fn no_copy_constraint<S: AsRef<str>, T: AsRef<str>>(hypothesis: &[T], source: &[S], threshold: f64) -> bool {
    CopyDetector::new(source).is_copy(hypothesis, threshold)
}

struct Live {
    tokens: Vec<TokenId>,
    log_prob: f64,
}

struct Candidate {
    parent: usize,
    /// EOS marks a finishing candidate.
    token: TokenId,
    log_prob: f64,
    truncated: bool,
}

fn candidate_order(live: &[Live], a: &Candidate, b: &Candidate) -> Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| {
        let pa = live[a.parent].tokens.iter().chain(std::iter::once(&a.token));
        let pb = live[b.parent].tokens.iter().chain(std::iter::once(&b.token));
        pa.cmp(pb)
    })
}

struct Pruner<'a> {
    vocab: &'a Vocabulary,
    detector: CopyDetector,
    thresholds: Vec<f64>,
}

impl Pruner<'_> {
    fn prunes(&self, tokens: &[TokenId]) -> bool {
        if self.thresholds.is_empty() {
            return false;
        }
        let words: Vec<&str> = self.vocab.decode(tokens).collect();
        self.thresholds.iter().any(|&t| self.detector.is_copy(&words, t))
    }
}

/// Beam search with top-`k` selection over all expansions by raw
/// log-probability. Hypotheses that emit EOS are set aside; the search ends
/// once `k` have finished or no live hypothesis remains. At `max_len` EOS is
/// forced and its actual probability is charged.
pub fn beam_search<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    config: &BeamConfig,
) -> Result<BeamResult> {
    config.validate()?;
    let k = config.beam_width;
    let max_len = config.max_len_for(source.len());
    let source_words: Vec<&str> = model.source_vocab().decode(source).collect();
    let pruner = Pruner {
        vocab: model.target_vocab(),
        detector: CopyDetector::new(&source_words),
        thresholds: config
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::NoCopy { threshold } => *threshold,
            })
            .collect(),
    };

    let mut live = vec![Live {
        tokens: Vec::new(),
        log_prob: 0.0,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut pruned_any = false;
    let mut dist = Vec::new();
    while !live.is_empty() && finished.len() < k {
        let mut candidates = Vec::new();
        for (parent, hyp) in live.iter().enumerate() {
            model.next_token_distribution_into(source, &hyp.tokens, &mut dist);
            let at_cap = hyp.tokens.len() >= max_len;
            let p_eos = dist[EOS as usize];
            if (p_eos > 0.0 || at_cap) && !pruner.prunes(&hyp.tokens) {
                candidates.push(Candidate {
                    parent,
                    token: EOS,
                    log_prob: hyp.log_prob + p_eos.ln(),
                    truncated: at_cap,
                });
            } else if p_eos > 0.0 || at_cap {
                pruned_any = true;
            }
            if at_cap {
                continue;
            }
            for (t, &p) in dist.iter().enumerate() {
                let t = t as TokenId;
                if p > 0.0 && t != EOS && t != BOS && t != UNK {
                    candidates.push(Candidate {
                        parent,
                        token: t,
                        log_prob: hyp.log_prob + p.ln(),
                        truncated: false,
                    });
                }
            }
        }
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, |a, b| candidate_order(&live, a, b));
            candidates.truncate(k);
        }
        candidates.sort_by(|a, b| candidate_order(&live, a, b));
        let mut next = Vec::with_capacity(k);
        for c in candidates {
            let mut tokens = live[c.parent].tokens.clone();
            if c.token == EOS {
                finished.push(Hypothesis::finish(tokens, c.log_prob, c.truncated));
            } else {
                tokens.push(c.token);
                next.push(Live {
                    tokens,
                    log_prob: c.log_prob,
                });
            }
        }
        live = next;
    }

    finished.sort_by(|a, b| rank_order(a, b, config.length_normalization));
    finished.truncate(k);
    let status = if finished.is_empty() && pruned_any {
        SearchStatus::AllPruned
    } else {
        SearchStatus::Complete
    };
    Ok(BeamResult {
        hypotheses: finished,
        status,
    })
}

/// Beam search with width 1.
pub fn greedy<M: ConditionalSequenceModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    max_len: Option<usize>,
) -> Result<Option<Hypothesis>> {
    let config = BeamConfig {
        beam_width: 1,
        max_len,
        length_normalization: true,
        constraints: Vec::new(),
    };
    Ok(beam_search(model, source, &config)?.hypotheses.into_iter().next())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sequence_log_prob, TabularModel};

    fn words(m: &TabularModel, h: &Hypothesis) -> String {
        m.target_vocab().detokenize(&h.tokens)
    }

    #[test]
    fn two_entry_table() {
        let m = TabularModel::from_strings(&[("x", vec![("A", 0.6), ("B", 0.4)])]).unwrap();
        let r = beam_search(&m, &[3], &BeamConfig::with_width(2)).unwrap();
        assert_eq!(r.status, SearchStatus::Complete);
        let got: Vec<String> = r.hypotheses.iter().map(|h| words(&m, h)).collect();
        assert_eq!(got, ["A", "B"]);
        assert!((r.hypotheses[0].log_prob - 0.6f64.ln()).abs() < 1e-15);
        assert!((r.hypotheses[1].log_prob - 0.4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delta_model_scores_zero() {
        let m = TabularModel::from_strings(&[("x", vec![("a b c", 1.0)])]).unwrap();
        let r = beam_search(&m, &[3], &BeamConfig::with_width(1)).unwrap();
        assert_eq!(r.hypotheses.len(), 1);
        assert_eq!(r.hypotheses[0].log_prob, 0.0);
        assert!(r.hypotheses[0].finished);
    }

    const COPY: &str = "s1 s2 s3 s4 s5 s6 s7 s8 s9 s10 s11 s12 s13 s14 s15 s16 s17 s18 s19 s20";

    /// A genuine translation of four tokens with total probability 0.3
    /// against a 20-token copy whose first token has probability 0.01 and
    /// whose remaining steps are deterministic.
    fn copy_mode_table() -> TabularModel {
        TabularModel::from_strings(&[(
            COPY,
            vec![
                (COPY, 0.01),
                ("g1 g2 g3 g4", 0.3),
                ("g1 g2 g3 h4", 0.25),
                ("g1 g2 h3 g4", 0.24),
                ("h1 g2 g3 g4", 0.2),
            ],
        )])
        .unwrap()
    }

    #[test]
    fn wide_beam_prefers_normalized_copy() {
        let m = copy_mode_table();
        let src: Vec<TokenId> = (3..23).collect();
        // Oracle: normalized scores from the table itself.
        let copy_norm = 0.01f64.ln() / 21.0;
        let genuine_norm = 0.3f64.ln() / 5.0;
        assert!(copy_norm > genuine_norm);
        let narrow = beam_search(&m, &src, &BeamConfig::with_width(1)).unwrap();
        assert_eq!(words(&m, &narrow.hypotheses[0]), "g1 g2 g3 g4");
        let wide = beam_search(&m, &src, &BeamConfig::with_width(20)).unwrap();
        assert_eq!(words(&m, &wide.hypotheses[0]), COPY);
        assert!((wide.hypotheses[0].norm_score - copy_norm).abs() < 1e-12);
    }

    #[test]
    fn no_copy_removes_copy_hypothesis() {
        let m = copy_mode_table();
        let src: Vec<TokenId> = (3..23).collect();
        let cfg = BeamConfig::with_width(20).no_copy(0.5);
        let r = beam_search(&m, &src, &cfg).unwrap();
        assert_eq!(words(&m, &r.hypotheses[0]), "g1 g2 g3 g4");
        assert_eq!(r.hypotheses.len(), 4);
    }

    #[test]
    fn all_pruned_is_reported() {
        let m = TabularModel::from_strings(&[("a b", vec![("a b", 1.0)])]).unwrap();
        let r = beam_search(&m, &[3, 4], &BeamConfig::with_width(3).no_copy(0.5)).unwrap();
        assert!(r.hypotheses.is_empty());
        assert_eq!(r.status, SearchStatus::AllPruned);
    }

    #[test]
    fn constraint_iou_boundary() {
        assert!(no_copy_constraint(&["a", "b", "c"], &["a", "b", "c"], 0.5));
        assert!(!no_copy_constraint(&["x", "y"], &["a", "b"], 0.5));
        // {a, b} vs {a, b, c, d}: IoU = 2/4 exactly.
        assert!(no_copy_constraint(&["a", "b"], &["a", "b", "c", "d"], 0.5));
        assert!(!no_copy_constraint(&["a"], &["a", "b", "c"], 0.5));
    }

    #[test]
    fn length_cap_forces_eos() {
        let m = TabularModel::from_strings(&[("x", vec![("a b c d", 1.0)])]).unwrap();
        let cfg = BeamConfig {
            beam_width: 2,
            max_len: Some(2),
            ..Default::default()
        };
        let r = beam_search(&m, &[3], &cfg).unwrap();
        let h = &r.hypotheses[0];
        assert!(h.truncated);
        assert_eq!(h.tokens.len(), 2);
        // The table never stops after two tokens.
        assert_eq!(h.log_prob, f64::NEG_INFINITY);
    }

    #[test]
    fn returned_scores_match_sequence_log_prob() {
        let m = copy_mode_table();
        let src: Vec<TokenId> = (3..23).collect();
        let r = beam_search(&m, &src, &BeamConfig::with_width(5)).unwrap();
        for h in &r.hypotheses {
            let lp = sequence_log_prob(&m, &src, &h.tokens).unwrap().log_prob;
            assert_eq!(lp, h.log_prob);
        }
    }
}
