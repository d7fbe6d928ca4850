use std::collections::{HashMap, HashSet};

use beamcal::corpus::{generate_synthetic, inject_copy_noise, SyntheticTaskSpec, TokenId, Vocabulary};
use beamcal::metrics::{corpus_bleu, sentence_bleu, sentence_bleu_smoothed};
use beamcal::model::{
    enumerate_distribution, is_proper_distribution, sequence_log_prob, ConditionalSequenceModel, MixtureModel,
    MixtureParams, TabularModel,
};
use beamcal::search::{beam_search, exact_top1, sample, BeamConfig};
use proptest::prelude::*;

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 1..12)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

/// Distinct target sequences over three tokens with positive weights.
fn table() -> impl Strategy<Value = Vec<(Vec<u8>, f64)>> {
    prop::collection::hash_map(prop::collection::vec(0u8..3, 0..4), 0.05f64..1.0, 1..20).prop_map(|m| {
        let mut v: Vec<(Vec<u8>, f64)> = m.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let total: f64 = v.iter().map(|e| e.1).sum();
        v.into_iter().map(|(s, w)| (s, w / total)).collect()
    })
}

fn tabular(entries: &[(Vec<u8>, f64)]) -> TabularModel {
    let target_vocab = Vocabulary::from_tokens(["x", "y", "z"]);
    let ids: Vec<TokenId> = target_vocab.ordinary_ids().collect();
    let rows = entries
        .iter()
        .map(|(s, p)| (s.iter().map(|&i| ids[i as usize]).collect(), *p))
        .collect();
    TabularModel::new(
        Vocabulary::from_tokens(["src"]),
        target_vocab,
        HashMap::from([(vec![3], rows)]),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bleu_is_bounded_and_identity_is_100(h in words(), r in words()) {
        let s = sentence_bleu(&h, std::slice::from_ref(&r));
        prop_assert!((0.0..=100.0).contains(&s));
        prop_assert!((sentence_bleu_smoothed(&h, std::slice::from_ref(&h)).score - 100.0).abs() < 1e-9);
        let c = corpus_bleu(std::slice::from_ref(&h), &[vec![h.clone()]]).unwrap().score;
        prop_assert!((c - 100.0).abs() < 1e-9);
    }

    #[test]
    fn a_matching_reference_gives_100(h in words(), r in words()) {
        let c = corpus_bleu(std::slice::from_ref(&h), &[vec![r, h.clone()]]).unwrap().score;
        prop_assert!((c - 100.0).abs() < 1e-9);
    }

    #[test]
    fn full_width_beam_is_exact(entries in table()) {
        let model = tabular(&entries);
        let beam = beam_search(&model, &[3], &BeamConfig::with_width(entries.len())).unwrap();
        prop_assert_eq!(beam.hypotheses.len(), entries.len());
        let returned: HashSet<&Vec<TokenId>> = beam.hypotheses.iter().map(|h| &h.tokens).collect();
        prop_assert_eq!(returned.len(), entries.len());
        prop_assert!(beam.hypotheses.windows(2).all(|w| w[0].norm_score >= w[1].norm_score));
        let exact = exact_top1(&model, &[3], 12, true).unwrap();
        prop_assert_eq!(&beam.hypotheses[0].tokens, &exact.tokens);
        for h in &beam.hypotheses {
            let p = model.entries(&[3]).unwrap().iter().find(|e| e.0 == h.tokens).unwrap().1;
            prop_assert!((h.log_prob - p.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(entries in table(), seed in any::<u64>()) {
        let model = tabular(&entries);
        prop_assert_eq!(sample(&model, &[3], 20, seed, 10).unwrap(), sample(&model, &[3], 20, seed, 10).unwrap());
    }

    #[test]
    fn copy_noise_rewrites_only_listed_pairs(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let spec = SyntheticTaskSpec::desk_scale(10, 10, (2, 5), 100, 4);
        let corpus = generate_synthetic(&spec).unwrap();
        let noised = inject_copy_noise(&corpus, p, seed).unwrap();
        let listed: HashSet<usize> = noised.replaced.iter().copied().collect();
        for (i, (a, b)) in corpus.pairs().iter().zip(noised.corpus.pairs()).enumerate() {
            prop_assert_eq!(corpus.source_line(i), noised.corpus.source_line(i));
            if listed.contains(&i) {
                prop_assert_eq!(noised.corpus.target_line(i), corpus.source_line(i));
            } else {
                prop_assert_eq!(noised.corpus.target_line(i), corpus.target_line(i));
            }
            prop_assert_eq!(a.source.len(), b.source.len());
        }
    }
}

#[test]
fn trained_mixture_is_a_proper_distribution() {
    let spec = SyntheticTaskSpec::desk_scale(12, 12, (2, 4), 400, 8);
    let corpus = inject_copy_noise(&generate_synthetic(&spec).unwrap(), 0.2, 3)
        .unwrap()
        .corpus;
    let model = MixtureModel::train(&corpus, MixtureParams::default()).unwrap();
    for pair in corpus.pairs().iter().take(30) {
        for k in 0..=pair.target.len() {
            let dist = model.next_token_distribution(&pair.source, &pair.target[..k]);
            assert!(is_proper_distribution(&dist, 1e-9));
        }
    }
    // Short sources: the enumerated support (length cap 4) holds nearly all mass.
    let short = corpus.pairs().iter().find(|p| p.source.len() == 2).unwrap();
    let support = enumerate_distribution(&model, &short.source, 4).unwrap();
    let mass: f64 = support.iter().map(|e| e.1).sum();
    assert!(mass > 0.9 && mass <= 1.0 + 1e-9, "mass {mass}");
    for (t, p) in support.iter().take(20) {
        let lp = sequence_log_prob(&model, &short.source, t).unwrap().log_prob;
        assert!((lp - p.ln()).abs() < 1e-9);
    }
}
