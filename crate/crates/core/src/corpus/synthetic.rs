use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ParallelCorpus, Sentence, SentencePair, TokenId, Vocabulary};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationOption {
    pub target: String,
    pub probability: f64,
}

/// A monotone token-to-token translation task with a closed-form data distribution:
/// every source token is translated independently by sampling its option list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub source_vocab_size: usize,
    pub options: BTreeMap<String, Vec<TranslationOption>>,
    /// Inclusive sentence length range.
    pub length_range: (usize, usize),
    pub corpus_size: usize,
    pub seed: u64,
}

/// Option distributions used by [`SyntheticTaskSpec::desk_scale`]. Adjacent
/// probabilities differ by at least 0.1 so the per-token mode is unambiguous.
const OPTION_TEMPLATES: [&[f64]; 4] = [&[1.0], &[0.6, 0.4], &[0.5, 0.3, 0.2], &[0.4, 0.3, 0.2, 0.1]];

impl SyntheticTaskSpec {
    /// A random task over `s0..s{n}` and `t0..t{m}`. Each source token receives one
    /// of four option templates; option targets are drawn with Zipfian weights so
    /// target unigram frequencies are skewed.
    pub fn desk_scale(
        source_vocab_size: usize,
        target_vocab_size: usize,
        length_range: (usize, usize),
        corpus_size: usize,
        seed: u64,
    ) -> Self {
        let mut rng = seeded(derive_seed(seed, 0x0971_0175));
        let zipf: Vec<f64> = (0..target_vocab_size).map(|j| 1.0 / (j + 1) as f64).collect();
        let mut options = BTreeMap::new();
        for i in 0..source_vocab_size {
            let template = OPTION_TEMPLATES.choose(&mut rng).unwrap();
            let mut weights = zipf.clone();
            let mut list = Vec::with_capacity(template.len());
            for &probability in template.iter() {
                let j = WeightedIndex::new(&weights).unwrap().sample(&mut rng);
                weights[j] = 0.0;
                list.push(TranslationOption {
                    target: format!("t{j}"),
                    probability,
                });
            }
            options.insert(format!("s{i}"), list);
        }
        SyntheticTaskSpec {
            source_vocab_size,
            options,
            length_range,
            corpus_size,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.source_vocab_size < 2 {
            return bad("source vocabulary must contain at least 2 tokens".into());
        }
        if self.options.len() != self.source_vocab_size {
            return bad(format!(
                "{} option lists for a source vocabulary of {}",
                self.options.len(),
                self.source_vocab_size
            ));
        }
        let (lo, hi) = self.length_range;
        if lo == 0 || lo > hi {
            return bad(format!("invalid length range ({lo}, {hi})"));
        }
        for (source, list) in &self.options {
            if Vocabulary::is_reserved(source) || list.is_empty() {
                return bad(format!("invalid option list for {source:?}"));
            }
            let total: f64 = list.iter().map(|o| o.probability).sum();
            if list.iter().any(|o| o.probability.is_nan() || o.probability < 0.0) || (total - 1.0).abs() > 1e-9 {
                return bad(format!("options of {source:?} sum to {total}, not 1"));
            }
            let mut seen: Vec<&str> = list.iter().map(|o| o.target.as_str()).collect();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != list.len() || seen.iter().any(|t| Vocabulary::is_reserved(t)) {
                return bad(format!("duplicate or reserved targets for {source:?}"));
            }
        }
        if self.vocabularies().1.ordinary_len() < 2 {
            return bad("target vocabulary must contain at least 2 tokens".into());
        }
        Ok(())
    }

    /// Source and target vocabularies in a deterministic order.
    pub fn vocabularies(&self) -> (Vocabulary, Vocabulary) {
        let source = Vocabulary::from_tokens(self.options.keys());
        let target = Vocabulary::from_tokens(
            self.options
                .values()
                .flat_map(|list| list.iter().map(|o| o.target.as_str())),
        );
        (source, target)
    }

    /// Option lists indexed by source token id, with target ids.
    pub fn option_table(&self) -> Vec<Vec<(TokenId, f64)>> {
        let (source, target) = self.vocabularies();
        let mut table = vec![Vec::new(); source.len()];
        for (token, list) in &self.options {
            let id = source.id(token).unwrap() as usize;
            table[id] = list
                .iter()
                .map(|o| (target.id(&o.target).unwrap(), o.probability))
                .collect();
        }
        table
    }
}

/// Samples translations of source sentences under a fixed task.
pub struct TaskSampler {
    samplers: Vec<Option<(Vec<TokenId>, WeightedIndex<f64>)>>,
}

impl TaskSampler {
    pub fn new(table: &[Vec<(TokenId, f64)>]) -> Self {
        let samplers = table
            .iter()
            .map(|list| {
                (!list.is_empty()).then(|| {
                    let ids = list.iter().map(|o| o.0).collect();
                    let dist = WeightedIndex::new(list.iter().map(|o| o.1)).unwrap();
                    (ids, dist)
                })
            })
            .collect();
        TaskSampler { samplers }
    }

    pub fn translate<R: Rng>(&self, source: &[TokenId], rng: &mut R) -> Vec<TokenId> {
        source
            .iter()
            .map(|&s| {
                let (ids, dist) = self.samplers[s as usize]
                    .as_ref()
                    .expect("source token without translation options");
                ids[dist.sample(rng)]
            })
            .collect()
    }
}

/// Samples `spec.corpus_size` pairs: uniform lengths, uniform source tokens, and
/// independent per-token translations.
pub fn generate_synthetic(spec: &SyntheticTaskSpec) -> Result<ParallelCorpus> {
    spec.validate()?;
    let (source_vocab, target_vocab) = spec.vocabularies();
    let sampler = TaskSampler::new(&spec.option_table());
    let source_ids: Vec<TokenId> = source_vocab.ordinary_ids().collect();
    let (lo, hi) = spec.length_range;

    let mut rng = seeded(spec.seed);
    let mut pairs = Vec::with_capacity(spec.corpus_size);
    for _ in 0..spec.corpus_size {
        let len = rng.gen_range(lo..=hi);
        let source: Vec<TokenId> = (0..len).map(|_| *source_ids.choose(&mut rng).unwrap()).collect();
        let target = sampler.translate(&source, &mut rng);
        pairs.push(SentencePair {
            source: Sentence(source),
            target: Sentence(target),
        });
    }
    ParallelCorpus::new(pairs, source_vocab, target_vocab)
}
