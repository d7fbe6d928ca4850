use std::collections::BTreeSet;

use rayon::prelude::*;

use super::ExperimentConfig;
use crate::calibration::cumulative_coverage;
use crate::corpus::{
    filter_by_score, generate_synthetic, inject_copy_noise, inject_replacement, ParallelCorpus, ReplacementSpec,
    SyntheticTaskSpec, TaskSampler, TokenId, DEFAULT_COPY_THRESHOLD,
};
use crate::metrics::{copy_rate, corpus_bleu, corpus_oracle_metrics, sentence_bleu, CopyRates};
use crate::model::{ConditionalSequenceModel, MixtureModel};
use crate::rng::{derive_seed, seeded};
use crate::search::{decode_all, rank_order, sample_all, BeamConfig, BeamResult, Hypothesis};
use crate::table::Table;
use crate::Result;

// Seed streams derived from the config seed.
const TEST_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 100;
const SAMPLE_STREAM: u64 = 200;
const REPLACE_STREAM: u64 = 300;
const REFERENCE_STREAM: u64 = 400;

struct Data {
    spec: SyntheticTaskSpec,
    train: ParallelCorpus,
    test: ParallelCorpus,
}

fn prepare(config: &ExperimentConfig) -> Result<Data> {
    let spec = config.task.spec(config.seed);
    let train = generate_synthetic(&spec)?;
    let test_spec = SyntheticTaskSpec {
        corpus_size: config.task.test_size,
        seed: derive_seed(config.seed, TEST_STREAM),
        ..spec.clone()
    };
    let test = generate_synthetic(&test_spec)?;
    Ok(Data { spec, train, test })
}

type Sentences = Vec<Vec<TokenId>>;

/// Test sources and references in the model's id space.
fn eval_set<M: ConditionalSequenceModel>(model: &M, test: &ParallelCorpus) -> Result<(Sentences, Sentences)> {
    let mut sources = Vec::with_capacity(test.len());
    let mut refs = Vec::with_capacity(test.len());
    for pair in test.pairs() {
        sources.push(model.source_vocab().translate_ids(test.source_vocab(), &pair.source)?);
        refs.push(model.target_vocab().translate_ids(test.target_vocab(), &pair.target)?);
    }
    Ok((sources, refs))
}

/// Best hypothesis per sentence; empty when every hypothesis was pruned.
fn top1(results: &[BeamResult]) -> Vec<Vec<TokenId>> {
    results
        .iter()
        .map(|r| r.best().map(|h| h.tokens.clone()).unwrap_or_default())
        .collect()
}

fn single_refs(refs: &[Vec<TokenId>]) -> Vec<Vec<Vec<TokenId>>> {
    refs.iter().map(|r| vec![r.clone()]).collect()
}

fn copy_rates<M: ConditionalSequenceModel>(
    model: &M,
    outputs: &[Vec<TokenId>],
    sources: &[Vec<TokenId>],
) -> Result<CopyRates> {
    let out: Vec<Vec<&str>> = outputs
        .iter()
        .map(|o| model.target_vocab().decode(o).collect())
        .collect();
    let src: Vec<Vec<&str>> = sources
        .iter()
        .map(|s| model.source_vocab().decode(s).collect())
        .collect();
    copy_rate(&out, &src, DEFAULT_COPY_THRESHOLD)
}

fn noised_model(config: &ExperimentConfig, train: &ParallelCorpus, level: usize) -> Result<MixtureModel> {
    let p = config.noise_levels[level];
    let noised = inject_copy_noise(train, p, derive_seed(config.seed, NOISE_STREAM + level as u64))?;
    MixtureModel::train(&noised.corpus, config.model)
}

fn beam(width: usize, no_copy: bool) -> BeamConfig {
    let config = BeamConfig::with_width(width);
    if no_copy {
        config.no_copy(DEFAULT_COPY_THRESHOLD)
    } else {
        config
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// BLEU of a clean test set at every beam width, for models trained with
/// each copy-noise level. `delta` is BLEU at the first width minus BLEU at
/// the last.
pub fn copy_noise_sweep(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let rows: Vec<Vec<f64>> = (0..config.noise_levels.len())
        .into_par_iter()
        .map(|level| {
            let model = noised_model(config, &data.train, level)?;
            let (sources, refs) = eval_set(&model, &data.test)?;
            let refs = single_refs(&refs);
            config
                .beam_widths
                .iter()
                .map(|&k| {
                    let out = top1(&decode_all(&model, &sources, &beam(k, false))?);
                    Ok(corpus_bleu(&out, &refs)?.score)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut columns = vec!["p_noise".to_string()];
    columns.extend(config.beam_widths.iter().map(|k| format!("bleu_k{k}")));
    columns.push("delta".into());
    let mut table = Table::new(&columns);
    for (p, bleus) in config.noise_levels.iter().zip(rows) {
        let mut row = vec![fmt(*p)];
        row.extend(bleus.iter().map(|b| fmt(*b)));
        row.push(fmt(bleus[0] - bleus[bleus.len() - 1]));
        table.push(&row);
    }
    Ok(table)
}

/// Copy rates of top-1 beam outputs per noise level and width, with and
/// without the no-copy constraint.
pub fn beam_copy_rate(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let rows: Vec<Vec<Vec<String>>> = (0..config.noise_levels.len())
        .into_par_iter()
        .map(|level| {
            let model = noised_model(config, &data.train, level)?;
            let (sources, _) = eval_set(&model, &data.test)?;
            let mut rows = Vec::new();
            for &k in &config.beam_widths {
                for no_copy in [false, true] {
                    let out = top1(&decode_all(&model, &sources, &beam(k, no_copy))?);
                    let r = copy_rates(&model, &out, &sources)?;
                    rows.push(vec![
                        fmt(config.noise_levels[level]),
                        k.to_string(),
                        no_copy.to_string(),
                        fmt(r.exact),
                        fmt(r.partial),
                        fmt(r.total),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["p_noise", "beam", "no_copy", "exact", "partial", "total"]);
    rows.into_iter().flatten().for_each(|r| table.push(&r));
    Ok(table)
}

/// BLEU and output copy rates of the original, filtered, no-copy,
/// filtered+no-copy and clean variants at every beam width.
///
/// The first `clean_fraction` of the training pairs stay noise-free; the
/// rest receive copy noise. The clean variant trains on the noise-free part
/// only, which also trains the filtering scorer.
pub fn mitigation_comparison(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let n_clean = ((config.clean_fraction * data.train.len() as f64).round() as usize).max(1);
    let clean = data.train.select(0..n_clean);
    let rest = data.train.select(n_clean..data.train.len());
    let clean_model = MixtureModel::train(&clean, config.model)?;

    let rows: Vec<Vec<Vec<String>>> = (0..config.noise_levels.len())
        .into_par_iter()
        .map(|level| {
            let p = config.noise_levels[level];
            let noised = inject_copy_noise(&rest, p, derive_seed(config.seed, NOISE_STREAM + level as u64))?;
            // Noising only appends to the target vocabulary, so clean ids stay valid.
            let mut pairs = clean.pairs().to_vec();
            pairs.extend_from_slice(noised.corpus.pairs());
            let original = ParallelCorpus::new(
                pairs,
                noised.corpus.source_vocab().clone(),
                noised.corpus.target_vocab().clone(),
            )?;
            let filtered = filter_by_score(&original, &clean_model, config.drop_fraction)?;
            let original_model = MixtureModel::train(&original, config.model)?;
            let filtered_model = MixtureModel::train(&filtered, config.model)?;
            let variants: [(&str, &MixtureModel, bool); 5] = [
                ("original", &original_model, false),
                ("filtered", &filtered_model, false),
                ("no_copy", &original_model, true),
                ("filtered_no_copy", &filtered_model, true),
                ("clean", &clean_model, false),
            ];
            let mut rows = Vec::new();
            for (name, model, no_copy) in variants {
                let (sources, refs) = eval_set(model, &data.test)?;
                let refs = single_refs(&refs);
                for &k in &config.beam_widths {
                    let out = top1(&decode_all(model, &sources, &beam(k, no_copy))?);
                    let bleu = corpus_bleu(&out, &refs)?.score;
                    let r = copy_rates(model, &out, &sources)?;
                    rows.push(vec![
                        fmt(p),
                        name.to_string(),
                        k.to_string(),
                        fmt(bleu),
                        fmt(r.exact),
                        fmt(r.total),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["p_noise", "variant", "beam", "bleu", "exact_copy", "total_copy"]);
    rows.into_iter().flatten().for_each(|r| table.push(&r));
    Ok(table)
}

/// Sequence-level copy rates among `samples_per_source` samples per test
/// source, for each noise level.
pub fn copy_rate_control(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let rows: Vec<(f64, CopyRates, usize)> = (0..config.noise_levels.len())
        .into_par_iter()
        .map(|level| {
            let model = noised_model(config, &data.train, level)?;
            let (sources, _) = eval_set(&model, &data.test)?;
            let samples = sample_all(
                &model,
                &sources,
                config.samples_per_source,
                derive_seed(config.seed, SAMPLE_STREAM + level as u64),
                None,
            )?;
            let mut outputs = Vec::new();
            let mut paired = Vec::new();
            for (s, row) in sources.iter().zip(&samples) {
                for h in row {
                    outputs.push(h.tokens.clone());
                    paired.push(s.clone());
                }
            }
            Ok((
                config.noise_levels[level],
                copy_rates(&model, &outputs, &paired)?,
                outputs.len(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["p_noise", "exact", "partial", "total", "samples"]);
    for (p, r, n) in rows {
        table.push(&[fmt(p), fmt(r.exact), fmt(r.partial), fmt(r.total), n.to_string()]);
    }
    Ok(table)
}

/// Target words produced only by deterministic source tokens, so every
/// occurrence marks a known slot. Returns up to `n` in target-vocabulary order.
fn replacement_words(spec: &SyntheticTaskSpec, n: usize) -> Vec<String> {
    let mut ambiguous = BTreeSet::new();
    let mut deterministic = BTreeSet::new();
    for list in spec.options.values() {
        for option in list {
            if list.len() == 1 {
                deterministic.insert(option.target.as_str());
            } else {
                ambiguous.insert(option.target.as_str());
            }
        }
    }
    let (_, vocab) = spec.vocabularies();
    vocab
        .ordinary_ids()
        .filter_map(|id| vocab.token(id))
        .filter(|t| deterministic.contains(t) && !ambiguous.contains(t))
        .take(n)
        .map(str::to_owned)
        .collect()
}

/// Fraction of rewritten-word slots realized as the first alternative, by
/// beam search at each width and by sampling, for each prior rate.
pub fn replacement_experiment(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let words = replacement_words(&data.spec, config.replacement_words);
    if words.is_empty() {
        return Err(crate::Error::InvalidArgument(
            "the task has no word produced only by deterministic sources".into(),
        ));
    }
    let alternatives: Vec<(String, String)> = words.iter().map(|w| (format!("{w}_a"), format!("{w}_b"))).collect();
    let rows: Vec<Vec<Vec<String>>> = (0..config.replacement_rates.len())
        .into_par_iter()
        .map(|i| {
            let prior = config.replacement_rates[i];
            let mut corpus = data.train.clone();
            for (j, (word, (w1, w2))) in words.iter().zip(&alternatives).enumerate() {
                let spec = ReplacementSpec {
                    word: word.clone(),
                    w1: w1.clone(),
                    w2: w2.clone(),
                    rate: prior,
                };
                let seed = derive_seed(config.seed, REPLACE_STREAM + (i * 1000 + j) as u64);
                corpus = inject_replacement(&corpus, &spec, seed)?;
            }
            let model = MixtureModel::train(&corpus, config.model)?;
            let (sources, _) = eval_set(&model, &data.test)?;
            let ids: Vec<(TokenId, TokenId)> = alternatives
                .iter()
                .map(|(a, b)| (model.target_vocab().id(a).unwrap(), model.target_vocab().id(b).unwrap()))
                .collect();
            let measure = |outputs: &[Vec<TokenId>]| -> (f64, usize) {
                let (mut first, mut slots) = (0usize, 0usize);
                for t in outputs.iter().flatten() {
                    if ids.iter().any(|&(a, _)| a == *t) {
                        first += 1;
                        slots += 1;
                    } else if ids.iter().any(|&(_, b)| b == *t) {
                        slots += 1;
                    }
                }
                (
                    if slots == 0 {
                        f64::NAN
                    } else {
                        first as f64 / slots as f64
                    },
                    slots,
                )
            };
            let mut rows = Vec::new();
            for &k in &config.beam_widths {
                let out = top1(&decode_all(&model, &sources, &beam(k, false))?);
                let (rate, slots) = measure(&out);
                rows.push(vec![fmt(prior), format!("beam_k{k}"), fmt(rate), slots.to_string()]);
            }
            let samples = sample_all(
                &model,
                &sources,
                config.samples_per_source,
                derive_seed(config.seed, SAMPLE_STREAM + i as u64),
                None,
            )?;
            let out: Vec<Vec<TokenId>> = samples.into_iter().flatten().map(|h| h.tokens).collect();
            let (rate, slots) = measure(&out);
            rows.push(vec![fmt(prior), "sampling".into(), fmt(rate), slots.to_string()]);
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["prior", "decoder", "rate", "slots"]);
    rows.into_iter().flatten().for_each(|r| table.push(&r));
    Ok(table)
}

/// Multi-reference evaluation of beam search at each width and of
/// `samples_per_source` samples, against `references` translations per test
/// source drawn from the task distribution.
pub fn oracle_study(config: &ExperimentConfig) -> Result<Table> {
    let data = prepare(config)?;
    let level = 0;
    let model = noised_model(config, &data.train, level)?;
    let (sources, _) = eval_set(&model, &data.test)?;

    let sampler = TaskSampler::new(&data.spec.option_table());
    let mut rng = seeded(derive_seed(config.seed, REFERENCE_STREAM));
    let refs: Vec<Vec<Vec<TokenId>>> = data
        .test
        .pairs()
        .iter()
        .map(|pair| {
            (0..config.references)
                .map(|_| {
                    let t = sampler.translate(&pair.source, &mut rng);
                    model.target_vocab().translate_ids(data.test.target_vocab(), &t)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut candidates: Vec<(String, Vec<Vec<Hypothesis>>)> = Vec::new();
    for &k in &config.beam_widths {
        let results = decode_all(&model, &sources, &beam(k, false))?;
        candidates.push((
            format!("beam_k{k}"),
            results.into_iter().map(|r| r.hypotheses).collect(),
        ));
    }
    let mut samples = sample_all(
        &model,
        &sources,
        config.samples_per_source,
        derive_seed(config.seed, SAMPLE_STREAM),
        None,
    )?;
    let coverage_order = samples.clone();
    for row in &mut samples {
        row.sort_by(|a, b| rank_order(a, b, true));
    }
    candidates.push((format!("sampling_n{}", config.samples_per_source), samples));

    let mut table = Table::new(&[
        "decoder",
        "candidates",
        "prob_covered",
        "sentence_bleu_single",
        "oracle_reference",
        "average_oracle",
        "refs_covered",
        "corpus_bleu_single",
        "corpus_bleu_multi",
    ]);
    for (i, (name, hyps)) in candidates.iter().enumerate() {
        let is_sampling = i + 1 == candidates.len();
        let mass_source = if is_sampling { &coverage_order } else { hyps };
        let covered = mass_source
            .iter()
            .map(|h| cumulative_coverage(h).final_mass())
            .sum::<f64>()
            / hyps.len() as f64;
        let tokens: Vec<Vec<Vec<TokenId>>> = hyps
            .iter()
            .map(|row| row.iter().map(|h| h.tokens.clone()).collect())
            .collect();
        let best: Vec<Vec<TokenId>> = tokens.iter().map(|row| row[0].clone()).collect();
        let single: Vec<Vec<Vec<TokenId>>> = refs.iter().map(|r| vec![r[0].clone()]).collect();
        let sentence_single =
            best.iter().zip(&single).map(|(h, r)| sentence_bleu(h, r)).sum::<f64>() / best.len() as f64;
        let oracle = corpus_oracle_metrics(&tokens, &refs)?;
        let n_candidates = hyps.iter().map(Vec::len).sum::<usize>() as f64 / hyps.len() as f64;
        table.push(&[
            name.clone(),
            fmt(n_candidates),
            fmt(covered),
            fmt(sentence_single),
            fmt(oracle.oracle_reference),
            fmt(oracle.average_oracle),
            fmt(oracle.refs_covered),
            fmt(corpus_bleu(&best, &single)?.score),
            fmt(corpus_bleu(&best, &refs)?.score),
        ]);
    }
    Ok(table)
}
