use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context as _, Result};
use beamcal::calibration::{
    build_sets, calibration_bins, calibration_table, copy_targets, cumulative_coverage, logprob_bleu_scatter,
    observe_set, per_position_avg_prob, repeated_source_match, selection_curves, token_prob_quantiles,
    RepeatedSourceReport, SetBuilder,
};
use beamcal::corpus::io::{read_parallel, read_references, read_tokenized};
use beamcal::corpus::{
    generate_synthetic, inject_copy_noise, inject_replacement, ParallelCorpus, ReplacementSpec, SyntheticTaskSpec,
    TaskSampler, TokenId, Vocabulary, DEFAULT_COPY_THRESHOLD, UNK,
};
use beamcal::experiments::{run_experiment, write_table, ExperimentConfig, ExperimentKind};
use beamcal::metrics::{
    expected_inter_bleu_pairs, model_inter_bleu_sampled, unigram_freq_bins, write_bleu_report, write_frequency_csv,
    Estimate,
};
use beamcal::model::{ConditionalSequenceModel, MixtureModel, MixtureParams};
use beamcal::rng::{derive_seed, seeded};
use beamcal::search::{decode_all, default_max_len, sample_all, write_beam_tsv, write_sample_tsv, BeamConfig};
use beamcal::table::Table;
use serde_json::{Map, Value};

use crate::args::*;
use crate::run::{verify_inputs, Run, RunManifest};

const REFERENCE_STREAM: u64 = 400;
const DEFAULT_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

pub fn invoke(cli: Cli, start: Instant) -> Result<()> {
    let Cli { global, command } = cli;
    let mut file = match &global.config {
        Some(path) => read_json_object(path)?,
        None => Map::new(),
    };
    let take_u64 = |file: &mut Map<String, Value>, key: &str| -> Result<Option<u64>> {
        file.remove(key)
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| anyhow!("config key {key:?} must be a non-negative integer"))
            })
            .transpose()
    };
    let file_seed = take_u64(&mut file, "seed")?;
    let file_jobs = take_u64(&mut file, "jobs")?;
    let file_out = file
        .remove("out")
        .map(|v| {
            v.as_str()
                .map(PathBuf::from)
                .ok_or_else(|| anyhow!("config key \"out\" must be a string"))
        })
        .transpose()?;

    if let Some(jobs) = global.jobs.or(file_jobs.map(|j| j as usize)) {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    if let Command::Report(args) = command {
        return report(args, global.out);
    }

    let seed = global.seed.or(file_seed).unwrap_or(0);
    let out = global.out.or(file_out).unwrap_or_else(|| PathBuf::from("."));
    let command = match command {
        Command::Experiment(args) => Command::Experiment(resolve_experiment(args, file, seed)?),
        other => merge_options(other, file)?,
    };
    execute(command, seed, out, start).map(|_| ())
}

fn read_json_object(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("{}: malformed config", path.display()))? {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: config must be a JSON object", path.display()),
    }
}

fn is_unset(v: &Value) -> bool {
    v.is_null() || v.as_array().is_some_and(Vec::is_empty)
}

/// File values first, then every flag that was given.
fn merge_options(command: Command, file: Map<String, Value>) -> Result<Command> {
    let mut value = serde_json::to_value(&command)?;
    let flags = value
        .get_mut("options")
        .and_then(Value::as_object_mut)
        .ok_or_else(|| anyhow!("internal: options are not an object"))?;
    let mut merged = file;
    for (k, v) in std::mem::take(flags) {
        if !is_unset(&v) || !merged.contains_key(&k) {
            merged.insert(k, v);
        }
    }
    *flags = merged;
    serde_json::from_value(value).context("malformed config")
}

fn deep_merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Experiment configs layer the driver defaults, the config file (a partial
/// experiment config) and the flags.
fn resolve_experiment(mut args: ExperimentArgs, file: Map<String, Value>, seed: u64) -> Result<ExperimentArgs> {
    if args.resolved.is_some() {
        return Ok(args);
    }
    let kind: ExperimentKind = args.experiment.parse()?;
    let mut value = serde_json::to_value(ExperimentConfig::new(kind, seed))?;
    deep_merge(&mut value, Value::Object(file));
    let mut config: ExperimentConfig = serde_json::from_value(value).context("malformed experiment config")?;
    config.experiment = kind;
    config.seed = seed;
    if let Some(n) = args.train_size {
        config.task.train_size = n;
    }
    if let Some(n) = args.test_size {
        config.task.test_size = n;
    }
    if !args.noise_levels.is_empty() {
        config.noise_levels = args.noise_levels.clone();
    }
    if !args.beam_widths.is_empty() {
        config.beam_widths = args.beam_widths.clone();
    }
    if let Some(n) = args.samples_per_source {
        config.samples_per_source = n;
    }
    config.validate()?;
    args.experiment = kind.name().to_string();
    args.resolved = Some(config);
    Ok(args)
}

/// Runs a fully merged command, fills in defaults for the manifest, and
/// removes partial outputs on failure.
fn execute(mut command: Command, seed: u64, out: PathBuf, start: Instant) -> Result<RunManifest> {
    let mut run = Run::new(out, seed)?;
    let stem = match run_command(&mut command, &mut run) {
        Ok(stem) => stem,
        Err(e) => {
            run.abort();
            return Err(e);
        }
    };
    run.finish(command, &stem, start)
}

fn run_command(command: &mut Command, run: &mut Run) -> Result<String> {
    let name = command.name().to_string();
    match command {
        Command::GenCorpus(a) => gen_corpus(a, run)?,
        Command::InjectNoise(a) => inject_noise(a, run)?,
        Command::Train(a) => train(a, run)?,
        Command::Decode(a) => decode(a, run)?,
        Command::Sample(a) => sample(a, run)?,
        Command::Score(a) => score(a, run)?,
        Command::Calibrate(a) => calibrate(a, run)?,
        Command::Analyze(a) => {
            analyze(a, run)?;
            let kind = serde_json::to_value(a.analysis)?;
            return Ok(format!("analyze-{}", kind.as_str().unwrap_or("analysis")));
        }
        Command::Experiment(a) => {
            let config = a
                .resolved
                .as_ref()
                .ok_or_else(|| anyhow!("internal: unresolved experiment"))?;
            let table = run_experiment(config)?;
            let path = write_table(run.out_dir(), config, &table)?;
            run.record(path);
            return Ok(format!("{}_{}", config.experiment.stem(), config.short_hash()));
        }
        Command::Report(_) => bail!("report cannot be nested"),
    }
    Ok(name)
}

fn report(args: ReportArgs, out: Option<PathBuf>) -> Result<()> {
    let path = args.manifest.ok_or_else(|| anyhow!("missing --manifest"))?;
    let text = fs::read_to_string(&path).with_context(|| format!("{}: cannot read manifest", path.display()))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("{}: malformed manifest", path.display()))?;
    verify_inputs(&manifest)?;
    let out = out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("regenerated"));
    let again = execute(manifest.command.clone(), manifest.seed, out.clone(), Instant::now())?;
    let mut checked = 0;
    for recorded in manifest.outputs.iter().filter(|d| !is_manifest(&d.path)) {
        let fresh = again
            .outputs
            .iter()
            .find(|d| d.path == recorded.path)
            .ok_or_else(|| anyhow!("{}: not regenerated", recorded.path.display()))?;
        if fresh.sha256 != recorded.sha256 {
            bail!(
                "{}: regenerated digest differs from the manifest",
                recorded.path.display()
            );
        }
        checked += 1;
    }
    println!(
        "{}",
        serde_json::json!({"status": "verified", "outputs": checked, "out": out})
    );
    Ok(())
}

fn is_manifest(path: &Path) -> bool {
    path.to_str().is_some_and(|p| p.ends_with(".manifest.json"))
}

// ---- helpers ----

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| anyhow!("missing --{flag}"))
}

fn load_model(run: &mut Run, path: &Option<PathBuf>) -> Result<MixtureModel> {
    let path = run.input(required(path, "model")?)?;
    MixtureModel::load(path).with_context(|| format!("{}: cannot load model", path.display()))
}

/// Sentences of `path` as ids of `vocab`; unknown tokens become UNK.
fn read_ids(run: &mut Run, path: &Path, vocab: &Vocabulary) -> Result<Vec<Vec<TokenId>>> {
    let path = run.input(path)?;
    Ok(read_tokenized(path)?
        .iter()
        .map(|s| s.iter().map(|t| vocab.lookup(t)).collect())
        .collect())
}

fn read_corpus(run: &mut Run, src: &Option<PathBuf>, tgt: &Option<PathBuf>) -> Result<ParallelCorpus> {
    let src = run.input(required(src, "src")?)?;
    let tgt = run.input(required(tgt, "tgt")?)?;
    Ok(read_parallel(src, tgt)?)
}

fn lines<I: IntoIterator<Item = String>>(items: I) -> Vec<u8> {
    let mut text = String::new();
    for line in items {
        text.push_str(&line);
        text.push('\n');
    }
    text.into_bytes()
}

fn write_corpus(run: &mut Run, corpus: &ParallelCorpus) -> Result<()> {
    run.write("source.txt", &lines((0..corpus.len()).map(|i| corpus.source_line(i))))?;
    run.write("target.txt", &lines((0..corpus.len()).map(|i| corpus.target_line(i))))?;
    Ok(())
}

fn check_aligned(what: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        bail!("{what}: {left} vs {right} lines");
    }
    Ok(())
}

fn write_table_file(run: &mut Run, name: &str, table: &Table) -> Result<()> {
    run.write(name, table.to_csv_string().as_bytes())?;
    Ok(())
}

// ---- subcommands ----

fn gen_corpus(a: &mut GenCorpusArgs, run: &mut Run) -> Result<()> {
    let spec = SyntheticTaskSpec::desk_scale(
        *a.source_vocab.get_or_insert(100),
        *a.target_vocab.get_or_insert(100),
        (*a.min_len.get_or_insert(4), *a.max_len.get_or_insert(12)),
        *a.size.get_or_insert(10_000),
        run.seed,
    );
    let corpus = generate_synthetic(&spec)?;
    write_corpus(run, &corpus)?;
    run.write("task.json", (serde_json::to_string_pretty(&spec)? + "\n").as_bytes())?;
    let n_refs = *a.references.get_or_insert(0);
    if n_refs > 0 {
        let sampler = TaskSampler::new(&spec.option_table());
        let mut rng = seeded(derive_seed(run.seed, REFERENCE_STREAM));
        let mut files = vec![Vec::with_capacity(corpus.len()); n_refs];
        for pair in corpus.pairs() {
            for file in files.iter_mut() {
                let t = sampler.translate(&pair.source, &mut rng);
                file.push(corpus.target_vocab().detokenize(&t));
            }
        }
        for (i, file) in files.into_iter().enumerate() {
            run.write(&format!("ref.{i}.txt"), &lines(file))?;
        }
    }
    Ok(())
}

fn inject_noise(a: &mut InjectNoiseArgs, run: &mut Run) -> Result<()> {
    let corpus = read_corpus(run, &a.src, &a.tgt)?;
    match *a.kind.get_or_insert(NoiseKind::Copy) {
        NoiseKind::Copy => {
            let noised = inject_copy_noise(&corpus, *a.p_noise.get_or_insert(0.1), run.seed)?;
            write_corpus(run, &noised.corpus)?;
            run.write(
                "noised_indices.txt",
                &lines(noised.replaced.iter().map(usize::to_string)),
            )?;
        }
        NoiseKind::Replace => {
            let spec = ReplacementSpec {
                word: required(&a.word, "word")?.clone(),
                w1: required(&a.w1, "w1")?.clone(),
                w2: required(&a.w2, "w2")?.clone(),
                rate: *a.rate.get_or_insert(0.5),
            };
            let replaced = inject_replacement(&corpus, &spec, run.seed)?;
            write_corpus(run, &replaced)?;
        }
    }
    Ok(())
}

fn train(a: &mut TrainArgs, run: &mut Run) -> Result<()> {
    let corpus = read_corpus(run, &a.src, &a.tgt)?;
    let defaults = MixtureParams::default();
    let params = MixtureParams {
        alpha: *a.alpha.get_or_insert(defaults.alpha),
        lambda: *a.lambda.get_or_insert(defaults.lambda),
    };
    let model = MixtureModel::train(&corpus, params)?;
    run.write("model.json", (model.to_json()? + "\n").as_bytes())?;
    Ok(())
}

fn decode(a: &mut DecodeArgs, run: &mut Run) -> Result<()> {
    let model = load_model(run, &a.model)?;
    let sources = read_ids(run, required(&a.src, "src")?, model.source_vocab())?;
    let mut config = BeamConfig::with_width(*a.beam.get_or_insert(5));
    config.length_normalization = *a.length_norm.get_or_insert(true);
    config.max_len = a.max_len;
    let threshold = *a.copy_threshold.get_or_insert(DEFAULT_COPY_THRESHOLD);
    if *a.no_copy.get_or_insert(false) {
        config = config.no_copy(threshold);
    }
    let results = decode_all(&model, &sources, &config)?;
    let mut buf = Vec::new();
    write_beam_tsv(&mut buf, &results, model.target_vocab())?;
    run.write("decode.tsv", &buf)?;
    Ok(())
}

fn sample(a: &mut SampleArgs, run: &mut Run) -> Result<()> {
    let model = load_model(run, &a.model)?;
    let sources = read_ids(run, required(&a.src, "src")?, model.source_vocab())?;
    let samples = sample_all(&model, &sources, *a.n.get_or_insert(10), run.seed, a.max_len)?;
    let mut buf = Vec::new();
    write_sample_tsv(&mut buf, &samples, model.target_vocab())?;
    run.write("samples.tsv", &buf)?;
    Ok(())
}

fn score(a: &mut ScoreArgs, run: &mut Run) -> Result<()> {
    let hyp = run.input(required(&a.hyp, "hyp")?)?;
    let hyps = read_tokenized(hyp)?;
    if a.refs.is_empty() {
        bail!("missing --refs");
    }
    for r in &a.refs {
        run.input(r)?;
    }
    let refs = read_references(&a.refs)?;
    check_aligned("hypotheses and references", hyps.len(), refs.len())?;
    let mut buf = Vec::new();
    let bleu = write_bleu_report(&mut buf, &hyps, &refs)?;
    run.write("bleu.csv", &buf)?;
    println!("{}", serde_json::to_string(&bleu)?);
    Ok(())
}

fn calibrate(a: &mut CalibrateArgs, run: &mut Run) -> Result<()> {
    let model = load_model(run, &a.model)?;
    let sources = read_ids(run, required(&a.src, "src")?, model.source_vocab())?;
    let refs = read_ids(run, required(&a.reference, "ref")?, model.target_vocab())?;
    check_aligned("sources and references", sources.len(), refs.len())?;
    let builder = match a.samples {
        Some(n) => SetBuilder::Samples {
            n,
            seed: run.seed,
            max_len: a.max_len,
        },
        None => {
            let mut config = BeamConfig::with_width(*a.beam.get_or_insert(5));
            config.max_len = a.max_len;
            SetBuilder::Beam(config)
        }
    };
    let n_bins = *a.bins.get_or_insert(10);
    let sets = build_sets(&model, &sources, &builder)?;
    let observations: Vec<_> = sources
        .iter()
        .zip(&refs)
        .map(|(s, r)| observe_set(&sets[s], r))
        .collect();
    let points = calibration_bins(&observations, n_bins)?;
    write_table_file(run, "calibration.csv", &calibration_table(&points))?;

    // Mean cumulative coverage over sentences; shorter curves hold their final value.
    let curves: Vec<Vec<(usize, f64)>> = sources.iter().map(|s| cumulative_coverage(&sets[s]).points).collect();
    let longest = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut table = Table::new(&["n", "mean_coverage"]);
    for n in 0..longest {
        let mean = curves
            .iter()
            .map(|c| c.get(n).or(c.last()).map_or(0.0, |p| p.1))
            .sum::<f64>()
            / curves.len() as f64;
        table.push(&[(n + 1).to_string(), mean.to_string()]);
    }
    write_table_file(run, "coverage.csv", &table)
}

fn analyze(a: &mut AnalyzeArgs, run: &mut Run) -> Result<()> {
    let model = load_model(run, &a.model)?;
    let seed = run.seed;
    match a.analysis {
        Analysis::RepeatedSources => {
            let corpus = read_corpus(run, &a.src, &a.tgt)?;
            let report = repeated_source_match(&corpus, &model, *a.min_occurrences.get_or_insert(2))?;
            let json = match report {
                RepeatedSourceReport::NoQualifyingSource => serde_json::json!({"status": "no_qualifying_source"}),
                RepeatedSourceReport::Found { sources } => {
                    let rows: Vec<Value> = sources
                        .iter()
                        .map(|m| {
                            let targets: Vec<Value> = m
                                .targets
                                .iter()
                                .map(|(t, emp, p)| {
                                    serde_json::json!({
                                        "target": corpus.target_vocab().detokenize(t),
                                        "empirical": emp,
                                        "model": p,
                                    })
                                })
                                .collect();
                            serde_json::json!({
                                "source": corpus.source_vocab().detokenize(&m.source),
                                "occurrences": m.occurrences,
                                "total_variation": m.total_variation,
                                "targets": targets,
                            })
                        })
                        .collect();
                    serde_json::json!({"status": "found", "sources": rows})
                }
            };
            run.write(
                "repeated_sources.json",
                (serde_json::to_string_pretty(&json)? + "\n").as_bytes(),
            )?;
            return Ok(());
        }
        Analysis::InterBleu => {
            let sources = read_ids(run, required(&a.src, "src")?, model.source_vocab())?;
            let n_pairs = *a.n.get_or_insert(100);
            let model_est: Vec<Estimate> = sources
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    model_inter_bleu_sampled(
                        &model,
                        s,
                        n_pairs,
                        derive_seed(seed, i as u64),
                        default_max_len(s.len()),
                    )
                })
                .collect::<beamcal::Result<_>>()?;
            let human_est: Option<Vec<Estimate>> = if a.refs.len() >= 2 {
                for r in &a.refs {
                    run.input(r)?;
                }
                let refs = read_references(&a.refs)?;
                check_aligned("sources and references", sources.len(), refs.len())?;
                let est = refs
                    .iter()
                    .map(|rs| {
                        let pairs: Vec<(Vec<String>, Vec<String>)> = (0..rs.len())
                            .flat_map(|i| (0..rs.len()).filter(move |&j| j != i).map(move |j| (i, j)))
                            .map(|(i, j)| (rs[i].clone(), rs[j].clone()))
                            .collect();
                        expected_inter_bleu_pairs(&pairs)
                    })
                    .collect::<beamcal::Result<_>>()?;
                Some(est)
            } else if a.refs.len() == 1 {
                bail!("human inter-BLEU needs at least two --refs files");
            } else {
                None
            };
            let mut table = Table::new(&[
                "sentence",
                "model_mean",
                "model_std_error",
                "human_mean",
                "human_std_error",
            ]);
            let cells = |e: Option<&Estimate>| match e {
                Some(e) => [e.mean.to_string(), e.std_error.to_string()],
                None => [String::new(), String::new()],
            };
            for (i, m) in model_est.iter().enumerate() {
                let [mm, ms] = cells(Some(m));
                let [hm, hs] = cells(human_est.as_ref().map(|h| &h[i]));
                table.push(&[i.to_string(), mm, ms, hm, hs]);
            }
            let [mm, ms] = cells(Some(&Estimate::average(&model_est)));
            let human_all = human_est.as_ref().map(|h| Estimate::average(h));
            let [hm, hs] = cells(human_all.as_ref());
            table.push(&["all".to_string(), mm, ms, hm, hs]);
            return write_table_file(run, "inter_bleu.csv", &table);
        }
        _ => {}
    }

    let sources = read_ids(run, required(&a.src, "src")?, model.source_vocab())?;
    let references = match &a.reference {
        Some(path) => {
            let refs = read_ids(run, path, model.target_vocab())?;
            check_aligned("sources and references", sources.len(), refs.len())?;
            Some(refs)
        }
        None => None,
    };
    let need_refs = || references.clone().ok_or_else(|| anyhow!("missing --ref"));
    let beam_top1 = |width: usize| -> Result<Vec<Vec<TokenId>>> {
        Ok(decode_all(&model, &sources, &BeamConfig::with_width(width))?
            .iter()
            .map(|r| r.best().map(|h| h.tokens.clone()).unwrap_or_default())
            .collect())
    };

    match a.analysis {
        Analysis::TokenQuantiles | Analysis::Positions => {
            let mut series = vec![
                ("beam", beam_top1(*a.beam.get_or_insert(5))?),
                ("copy", copy_targets(&model, &sources)),
            ];
            if let Some(refs) = &references {
                series.insert(0, ("reference", refs.clone()));
            }
            if a.analysis == Analysis::TokenQuantiles {
                if a.quantiles.is_empty() {
                    a.quantiles = DEFAULT_QUANTILES.to_vec();
                }
                let mut table = Table::new(&["series", "quantile", "prob"]);
                for (name, outputs) in &series {
                    let values = token_prob_quantiles(&model, &sources, outputs, &a.quantiles)?;
                    for (q, v) in a.quantiles.iter().zip(values) {
                        table.push(&[name.to_string(), q.to_string(), v.to_string()]);
                    }
                }
                write_table_file(run, "token_quantiles.csv", &table)
            } else {
                let mut table = Table::new(&["series", "position", "mean_prob", "count"]);
                for (name, outputs) in &series {
                    for p in per_position_avg_prob(&model, &sources, outputs)? {
                        table.push(&[
                            name.to_string(),
                            p.position.to_string(),
                            p.mean_prob.to_string(),
                            p.count.to_string(),
                        ]);
                    }
                }
                write_table_file(run, "positions.csv", &table)
            }
        }
        Analysis::Frequency => {
            let training = read_ids(run, required(&a.tgt, "tgt")?, model.target_vocab())?;
            let refs = need_refs()?;
            let beam = beam_top1(*a.beam.get_or_insert(5))?;
            let samples: Vec<Vec<TokenId>> = sample_all(&model, &sources, *a.n.get_or_insert(1), seed, None)?
                .into_iter()
                .flatten()
                .map(|h| h.tokens)
                .collect();
            // UNK has no training-frequency bin.
            let known = |v: Vec<Vec<TokenId>>| -> Vec<Vec<TokenId>> {
                v.into_iter()
                    .map(|s| s.into_iter().filter(|&t| t != UNK).collect())
                    .collect()
            };
            let report = unigram_freq_bins(
                &training,
                model.target_vocab(),
                &known(refs),
                &known(beam),
                &known(samples),
                *a.bins.get_or_insert(10),
            )?;
            let mut buf = Vec::new();
            write_frequency_csv(&mut buf, &report)?;
            run.write("frequency.csv", &buf)?;
            Ok(())
        }
        Analysis::Scatter => {
            let refs = need_refs()?;
            let n = *a.n.get_or_insert(100);
            let mut table = Table::new(&["sentence", "log_prob", "bleu", "is_copy"]);
            for (i, (s, r)) in sources.iter().zip(&refs).enumerate() {
                for p in logprob_bleu_scatter(&model, s, r, n, derive_seed(seed, i as u64))? {
                    table.push(&[
                        i.to_string(),
                        p.log_prob.to_string(),
                        p.bleu.to_string(),
                        p.is_copy.to_string(),
                    ]);
                }
            }
            write_table_file(run, "scatter.csv", &table)
        }
        Analysis::Selection => {
            let refs = need_refs()?;
            let points = selection_curves(&model, &sources, &refs, *a.n.get_or_insert(100), seed)?;
            let mut table = Table::new(&[
                "n",
                "best_logprob_prob",
                "best_logprob_bleu",
                "best_bleu_bleu",
                "best_bleu_prob",
            ]);
            for p in points {
                table.push(&[
                    p.n.to_string(),
                    p.best_logprob_prob.to_string(),
                    p.best_logprob_bleu.to_string(),
                    p.best_bleu_bleu.to_string(),
                    p.best_bleu_prob.to_string(),
                ]);
            }
            write_table_file(run, "selection.csv", &table)
        }
        Analysis::RepeatedSources | Analysis::InterBleu => unreachable!("handled above"),
    }
}
