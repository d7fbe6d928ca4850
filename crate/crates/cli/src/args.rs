//! Command-line surface. Every subcommand's options can also come from the
//! JSON object given with `--config`; keys are the option names with
//! underscores, and flags win over the file.

use std::path::PathBuf;

use beamcal::experiments::ExperimentConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "beamcal",
    version,
    about = "Beam search, sampling and calibration analyses for sequence models"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (speed only; outputs do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with option values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "options", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic parallel corpus (and optional extra references).
    GenCorpus(GenCorpusArgs),
    /// Add copy noise or word replacement noise to a corpus.
    InjectNoise(InjectNoiseArgs),
    /// Train a mixture model.
    Train(TrainArgs),
    /// Beam search (or greedy with --beam 1).
    Decode(DecodeArgs),
    /// Ancestral sampling.
    Sample(SampleArgs),
    /// Corpus and sentence BLEU against one or more references.
    Score(ScoreArgs),
    /// Set-level calibration and coverage.
    Calibrate(CalibrateArgs),
    /// Distribution-matching analyses.
    Analyze(AnalyzeArgs),
    /// Run one experiment driver.
    Experiment(ExperimentArgs),
    /// Regenerate and verify the outputs recorded in a manifest.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenCorpus(_) => "gen-corpus",
            Command::InjectNoise(_) => "inject-noise",
            Command::Train(_) => "train",
            Command::Decode(_) => "decode",
            Command::Sample(_) => "sample",
            Command::Score(_) => "score",
            Command::Calibrate(_) => "calibrate",
            Command::Analyze(_) => "analyze",
            Command::Experiment(_) => "experiment",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub source_vocab: Option<usize>,
    #[arg(long)]
    pub target_vocab: Option<usize>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Number of sentence pairs.
    #[arg(long)]
    pub size: Option<usize>,
    /// Extra references per source, drawn from the task, written as ref.N.txt.
    #[arg(long)]
    pub references: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Copy,
    Replace,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectNoiseArgs {
    #[arg(long)]
    pub src: Option<PathBuf>,
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<NoiseKind>,
    /// Copy-noise probability.
    #[arg(long)]
    pub p_noise: Option<f64>,
    /// Target word to rewrite (replace noise).
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long)]
    pub w1: Option<String>,
    #[arg(long)]
    pub w2: Option<String>,
    /// Probability of rewriting to w1.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub src: Option<PathBuf>,
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub src: Option<PathBuf>,
    #[arg(long)]
    pub beam: Option<usize>,
    /// Rank by log-probability per token (on by default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub length_norm: Option<bool>,
    /// Prune finished hypotheses that copy the source.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_copy: Option<bool>,
    #[arg(long)]
    pub copy_threshold: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Samples per source.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreArgs {
    #[arg(long)]
    pub hyp: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    #[serde(default)]
    pub refs: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub src: Option<PathBuf>,
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: Option<PathBuf>,
    /// Beam width of the hypothesis sets (ignored when --samples is given).
    #[arg(long)]
    pub beam: Option<usize>,
    /// Build each set from this many samples instead of a beam.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Quantiles of per-token probabilities for each output series.
    TokenQuantiles,
    /// Mean token probability per position for each output series.
    Positions,
    /// Output mass per training-frequency bin.
    Frequency,
    /// Empirical vs. model distributions of repeated sources.
    RepeatedSources,
    /// Log-probability against sentence BLEU for samples.
    Scatter,
    /// Best-by-score and best-by-BLEU among growing sample sets.
    Selection,
    /// Expected BLEU between independent translations.
    InterBleu,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub analysis: Analysis,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Target side of a corpus (repeated-sources) or training targets (frequency).
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: Option<PathBuf>,
    /// Extra reference files for human inter-BLEU.
    #[arg(long, num_args = 1..)]
    #[serde(default)]
    pub refs: Vec<PathBuf>,
    #[arg(long)]
    pub beam: Option<usize>,
    /// Samples (or sample pairs) per source.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub min_occurrences: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub quantiles: Vec<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentArgs {
    /// copy-noise-sweep, beam-copy-rate, mitigation-comparison,
    /// copy-rate-control, replacement-experiment or oracle-study.
    pub experiment: String,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub noise_levels: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub beam_widths: Vec<usize>,
    #[arg(long)]
    pub samples_per_source: Option<usize>,
    /// The full configuration after merging defaults, file and flags.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<ExperimentConfig>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
