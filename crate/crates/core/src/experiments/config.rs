use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SyntheticTaskSpec;
use crate::model::MixtureParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CopyNoiseSweep,
    BeamCopyRate,
    MitigationComparison,
    CopyRateControl,
    ReplacementExperiment,
    OracleStudy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::CopyNoiseSweep,
        ExperimentKind::BeamCopyRate,
        ExperimentKind::MitigationComparison,
        ExperimentKind::CopyRateControl,
        ExperimentKind::ReplacementExperiment,
        ExperimentKind::OracleStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CopyNoiseSweep => "copy-noise-sweep",
            ExperimentKind::BeamCopyRate => "beam-copy-rate",
            ExperimentKind::MitigationComparison => "mitigation-comparison",
            ExperimentKind::CopyRateControl => "copy-rate-control",
            ExperimentKind::ReplacementExperiment => "replacement-experiment",
            ExperimentKind::OracleStudy => "oracle-study",
        }
    }

    /// File-name stem: the name with underscores.
    pub fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.stem() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

/// The synthetic task every experiment trains and evaluates on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub length_range: (usize, usize),
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            source_vocab_size: 100,
            target_vocab_size: 100,
            length_range: (4, 12),
            train_size: 10_000,
            test_size: 500,
        }
    }
}

impl TaskConfig {
    /// Task options are drawn from `seed`; the training corpus uses the same seed.
    pub fn spec(&self, seed: u64) -> SyntheticTaskSpec {
        SyntheticTaskSpec::desk_scale(
            self.source_vocab_size,
            self.target_vocab_size,
            self.length_range,
            self.train_size,
            seed,
        )
    }
}

/// Everything an experiment depends on. Identical configs produce
/// byte-identical tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub task: TaskConfig,
    pub model: MixtureParams,
    pub noise_levels: Vec<f64>,
    pub beam_widths: Vec<usize>,
    pub replacement_rates: Vec<f64>,
    /// Samples drawn per source by the sampling-based measurements.
    pub samples_per_source: usize,
    /// References drawn per source in the oracle study.
    pub references: usize,
    /// Number of target words rewritten in the replacement experiment.
    pub replacement_words: usize,
    /// Share of the training corpus kept free of noise for the clean variant.
    pub clean_fraction: f64,
    /// Share of pairs removed by score filtering.
    pub drop_fraction: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            task: TaskConfig::default(),
            model: MixtureParams::default(),
            noise_levels: vec![0.0, 0.01, 0.05, 0.1, 0.2, 0.5],
            beam_widths: vec![1, 2, 5, 10, 20],
            replacement_rates: vec![0.0],
            samples_per_source: 10,
            references: 10,
            replacement_words: 5,
            clean_fraction: 0.2,
            drop_fraction: 0.1,
            seed,
        };
        match kind {
            ExperimentKind::CopyNoiseSweep => base,
            ExperimentKind::BeamCopyRate => ExperimentConfig {
                noise_levels: vec![0.0, 0.02],
                ..base
            },
            ExperimentKind::MitigationComparison => ExperimentConfig {
                noise_levels: vec![0.1],
                ..base
            },
            ExperimentKind::CopyRateControl => ExperimentConfig {
                beam_widths: vec![1],
                ..base
            },
            ExperimentKind::ReplacementExperiment => ExperimentConfig {
                noise_levels: vec![0.0],
                beam_widths: vec![5],
                replacement_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
                ..base
            },
            ExperimentKind::OracleStudy => ExperimentConfig {
                task: TaskConfig {
                    test_size: 100,
                    ..TaskConfig::default()
                },
                noise_levels: vec![0.0],
                beam_widths: vec![5, 200],
                samples_per_source: 200,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        self.model.validate()?;
        if self.noise_levels.is_empty() || self.beam_widths.is_empty() || self.replacement_rates.is_empty() {
            return bad("sweep lists must be non-empty");
        }
        if self.noise_levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("noise levels must lie in [0, 1]");
        }
        if self.replacement_rates.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("replacement rates must lie in [0, 1]");
        }
        if self.beam_widths.contains(&0) {
            return bad("beam widths must be at least 1");
        }
        if self.samples_per_source == 0 || self.references == 0 || self.replacement_words == 0 {
            return bad("sample, reference and word counts must be at least 1");
        }
        if !(0.0..1.0).contains(&self.clean_fraction) || !(0.0..1.0).contains(&self.drop_fraction) {
            return bad("clean and drop fractions must lie in [0, 1)");
        }
        if self.task.train_size == 0 || self.task.test_size == 0 {
            return bad("train and test sizes must be positive");
        }
        self.task.spec(self.seed).validate()
    }

    /// SHA-256 of the canonical JSON encoding, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// The first 12 hex digits of [`ExperimentConfig::hash`], used in file names.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.experiment.stem(), self.short_hash())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::new(kind, 3);
            cfg.validate().unwrap();
            let json = serde_json::to_string(&cfg).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = ExperimentConfig::new(ExperimentKind::CopyNoiseSweep, 1);
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.model.lambda = 0.8;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.file_name(), format!("copy_noise_sweep_{}.csv", &a.hash()[..12]));
    }

    #[test]
    fn rejects_invalid_sweeps() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::CopyNoiseSweep, 1);
        cfg.noise_levels.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::CopyNoiseSweep, 1);
        cfg.beam_widths = vec![0];
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment":"oracle-study","bogus":1}"#).is_err());
    }
}
