//! Desk-scale drivers for the copy-noise, mitigation, copy-rate, replacement
//! and multi-reference oracle experiments. Each driver is a pure function of
//! its [`ExperimentConfig`] and returns one [`Table`].

mod config;
mod drivers;

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind, TaskConfig};
pub use drivers::{
    beam_copy_rate, copy_noise_sweep, copy_rate_control, mitigation_comparison, oracle_study, replacement_experiment,
};

use crate::table::Table;
use crate::{Error, Result};

const HASH_PREFIX: &str = "# config_hash=";

pub fn run_experiment(config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::CopyNoiseSweep => copy_noise_sweep(config),
        ExperimentKind::BeamCopyRate => beam_copy_rate(config),
        ExperimentKind::MitigationComparison => mitigation_comparison(config),
        ExperimentKind::CopyRateControl => copy_rate_control(config),
        ExperimentKind::ReplacementExperiment => replacement_experiment(config),
        ExperimentKind::OracleStudy => oracle_study(config),
    }
}

/// Reads the config hash recorded on the first line of a table file.
pub fn stored_hash(path: &Path) -> Result<Option<String>> {
    let file = fs::File::open(path)?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    Ok(first.trim_end().strip_prefix(HASH_PREFIX).map(str::to_owned))
}

/// Writes `table` to `dir/<experiment>_<hash>.csv`, headed by the full
/// config hash. An existing file that records a different hash is never
/// overwritten. The write goes through a temporary file and a rename.
pub fn write_table(dir: &Path, config: &ExperimentConfig, table: &Table) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(config.file_name());
    let hash = config.hash();
    if path.exists() {
        let stored = stored_hash(&path)?.unwrap_or_default();
        if stored != hash {
            return Err(Error::ProvenanceMismatch {
                path,
                stored,
                current: hash,
            });
        }
    }
    let tmp = dir.join(format!(".{}.tmp", config.file_name()));
    {
        let mut file = fs::File::create(&tmp)?;
        writeln!(file, "{HASH_PREFIX}{hash}")?;
        table.write_csv(&mut file)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Parses a table written by [`write_table`], returning the stored hash.
pub fn read_table(path: &Path) -> Result<(Option<String>, Table)> {
    let text = fs::read_to_string(path)?;
    let (hash, body) = match text.strip_prefix(HASH_PREFIX) {
        Some(rest) => {
            let (h, body) = rest.split_once('\n').unwrap_or((rest, ""));
            (Some(h.to_string()), body)
        }
        None => (None, text.as_str()),
    };
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let parse = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let columns: Vec<String> = reader.headers().map_err(parse)?.iter().map(str::to_owned).collect();
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    for record in reader.records() {
        table
            .rows
            .push(record.map_err(parse)?.iter().map(str::to_owned).collect());
    }
    Ok((hash, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_guard() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::CopyNoiseSweep, 1);
        let mut t = Table::new(&["a"]);
        t.push(&["1"]);
        let path = write_table(dir.path(), &cfg, &t).unwrap();
        assert_eq!(stored_hash(&path).unwrap(), Some(cfg.hash()));
        // Same config: rewriting is allowed.
        write_table(dir.path(), &cfg, &t).unwrap();
        let (hash, back) = read_table(&path).unwrap();
        assert_eq!(hash, Some(cfg.hash()));
        assert_eq!(back, t);
        // A tampered hash line blocks the overwrite.
        let text = fs::read_to_string(&path).unwrap().replace(&cfg.hash(), "deadbeef");
        fs::write(&path, text).unwrap();
        match write_table(dir.path(), &cfg, &t) {
            Err(Error::ProvenanceMismatch { stored, .. }) => assert_eq!(stored, "deadbeef"),
            other => panic!("{other:?}"),
        }
    }
}
