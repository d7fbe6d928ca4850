//! Output bookkeeping: atomic writes, input digests, run manifests and
//! cleanup of partial outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to replay an invocation and check its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub command: Command,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    /// Output paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub version: String,
    pub duration_secs: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).with_context(|| format!("{}: cannot create", tmp.display()))?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path).with_context(|| format!("{}: cannot write", path.display()))?;
    Ok(())
}

/// One invocation's state. On failure [`Run::abort`] removes whatever it wrote.
pub struct Run {
    pub seed: u64,
    out: PathBuf,
    created_out: bool,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(out: PathBuf, seed: u64) -> Result<Self> {
        let created_out = !out.exists();
        fs::create_dir_all(&out).with_context(|| format!("{}: cannot create directory", out.display()))?;
        Ok(Run {
            seed,
            out,
            created_out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Records the digest of an input file and hands the path back.
    pub fn input<'a>(&mut self, path: &'a Path) -> Result<&'a Path> {
        if !path.is_file() {
            bail!("{}: no such file", path.display());
        }
        let sha256 = sha256_file(path)?;
        if !self.inputs.iter().any(|d| d.path == path) {
            self.inputs.push(FileDigest {
                path: path.to_path_buf(),
                sha256,
            });
        }
        Ok(path)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        // Registered first so a failed rename still gets its temp file cleaned.
        self.outputs.push(path.clone());
        write_atomic(&path, bytes)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Registers a file written by someone else into the output directory.
    pub fn record(&mut self, path: PathBuf) {
        log::info!("wrote {}", path.display());
        self.outputs.push(path);
    }

    pub fn abort(self) {
        for path in &self.outputs {
            let _ = fs::remove_file(path);
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                let _ = fs::remove_file(path.with_file_name(format!(".{name}.tmp")));
            }
        }
        if self.created_out {
            // Only succeeds when nothing else lives there.
            let _ = fs::remove_dir(&self.out);
        }
    }

    /// Writes `<stem>.manifest.json` after re-reading every output's digest.
    pub fn finish(mut self, command: Command, stem: &str, start: Instant) -> Result<RunManifest> {
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for path in &self.outputs {
            let rel = path.strip_prefix(&self.out).unwrap_or(path).to_path_buf();
            outputs.push(FileDigest {
                path: rel,
                sha256: sha256_file(path)?,
            });
        }
        let manifest = RunManifest {
            command,
            seed: self.seed,
            inputs: std::mem::take(&mut self.inputs),
            outputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: start.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        let name = format!("{stem}.manifest.json");
        match self.write(&name, json.as_bytes()) {
            Ok(_) => Ok(manifest),
            Err(e) => {
                self.abort();
                Err(e)
            }
        }
    }
}

/// Checks recorded input digests against the files on disk.
pub fn verify_inputs(manifest: &RunManifest) -> Result<()> {
    for d in &manifest.inputs {
        let actual = sha256_file(&d.path)?;
        if actual != d.sha256 {
            bail!(
                "{}: digest {actual} differs from recorded {}",
                d.path.display(),
                d.sha256
            );
        }
    }
    Ok(())
}

/// The single diagnostic line emitted on failure.
pub fn report_error(command: &str, message: &str) {
    let line = serde_json::json!({
        "status": "error",
        "command": command,
        "message": message.replace('\n', " "),
    });
    eprintln!("{line}");
}
