//! Plain-text corpus files: one whitespace-tokenized sentence per line.

use std::fs;
use std::path::{Path, PathBuf};

use super::ParallelCorpus;
use crate::{Error, Result};

pub const SOURCE_FILE: &str = "source.txt";
pub const TARGET_FILE: &str = "target.txt";

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads a file of sentences as token lists; empty lines are rejected with their line number.
pub fn read_tokenized(path: &Path) -> Result<Vec<Vec<String>>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            if tokens.is_empty() {
                Err(Error::Parse {
                    path: path.to_path_buf(),
                    message: Error::EmptyLine { line: i + 1 }.to_string(),
                })
            } else {
                Ok(tokens)
            }
        })
        .collect()
}

pub fn read_parallel(source: &Path, target: &Path) -> Result<ParallelCorpus> {
    let sources = read_lines(source)?;
    let targets = read_lines(target)?;
    ParallelCorpus::from_lines(&sources, &targets).map_err(|e| Error::Parse {
        path: source.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `source.txt` and `target.txt` into `dir`, returning both paths.
pub fn write_parallel(corpus: &ParallelCorpus, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let source = dir.join(SOURCE_FILE);
    let target = dir.join(TARGET_FILE);
    let mut src = String::new();
    let mut tgt = String::new();
    for i in 0..corpus.len() {
        src.push_str(&corpus.source_line(i));
        src.push('\n');
        tgt.push_str(&corpus.target_line(i));
        tgt.push('\n');
    }
    fs::write(&source, src)?;
    fs::write(&target, tgt)?;
    Ok((source, target))
}

/// Reads aligned reference files `ref.0.txt … ref.(N-1).txt`; the result holds,
/// per sentence, its N references.
pub fn read_references(paths: &[PathBuf]) -> Result<Vec<Vec<Vec<String>>>> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("at least one reference file is required".into()));
    }
    let files: Vec<Vec<Vec<String>>> = paths.iter().map(|p| read_tokenized(p)).collect::<Result<_>>()?;
    let n = files[0].len();
    if let Some((path, file)) = paths.iter().zip(&files).find(|(_, f)| f.len() != n) {
        return Err(Error::Parse {
            path: path.clone(),
            message: format!("{} lines, expected {n}", file.len()),
        });
    }
    Ok((0..n).map(|i| files.iter().map(|f| f[i].clone()).collect()).collect())
}

/// `dir/ref.0.txt … dir/ref.(n-1).txt`.
pub fn reference_paths(dir: &Path, n: usize) -> Vec<PathBuf> {
    (0..n).map(|i| dir.join(format!("ref.{i}.txt"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = ParallelCorpus::from_lines(&["a b", "c"], &["x", "y z"]).unwrap();
        let (s, t) = write_parallel(&corpus, dir.path()).unwrap();
        let back = read_parallel(&s, &t).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn references_must_align() {
        let dir = tempfile::tempdir().unwrap();
        let paths = reference_paths(dir.path(), 2);
        fs::write(&paths[0], "a b\nc\n").unwrap();
        fs::write(&paths[1], "a\n").unwrap();
        assert!(read_references(&paths).is_err());
        fs::write(&paths[1], "a\nd e\n").unwrap();
        let refs = read_references(&paths).unwrap();
        assert_eq!(refs.len(), 2);
        assert_eq!(refs[1][1], vec!["d", "e"]);
    }

    #[test]
    fn empty_line_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.txt");
        fs::write(&path, "a\n\nb\n").unwrap();
        let err = read_tokenized(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
