#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn beamcal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamcal"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

/// Runs the command and panics with its stderr unless it succeeds.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = beamcal(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Every subcommand once, each into its own directory under `dir`.
pub fn pipeline(dir: &Path, seed: &str) {
    let s = ["--seed", seed];
    let run = |args: &[&str]| {
        let mut all = args.to_vec();
        all.extend_from_slice(&s);
        ok(dir, &all);
    };
    run(&[
        "gen-corpus",
        "--size",
        "600",
        "--source-vocab",
        "30",
        "--target-vocab",
        "30",
        "--references",
        "2",
        "--out",
        "corpus",
    ]);
    run(&[
        "inject-noise",
        "--src",
        "corpus/source.txt",
        "--tgt",
        "corpus/target.txt",
        "--p-noise",
        "0.2",
        "--out",
        "noised",
    ]);
    run(&[
        "inject-noise",
        "--kind",
        "replace",
        "--src",
        "corpus/source.txt",
        "--tgt",
        "corpus/target.txt",
        "--word",
        "t0",
        "--w1",
        "t0_a",
        "--w2",
        "t0_b",
        "--out",
        "replaced",
    ]);
    run(&[
        "train",
        "--src",
        "noised/source.txt",
        "--tgt",
        "noised/target.txt",
        "--out",
        "model",
    ]);
    fs::write(dir.join("src.txt"), head(&dir.join("corpus/source.txt"), 20)).unwrap();
    fs::write(dir.join("ref.txt"), head(&dir.join("corpus/target.txt"), 20)).unwrap();
    fs::write(dir.join("ref0.txt"), head(&dir.join("corpus/ref.0.txt"), 20)).unwrap();
    fs::write(dir.join("ref1.txt"), head(&dir.join("corpus/ref.1.txt"), 20)).unwrap();
    run(&with_model(&["decode", "--beam", "5", "--out", "decode"]));
    run(&with_model(&[
        "decode",
        "--beam",
        "5",
        "--no-copy",
        "--out",
        "decode_no_copy",
    ]));
    run(&with_model(&["sample", "--n", "5", "--out", "sample"]));
    run(&[
        "score", "--hyp", "ref0.txt", "--refs", "ref.txt", "ref1.txt", "--out", "score",
    ]);
    run(&with_model(&[
        "calibrate",
        "--ref",
        "ref.txt",
        "--bins",
        "4",
        "--out",
        "calibrate",
    ]));
    run(&with_model(&[
        "calibrate",
        "--ref",
        "ref.txt",
        "--samples",
        "20",
        "--bins",
        "4",
        "--out",
        "calibrate_samples",
    ]));
    for kind in ["token-quantiles", "positions", "scatter", "selection"] {
        run(&[
            "analyze",
            kind,
            "--model",
            "model/model.json",
            "--src",
            "src.txt",
            "--ref",
            "ref.txt",
            "--n",
            "10",
            "--out",
            "analyze",
        ]);
    }
    run(&with_model(&[
        "analyze",
        "frequency",
        "--ref",
        "ref.txt",
        "--tgt",
        "noised/target.txt",
        "--out",
        "analyze",
    ]));
    run(&[
        "analyze",
        "repeated-sources",
        "--model",
        "model/model.json",
        "--src",
        "noised/source.txt",
        "--tgt",
        "noised/target.txt",
        "--out",
        "analyze",
    ]);
    run(&with_model(&[
        "analyze",
        "inter-bleu",
        "--refs",
        "ref.txt",
        "ref0.txt",
        "ref1.txt",
        "--n",
        "10",
        "--out",
        "analyze",
    ]));
    run(&[
        "experiment",
        "copy-noise-sweep",
        "--train-size",
        "600",
        "--test-size",
        "20",
        "--noise-levels",
        "0,0.2",
        "--beam-widths",
        "1,5",
        "--out",
        "experiment",
    ]);
    run(&["report", "--manifest", "decode/decode.manifest.json"]);
}

/// Subcommand (and analysis kind) first, then the model and sources.
fn with_model<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let split = if args[0] == "analyze" { 2 } else { 1 };
    let mut v = args[..split].to_vec();
    v.extend_from_slice(&["--model", "model/model.json", "--src", "src.txt"]);
    v.extend_from_slice(&args[split..]);
    v
}

pub fn head(path: &Path, n: usize) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .take(n)
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Relative path to contents for every file below `root`. Manifests lose
/// their wall-clock field.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let mut bytes = fs::read(&path).unwrap();
            if path.to_string_lossy().ends_with(".manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("duration_secs");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            files.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
        }
    }
    files
}
