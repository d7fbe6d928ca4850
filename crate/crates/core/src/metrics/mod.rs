//! BLEU variants, copy rates, expected inter-sentence BLEU, multi-reference
//! oracle metrics and unigram frequency analysis.

mod bleu;
mod freq;
mod inter;
mod oracle;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use bleu::{corpus_bleu, sentence_bleu, sentence_bleu_smoothed, BleuScore, MAX_ORDER};
pub use freq::{frequency_bins, unigram_freq_bins, FrequencyBin, FrequencyBinReport};
pub use inter::{
    expected_inter_bleu_explicit, expected_inter_bleu_pairs, model_inter_bleu_explicit, model_inter_bleu_sampled,
    Estimate,
};
pub use oracle::{best_reference, corpus_oracle_metrics, oracle_metrics, CorpusOracleReport, OracleReport};

use crate::corpus::CopyDetector;
use crate::{Error, Result};

/// Fractions of outputs that copy their source verbatim (`exact`) or reach
/// the IoU threshold without being verbatim (`partial`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CopyRates {
    pub exact: f64,
    pub partial: f64,
    pub total: f64,
}

pub fn copy_rate<S: AsRef<str>, T: AsRef<str>>(
    outputs: &[Vec<S>],
    sources: &[Vec<T>],
    threshold: f64,
) -> Result<CopyRates> {
    if outputs.len() != sources.len() {
        return Err(Error::LengthMismatch {
            what: "outputs and sources",
            left: outputs.len(),
            right: sources.len(),
        });
    }
    if outputs.is_empty() {
        return Ok(CopyRates::default());
    }
    let (mut exact, mut partial) = (0usize, 0usize);
    for (out, src) in outputs.iter().zip(sources) {
        let verbatim = out.len() == src.len() && out.iter().zip(src).all(|(a, b)| a.as_ref() == b.as_ref());
        if verbatim {
            exact += 1;
        } else if CopyDetector::new(src).is_copy(out, threshold) {
            partial += 1;
        }
    }
    let n = outputs.len() as f64;
    Ok(CopyRates {
        exact: exact as f64 / n,
        partial: partial as f64 / n,
        total: (exact + partial) as f64 / n,
    })
}

/// CSV with one `sentence` row per hypothesis (smoothed sentence BLEU) and a
/// final `corpus` row (corpus BLEU).
pub fn write_bleu_report<W: Write>(
    out: W,
    hypotheses: &[Vec<String>],
    references: &[Vec<Vec<String>>],
) -> Result<BleuScore> {
    let corpus = corpus_bleu(hypotheses, references)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "index", "bleu", "hyp_len", "ref_len"])
        .map_err(csv_error)?;
    for (i, (h, r)) in hypotheses.iter().zip(references).enumerate() {
        let s = sentence_bleu_smoothed(h, r);
        w.write_record([
            "sentence".to_string(),
            i.to_string(),
            s.score.to_string(),
            s.hyp_len.to_string(),
            s.ref_len.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.write_record([
        "corpus".to_string(),
        String::new(),
        corpus.score.to_string(),
        corpus.hyp_len.to_string(),
        corpus.ref_len.to_string(),
    ])
    .map_err(csv_error)?;
    w.flush()?;
    Ok(corpus)
}

pub fn write_frequency_csv<W: Write>(out: W, report: &FrequencyBinReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_percentile", "reference_mass", "beam_mass", "sample_mass"])
        .map_err(csv_error)?;
    for b in &report.bins {
        w.write_record([
            format!("{}-{}", b.lower_percentile, b.upper_percentile),
            b.reference_mass.to_string(),
            b.beam_mass.to_string(),
            b.sample_mass.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn copy_rate_counts() {
        let sources: Vec<Vec<&str>> = (0..10)
            .map(|i| vec!["a", "b", "c", ["d", "e", "f", "g", "h", "i", "j", "k", "l", "m"][i]])
            .collect();
        let mut outputs: Vec<Vec<&str>> = (0..10).map(|_| toks("x y z")).collect();
        outputs[0] = sources[0].clone();
        outputs[1] = sources[1].clone();
        // {a, b, c} vs {a, b, c, f, ...}: shares 3 of a 5-type union = 0.6.
        outputs[2] = toks("a b c q");
        let r = copy_rate(&outputs, &sources, 0.5).unwrap();
        assert_eq!(r.exact, 0.2);
        assert_eq!(r.partial, 0.1);
        assert!((r.total - 0.3).abs() < 1e-12);
    }

    #[test]
    fn copy_rate_extremes() {
        let sources = vec![toks("a b"), toks("c d")];
        assert_eq!(copy_rate(&sources, &sources, 0.5).unwrap().exact, 1.0);
        let other = vec![toks("x"), toks("y")];
        assert_eq!(copy_rate(&other, &sources, 0.5).unwrap().total, 0.0);
    }

    #[test]
    fn bleu_report_rows() {
        let h = vec![["a", "b", "c", "d"].map(String::from).to_vec()];
        let r = vec![vec![h[0].clone()]];
        let mut buf = Vec::new();
        let s = write_bleu_report(&mut buf, &h, &r).unwrap();
        assert_eq!(s.score, 100.0);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().starts_with("corpus,,100,"));
    }
}
