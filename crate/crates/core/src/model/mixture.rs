use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConditionalSequenceModel;
use crate::corpus::{ParallelCorpus, TokenId, Vocabulary, BOS, EOS, UNK};
use crate::{Error, Result};

/// Length-model offsets beyond this magnitude share a bucket.
const MAX_LENGTH_OFFSET: i64 = 8;

const FORMAT: &str = "mixture-v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Additive smoothing for every count table.
    pub alpha: f64,
    /// Weight of the lexical component; the bigram gets `1 - lambda`.
    pub lambda: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            alpha: 0.01,
            lambda: 0.9,
        }
    }
}

impl MixtureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct SparseRow {
    entries: Vec<(TokenId, u64)>,
    total: u64,
}

impl SparseRow {
    fn from_counts(counts: HashMap<TokenId, u64>) -> Self {
        let mut entries: Vec<_> = counts.into_iter().filter(|e| e.1 > 0).collect();
        entries.sort_unstable();
        let total = entries.iter().map(|e| e.1).sum();
        SparseRow { entries, total }
    }
}

/// Copy status of the last two target tokens; see `copy_state`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CopyState {
    Start = 0,
    Copied = 1,
    Diverged = 2,
}

const STATE_NAMES: [&str; 3] = ["start", "copied", "diverged"];

/// Count-based translation model with a copy mechanism.
///
/// For target position `k` with aligned source token `x = x_{a(k)}` (monotone
/// diagonal alignment scaled by the corpus length ratio), the next-token
/// distribution is
///
/// ```text
/// p(t) = (1 - h) · [ λ · ((1 - π_s) · p_tr(t | x) + π_s · 1{t = copy(x)})
///                  + (1 - λ) · p_bi(t | t_{k-1}) ]
/// p(EOS) = h
/// ```
///
/// where `s` is the copy state (start, one of the last two tokens copied, or
/// diverged), `π_s` is the pooled rate of copy events in that state, `p_tr` and `p_bi`
/// are α-smoothed count tables and `h` is a stopping hazard indexed by the
/// offset between tokens emitted so far and the expected target length.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    params: MixtureParams,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    source_tokens: u64,
    target_tokens: u64,
    copy_counts: [(u64, u64); 3],
    translation: Vec<SparseRow>,
    bigram: Vec<SparseRow>,
    hazard: BTreeMap<i64, (u64, u64)>,
    // derived
    copy_of: Vec<Option<TokenId>>,
    ratio: f64,
}

impl MixtureModel {
    pub fn train(corpus: &ParallelCorpus, params: MixtureParams) -> Result<Self> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(Error::InvalidArgument("cannot train on an empty corpus".into()));
        }
        let source_tokens: u64 = corpus.pairs().iter().map(|p| p.source.len() as u64).sum();
        let target_tokens: u64 = corpus.pairs().iter().map(|p| p.target.len() as u64).sum();
        let mut model = MixtureModel {
            params,
            source_vocab: corpus.source_vocab().clone(),
            target_vocab: corpus.target_vocab().clone(),
            source_tokens,
            target_tokens,
            copy_counts: [(0, 0); 3],
            translation: Vec::new(),
            bigram: Vec::new(),
            hazard: BTreeMap::new(),
            copy_of: Vec::new(),
            ratio: 1.0,
        };
        model.derive();

        let mut translation: Vec<HashMap<TokenId, u64>> = vec![HashMap::new(); model.source_vocab.len()];
        let mut bigram: Vec<HashMap<TokenId, u64>> = vec![HashMap::new(); model.target_vocab.len()];
        for pair in corpus.pairs() {
            let (source, target) = (&pair.source[..], &pair.target[..]);
            for (k, &t) in target.iter().enumerate() {
                if t == UNK {
                    continue;
                }
                let x = source[model.aligned(k, source.len())];
                let state = model.copy_state(source, &target[..k]);
                let counts = &mut model.copy_counts[state as usize];
                counts.1 += 1;
                if model.copy_of[x as usize] == Some(t) {
                    counts.0 += 1;
                } else {
                    *translation[x as usize].entry(t).or_default() += 1;
                }
                let prev = if k == 0 { BOS } else { target[k - 1] };
                *bigram[prev as usize].entry(t).or_default() += 1;
            }
            let expected = model.expected_len(source.len());
            for emitted in 0..=target.len() as i64 {
                let entry = model
                    .hazard
                    .entry((emitted - expected).clamp(-MAX_LENGTH_OFFSET, MAX_LENGTH_OFFSET))
                    .or_default();
                entry.1 += 1;
                if emitted == target.len() as i64 {
                    entry.0 += 1;
                }
            }
        }
        model.translation = translation.into_iter().map(SparseRow::from_counts).collect();
        model.bigram = bigram.into_iter().map(SparseRow::from_counts).collect();
        Ok(model)
    }

    fn derive(&mut self) {
        self.copy_of = self
            .source_vocab
            .entries()
            .iter()
            .enumerate()
            .map(|(id, token)| if id < 3 { None } else { self.target_vocab.id(token) })
            .collect();
        self.ratio = if self.source_tokens == 0 {
            1.0
        } else {
            self.target_tokens as f64 / self.source_tokens as f64
        };
    }

    pub fn params(&self) -> MixtureParams {
        self.params
    }

    /// Source index aligned with 0-based target position `k`.
    fn aligned(&self, k: usize, source_len: usize) -> usize {
        ((k as f64 / self.ratio).floor() as usize).min(source_len.saturating_sub(1))
    }

    fn expected_len(&self, source_len: usize) -> i64 {
        (self.ratio * source_len as f64).round() as i64
    }

    /// The state looks at the last two target tokens: copied when either
    /// copied its aligned source token, start while fewer than two tokens
    /// exist and none copied, diverged otherwise. One stray token therefore
    /// neither ends a copy nor rules one out at the first position.
    fn copy_state(&self, source: &[TokenId], prefix: &[TokenId]) -> CopyState {
        let copied = |k: usize| {
            let x = source.get(self.aligned(k, source.len()));
            let copy = x.and_then(|&x| self.copy_of.get(x as usize).copied().flatten());
            copy == Some(prefix[k])
        };
        let window = prefix.len().saturating_sub(2)..prefix.len();
        if window.clone().any(copied) {
            CopyState::Copied
        } else if prefix.len() < 2 {
            CopyState::Start
        } else {
            CopyState::Diverged
        }
    }

    fn stop_probability(&self, emitted: usize, source_len: usize) -> f64 {
        let offset = (emitted as i64 - self.expected_len(source_len)).clamp(-MAX_LENGTH_OFFSET, MAX_LENGTH_OFFSET);
        let (stops, at_risk) = self.hazard.get(&offset).copied().unwrap_or((0, 0));
        let prior = 1.0 / (self.target_vocab.ordinary_len() as f64 + 1.0);
        (stops as f64 + self.params.alpha * prior) / (at_risk as f64 + self.params.alpha)
    }

    fn copy_rate(&self, state: CopyState) -> f64 {
        let (copies, events) = self.copy_counts[state as usize];
        copies as f64 / (events as f64 + self.params.alpha)
    }

    pub fn to_json(&self) -> Result<String> {
        let names = |vocab: &Vocabulary, id: TokenId| vocab.token(id).unwrap().to_string();
        let table = |rows: &[SparseRow], keys: &Vocabulary| {
            rows.iter()
                .enumerate()
                .filter(|(_, row)| row.total > 0)
                .map(|(id, row)| {
                    let inner = row
                        .entries
                        .iter()
                        .map(|&(t, c)| (names(&self.target_vocab, t), c))
                        .collect();
                    (names(keys, id as TokenId), inner)
                })
                .collect()
        };
        let file = MixtureFile {
            format: FORMAT.to_string(),
            alpha: self.params.alpha,
            lambda: self.params.lambda,
            source_vocab: self.source_vocab.clone(),
            target_vocab: self.target_vocab.clone(),
            source_tokens: self.source_tokens,
            target_tokens: self.target_tokens,
            copy_counts: STATE_NAMES
                .iter()
                .zip(self.copy_counts)
                .map(|(name, (c, n))| (name.to_string(), [c, n]))
                .collect(),
            translation: table(&self.translation, &self.source_vocab),
            bigram: table(&self.bigram, &self.target_vocab),
            length: LengthFile {
                max_offset: MAX_LENGTH_OFFSET,
                hazard: self.hazard.iter().map(|(&k, &(s, n))| (k, [s, n])).collect(),
            },
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: MixtureFile = serde_json::from_str(json)?;
        let invalid = |msg: String| Error::InvalidArgument(format!("model file: {msg}"));
        if file.format != FORMAT {
            return Err(invalid(format!("unsupported format {:?}", file.format)));
        }
        if file.length.max_offset != MAX_LENGTH_OFFSET {
            return Err(invalid("unsupported length-model offset range".into()));
        }
        let params = MixtureParams {
            alpha: file.alpha,
            lambda: file.lambda,
        };
        params.validate()?;
        let mut copy_counts = [(0, 0); 3];
        for (i, name) in STATE_NAMES.iter().enumerate() {
            let [c, n] = file
                .copy_counts
                .get(*name)
                .copied()
                .ok_or_else(|| invalid(format!("missing copy counts for {name}")))?;
            copy_counts[i] = (c, n);
        }
        let rows = |table: &BTreeMap<String, BTreeMap<String, u64>>, keys: &Vocabulary| {
            let mut rows = vec![SparseRow::default(); keys.len()];
            for (key, inner) in table {
                let id = keys.id(key).ok_or_else(|| invalid(format!("unknown token {key:?}")))?;
                let mut counts = HashMap::new();
                for (t, &c) in inner {
                    let t = file
                        .target_vocab
                        .id(t)
                        .filter(|&t| t != BOS && t != EOS && t != UNK)
                        .ok_or_else(|| invalid(format!("unknown target token {t:?}")))?;
                    counts.insert(t, c);
                }
                rows[id as usize] = SparseRow::from_counts(counts);
            }
            Ok::<_, Error>(rows)
        };
        let translation = rows(&file.translation, &file.source_vocab)?;
        let bigram = rows(&file.bigram, &file.target_vocab)?;
        let mut model = MixtureModel {
            params,
            source_vocab: file.source_vocab,
            target_vocab: file.target_vocab,
            source_tokens: file.source_tokens,
            target_tokens: file.target_tokens,
            copy_counts,
            translation,
            bigram,
            hazard: file.length.hazard.into_iter().map(|(k, [s, n])| (k, (s, n))).collect(),
            copy_of: Vec::new(),
            ratio: 1.0,
        };
        model.derive();
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl ConditionalSequenceModel for MixtureModel {
    fn source_vocab(&self) -> &Vocabulary {
        &self.source_vocab
    }

    fn target_vocab(&self) -> &Vocabulary {
        &self.target_vocab
    }

    fn next_token_distribution_into(&self, source: &[TokenId], prefix: &[TokenId], out: &mut Vec<f64>) {
        let MixtureParams { alpha, lambda } = self.params;
        let vocab_size = self.target_vocab.ordinary_len() as f64;
        out.clear();
        out.resize(self.target_vocab.len(), 0.0);

        let x = source
            .get(self.aligned(prefix.len(), source.len()))
            .copied()
            .unwrap_or(UNK);
        let copy_token = self.copy_of.get(x as usize).copied().flatten();
        let pi = match copy_token {
            Some(_) => self.copy_rate(self.copy_state(source, prefix)),
            None => 0.0,
        };
        let stop = self.stop_probability(prefix.len(), source.len());
        let keep = 1.0 - stop;

        let empty = SparseRow::default();
        let tr = self.translation.get(x as usize).unwrap_or(&empty);
        let prev = prefix.last().copied().unwrap_or(BOS);
        let bi = self.bigram.get(prev as usize).unwrap_or(&empty);
        let tr_norm = tr.total as f64 + alpha * vocab_size;
        let bi_norm = bi.total as f64 + alpha * vocab_size;
        let tr_weight = keep * lambda * (1.0 - pi);
        let bi_weight = keep * (1.0 - lambda);

        let base = tr_weight * alpha / tr_norm + bi_weight * alpha / bi_norm;
        out[3..].iter_mut().for_each(|p| *p = base);
        for &(t, c) in &tr.entries {
            out[t as usize] += tr_weight * c as f64 / tr_norm;
        }
        for &(t, c) in &bi.entries {
            out[t as usize] += bi_weight * c as f64 / bi_norm;
        }
        if let Some(t) = copy_token {
            out[t as usize] += keep * lambda * pi;
        }
        out[EOS as usize] = stop;
    }
}

#[derive(Serialize, Deserialize)]
struct MixtureFile {
    format: String,
    alpha: f64,
    lambda: f64,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    source_tokens: u64,
    target_tokens: u64,
    copy_counts: BTreeMap<String, [u64; 2]>,
    translation: BTreeMap<String, BTreeMap<String, u64>>,
    bigram: BTreeMap<String, BTreeMap<String, u64>>,
    length: LengthFile,
}

#[derive(Serialize, Deserialize)]
struct LengthFile {
    max_offset: i64,
    hazard: BTreeMap<i64, [u64; 2]>,
}
