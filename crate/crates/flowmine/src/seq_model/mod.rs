//! Per-pattern-length next-event models: a common conditional-distribution
//! interface with two backends, an exact empirical count model and a
//! from-scratch LSTM.

mod count;
mod lstm;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Vocabulary;

pub use count::{fit_count_model, CountModel};
pub use lstm::{train_lstm, Gradients, Hyperparams, LstmModel};

/// One supervised example: `w−1` context events and the event that followed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingWindow {
    pub prefix: Vec<usize>,
    pub label: usize,
}

/// All length-`w` sliding windows of `seq`, in order. Sequences shorter than
/// `w` yield no windows.
pub fn make_training_windows(seq: &[usize], w: usize) -> Vec<TrainingWindow> {
    assert!(w >= 2, "pattern length must be at least 2");
    if seq.len() < w {
        return Vec::new();
    }
    (0..=seq.len() - w)
        .map(|i| TrainingWindow { prefix: seq[i..i + w - 1].to_vec(), label: seq[i + w - 1] })
        .collect()
}

/// Windows from many sequences, concatenated; windows never span sequence
/// boundaries.
pub fn windows_from_sequences(seqs: &[Vec<usize>], w: usize) -> Vec<TrainingWindow> {
    seqs.iter().flat_map(|s| make_training_windows(s, w)).collect()
}

/// A next-event distribution, flagged when the model has never seen the
/// queried prefix and fell back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub unseen: bool,
}

/// Next-event conditional distribution engine for one pattern length.
pub trait SequenceModel {
    /// The pattern length `w` this model serves; prefixes have length `w−1`.
    fn pattern_length(&self) -> usize;

    fn vocab_size(&self) -> usize;

    /// The conditional distribution over the vocabulary given `prefix`.
    fn predict_dist(&self, prefix: &[usize]) -> Result<Prediction>;
}

pub(crate) fn check_prefix(prefix: &[usize], w: usize, vocab_size: usize) -> Result<()> {
    if prefix.len() != w - 1 {
        return Err(Error::WrongPrefixLength { w, expected: w - 1, found: prefix.len() });
    }
    for &i in prefix {
        if i >= vocab_size {
            return Err(Error::OutOfVocabulary { index: i, size: vocab_size });
        }
    }
    Ok(())
}

/// A trained model of either backend, together with save/load support.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Count(CountModel),
    Lstm(LstmModel),
}

impl AnyModel {
    pub fn as_dyn(&self) -> &dyn SequenceModel {
        match self {
            AnyModel::Count(m) => m,
            AnyModel::Lstm(m) => m,
        }
    }

    pub fn pattern_length(&self) -> usize {
        self.as_dyn().pattern_length()
    }
}

/// Which backend to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Count,
    Lstm,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(ModelKind::Count),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(Error::InvalidParams(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Train one model per pattern length 2..=`max_len` over the given encoded
/// sequences; windows never span sequence boundaries. Lengths for which no
/// window exists are omitted, so the returned suite covers a contiguous range
/// starting at 2 (possibly empty). Per-length seeds derive from `seed`, and
/// `jobs > 1` trains lengths concurrently without changing any result.
pub fn train_models(
    seqs: &[Vec<usize>],
    vocab_size: usize,
    max_len: usize,
    kind: ModelKind,
    hp: &Hyperparams,
    seed: u64,
    jobs: usize,
) -> Result<Vec<AnyModel>> {
    if max_len < 2 {
        return Err(Error::InvalidParams("max_len must be at least 2".into()));
    }
    let mut tasks: Vec<(usize, Vec<TrainingWindow>)> = Vec::new();
    for w in 2..=max_len {
        let windows = windows_from_sequences(seqs, w);
        if windows.is_empty() {
            break;
        }
        tasks.push((w, windows));
    }

    let train_one = |(w, windows): &(usize, Vec<TrainingWindow>)| -> Result<AnyModel> {
        match kind {
            ModelKind::Count => {
                Ok(AnyModel::Count(fit_count_model(windows, *w, vocab_size)?))
            }
            ModelKind::Lstm => {
                let w_seed = crate::util::splitmix64(seed ^ (*w as u64));
                Ok(AnyModel::Lstm(train_lstm(windows, vocab_size, hp, w_seed)?))
            }
        }
    };

    if jobs <= 1 || tasks.len() <= 1 {
        tasks.iter().map(train_one).collect()
    } else {
        let mut out: Vec<Option<Result<AnyModel>>> = (0..tasks.len()).map(|_| None).collect();
        for (slots, group) in out.chunks_mut(jobs).zip(tasks.chunks(jobs)) {
            std::thread::scope(|scope| {
                for (slot, task) in slots.iter_mut().zip(group.iter()) {
                    scope.spawn(move || {
                        *slot = Some(train_one(task));
                    });
                }
            });
        }
        out.into_iter().map(|r| r.expect("scoped training thread completed")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LayerWeightsFile {
    w_ih: Vec<Vec<f64>>,
    w_hh: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct OutputWeightsFile {
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CountEntryFile {
    prefix: Vec<usize>,
    counts: Vec<u64>,
}

/// On-disk model document. Weight matrices are nested decimal arrays so the
/// format stays portable across implementations.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelFile {
    Lstm {
        w: usize,
        vocabulary: serde_json::Value,
        hyperparameters: Hyperparams,
        seed: u64,
        layers: Vec<LayerWeightsFile>,
        output: OutputWeightsFile,
    },
    Count {
        w: usize,
        vocabulary: serde_json::Value,
        entries: Vec<CountEntryFile>,
    },
}

pub fn save_model(model: &AnyModel, vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    let file = match model {
        AnyModel::Lstm(m) => ModelFile::Lstm {
            w: m.pattern_length(),
            vocabulary: vocab.to_json_value(),
            hyperparameters: m.hyperparams().clone(),
            seed: m.seed(),
            layers: m
                .layer_weights()
                .into_iter()
                .map(|(w_ih, w_hh, bias)| LayerWeightsFile { w_ih, w_hh, bias })
                .collect(),
            output: {
                let (weight, bias) = m.output_weights();
                OutputWeightsFile { weight, bias }
            },
        },
        AnyModel::Count(m) => ModelFile::Count {
            w: m.pattern_length(),
            vocabulary: vocab.to_json_value(),
            entries: m
                .entries()
                .map(|(prefix, counts)| CountEntryFile {
                    prefix: prefix.clone(),
                    counts: counts.to_vec(),
                })
                .collect(),
        },
    };
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer(f, &file).map_err(|e| Error::json(path.display().to_string(), e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(AnyModel, Vocabulary)> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: ModelFile = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    match file {
        ModelFile::Lstm { w, vocabulary, hyperparameters, seed, layers, output } => {
            let vocab = Vocabulary::from_json_value(vocabulary)?;
            let model = LstmModel::from_weights(
                w,
                vocab.len(),
                hyperparameters,
                seed,
                layers.into_iter().map(|l| (l.w_ih, l.w_hh, l.bias)).collect(),
                (output.weight, output.bias),
            )?;
            Ok((AnyModel::Lstm(model), vocab))
        }
        ModelFile::Count { w, vocabulary, entries } => {
            let vocab = Vocabulary::from_json_value(vocabulary)?;
            let model = CountModel::from_entries(
                w,
                vocab.len(),
                entries.into_iter().map(|e| (e.prefix, e.counts)),
            )?;
            Ok((AnyModel::Count(model), vocab))
        }
    }
}
