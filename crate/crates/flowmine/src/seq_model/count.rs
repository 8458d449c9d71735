//! Exact empirical next-event model: conditional probabilities are label
//! counts over prefix occurrences, with a flagged uniform fallback for
//! prefixes never seen in training.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::{check_prefix, Prediction, SequenceModel, TrainingWindow};

#[derive(Debug, Clone)]
pub struct CountModel {
    w: usize,
    vocab_size: usize,
    counts: BTreeMap<Vec<usize>, Vec<u64>>,
}

/// Tally the windows into a [`CountModel`].
pub fn fit_count_model(
    windows: &[TrainingWindow],
    w: usize,
    vocab_size: usize,
) -> Result<CountModel> {
    if w < 2 {
        return Err(Error::InvalidParams("pattern length must be at least 2".into()));
    }
    if vocab_size == 0 {
        return Err(Error::InvalidParams("vocabulary is empty".into()));
    }
    let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
    for win in windows {
        if win.prefix.len() != w - 1 {
            return Err(Error::InconsistentWindow { expected: w - 1, found: win.prefix.len() });
        }
        for &i in win.prefix.iter().chain(std::iter::once(&win.label)) {
            if i >= vocab_size {
                return Err(Error::OutOfVocabulary { index: i, size: vocab_size });
            }
        }
        counts.entry(win.prefix.clone()).or_insert_with(|| vec![0; vocab_size])[win.label] += 1;
    }
    Ok(CountModel { w, vocab_size, counts })
}

impl CountModel {
    pub(crate) fn from_entries(
        w: usize,
        vocab_size: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, Vec<u64>)>,
    ) -> Result<CountModel> {
        let mut counts = BTreeMap::new();
        for (prefix, c) in entries {
            if prefix.len() != w - 1 {
                return Err(Error::InconsistentWindow { expected: w - 1, found: prefix.len() });
            }
            if c.len() != vocab_size {
                return Err(Error::InvalidParams(format!(
                    "count row of length {} does not match vocabulary size {vocab_size}",
                    c.len()
                )));
            }
            counts.insert(prefix, c);
        }
        Ok(CountModel { w, vocab_size, counts })
    }

    /// Iterate `(prefix, counts)` rows in sorted prefix order.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &[u64])> {
        self.counts.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// How often `prefix` occurred in training.
    pub fn prefix_total(&self, prefix: &[usize]) -> u64 {
        self.counts.get(prefix).map(|c| c.iter().sum()).unwrap_or(0)
    }
}

impl SequenceModel for CountModel {
    fn pattern_length(&self) -> usize {
        self.w
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn predict_dist(&self, prefix: &[usize]) -> Result<Prediction> {
        check_prefix(prefix, self.w, self.vocab_size)?;
        match self.counts.get(prefix) {
            Some(counts) => {
                let total: u64 = counts.iter().sum();
                debug_assert!(total > 0);
                let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
                Ok(Prediction { probs, unseen: false })
            }
            None => {
                let uniform = 1.0 / self.vocab_size as f64;
                Ok(Prediction { probs: vec![uniform; self.vocab_size], unseen: true })
            }
        }
    }
}
