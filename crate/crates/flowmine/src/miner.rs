//! Chained pattern extraction: per-length models queried in ascending order,
//! with an emission threshold θ, a candidate-relaxation threshold θ′,
//! causality filtering, and initiating-event seed filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::EventType;
use crate::seq_model::SequenceModel;
use crate::trace::{Trace, Vocabulary};

/// A mined sequential pattern: at least two pairwise-distinct events plus the
/// conditional probability of each extension step.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub events: Vec<EventType>,
    pub step_probs: Vec<f64>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Extraction parameters. `theta` gates emission, `theta_prime` gates
/// candidacy for further extension; `theta_prime <= theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinerParams {
    pub theta: f64,
    pub theta_prime: f64,
    pub max_len: usize,
    pub causality_filter: bool,
    pub initiating_filter: bool,
}

impl Default for MinerParams {
    fn default() -> Self {
        MinerParams {
            theta: 0.2,
            theta_prime: 0.2,
            max_len: 8,
            causality_filter: false,
            initiating_filter: false,
        }
    }
}

impl MinerParams {
    pub fn check(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "theta = {} must lie in (0, 1]",
                self.theta
            )));
        }
        if !(self.theta_prime > 0.0 && self.theta_prime <= self.theta) {
            return Err(Error::InvalidParams(format!(
                "theta_prime = {} must lie in (0, theta = {}]",
                self.theta_prime, self.theta
            )));
        }
        if self.max_len < 2 {
            return Err(Error::InvalidParams("max_len must be at least 2".into()));
        }
        Ok(())
    }
}

/// The causality relation: `e1`'s destination is `e2`'s source.
pub fn causality_ok(e1: &EventType, e2: &EventType) -> bool {
    e1.dest == e2.src
}

/// Event types never causally preceded anywhere: `e` qualifies when in every
/// trace, no occurrence of `e` has a strictly earlier event whose destination
/// equals `e.src`. Events sharing a timestep do not count as preceding.
pub fn detect_initiating_events(traces: &[Trace]) -> BTreeSet<EventType> {
    let mut all: BTreeSet<EventType> = BTreeSet::new();
    let mut disqualified: BTreeSet<EventType> = BTreeSet::new();
    for trace in traces {
        let mut dests_seen: BTreeSet<&str> = BTreeSet::new();
        for step in &trace.steps {
            for ev in step {
                all.insert(ev.etype());
                if dests_seen.contains(ev.src.as_str()) {
                    disqualified.insert(ev.etype());
                }
            }
            for ev in step {
                dests_seen.insert(ev.dest.as_str());
            }
        }
    }
    all.difference(&disqualified).cloned().collect()
}

/// Per-length model lookup used by [`mine`].
#[derive(Default)]
pub struct ModelSuite<'a> {
    by_length: BTreeMap<usize, &'a dyn SequenceModel>,
}

impl<'a> ModelSuite<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: &'a dyn SequenceModel) {
        self.by_length.insert(model.pattern_length(), model);
    }

    pub fn get(&self, length: usize) -> Option<&'a dyn SequenceModel> {
        self.by_length.get(&length).copied()
    }

    pub fn max_length(&self) -> Option<usize> {
        self.by_length.keys().next_back().copied()
    }
}

impl<'a> FromIterator<&'a dyn SequenceModel> for ModelSuite<'a> {
    fn from_iter<T: IntoIterator<Item = &'a dyn SequenceModel>>(iter: T) -> Self {
        let mut suite = ModelSuite::new();
        for m in iter {
            suite.insert(m);
        }
        suite
    }
}

/// Everything [`mine`] computed: the emitted patterns plus the candidate
/// sequences retained at each length (length 1 holds the seeds).
pub struct MineOutcome {
    pub patterns: Vec<Pattern>,
    pub candidates: BTreeMap<usize, BTreeSet<Vec<usize>>>,
}

/// Extract patterns by chaining the per-length models.
///
/// Candidates start as single events (restricted to `initiating` when that
/// filter is on). At each length `w`, every candidate prefix is extended by
/// each event that is not already in the prefix, passes the causality filter
/// when enabled, and has conditional probability at least `theta_prime`; the
/// extension is emitted as a pattern when the probability also reaches
/// `theta`. Models that flag a prefix as unseen decline to extend it.
pub fn mine(
    suite: &ModelSuite<'_>,
    vocab: &Vocabulary,
    params: &MinerParams,
    initiating: Option<&BTreeSet<EventType>>,
) -> Result<Vec<Pattern>> {
    Ok(mine_with_details(suite, vocab, params, initiating)?.patterns)
}

pub fn mine_with_details(
    suite: &ModelSuite<'_>,
    vocab: &Vocabulary,
    params: &MinerParams,
    initiating: Option<&BTreeSet<EventType>>,
) -> Result<MineOutcome> {
    params.check()?;

    let seeds: Vec<Vec<usize>> = if params.initiating_filter {
        let init = initiating.ok_or_else(|| {
            Error::InvalidParams(
                "initiating filter enabled but no initiating-event set supplied".into(),
            )
        })?;
        init.iter().filter_map(|e| vocab.index_of(e)).map(|i| vec![i]).collect()
    } else {
        (0..vocab.len()).map(|i| vec![i]).collect()
    };

    let mut candidates: Vec<(Vec<usize>, Vec<f64>)> =
        seeds.into_iter().map(|s| (s, Vec::new())).collect();
    let mut candidate_log: BTreeMap<usize, BTreeSet<Vec<usize>>> = BTreeMap::new();
    candidate_log.insert(1, candidates.iter().map(|(s, _)| s.clone()).collect());

    // Dedup by event sequence, keeping the lexicographically largest
    // step-probability record.
    let mut emitted: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();

    for w in 2..=params.max_len {
        let model = suite.get(w).ok_or(Error::MissingModel { length: w })?;
        let mut next: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
        for (seq, probs) in &candidates {
            let pred = model.predict_dist(seq)?;
            if pred.unseen {
                continue;
            }
            let last = vocab.event(*seq.last().expect("candidates are non-empty")).unwrap();
            for (e, &p) in pred.probs.iter().enumerate() {
                if seq.contains(&e) {
                    continue;
                }
                if params.causality_filter && !causality_ok(last, vocab.event(e).unwrap()) {
                    continue;
                }
                if p < params.theta_prime {
                    continue;
                }
                let mut new_seq = seq.clone();
                new_seq.push(e);
                let mut new_probs = probs.clone();
                new_probs.push(p);
                if p >= params.theta {
                    match emitted.get_mut(&new_seq) {
                        Some(existing) if existing.as_slice() >= new_probs.as_slice() => {}
                        _ => {
                            emitted.insert(new_seq.clone(), new_probs.clone());
                        }
                    }
                }
                next.push((new_seq, new_probs));
            }
        }
        candidate_log.insert(w, next.iter().map(|(s, _)| s.clone()).collect());
        candidates = next;
    }

    let mut patterns: Vec<Pattern> = emitted
        .into_iter()
        .map(|(seq, step_probs)| {
            Pattern { events: vocab.decode(&seq).expect("mined indices are in-vocab"), step_probs }
        })
        .collect();
    patterns.sort_by(|a, b| (a.len(), &a.events).cmp(&(b.len(), &b.events)));
    Ok(MineOutcome { patterns, candidates: candidate_log })
}

/// Post-hoc variant of initiating filtering, for comparison runs: keep the
/// patterns whose first event is in the initiating set.
pub fn filter_initiating_post(
    patterns: Vec<Pattern>,
    initiating: &BTreeSet<EventType>,
) -> Vec<Pattern> {
    patterns
        .into_iter()
        .filter(|p| p.events.first().map(|e| initiating.contains(e)).unwrap_or(false))
        .collect()
}

// --- mined-pattern file ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PatternRecord {
    events: Vec<EventType>,
    step_probs: Vec<f64>,
    length: usize,
}

pub fn write_patterns<W: Write>(patterns: &[Pattern], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for p in patterns {
        let record = PatternRecord {
            events: p.events.clone(),
            step_probs: p.step_probs.clone(),
            length: p.events.len(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_patterns<R: Read>(reader: R) -> Result<Vec<Pattern>> {
    let reader = BufReader::new(reader);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::TraceParse { line: idx + 1, message: e.to_string() })?;
        let record: PatternRecord =
            serde_json::from_str(&line).map_err(|e| Error::TraceParse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push(Pattern { events: record.events, step_probs: record.step_probs });
    }
    Ok(out)
}

pub fn save_patterns(patterns: &[Pattern], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_patterns(patterns, f)
}

pub fn load_patterns(path: impl AsRef<Path>) -> Result<Vec<Pattern>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_patterns(f)
}
