//! Ground-truth construction and mined-pattern classification: the
//! valid-and-found / invalid-and-found / valid-not-found counters per
//! pattern length.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::EventType;
use crate::flow::Flow;
use crate::miner::Pattern;

/// Combinatorial guards for universe enumeration.
pub const MAX_UNIVERSE_LEN: usize = 8;
pub const MAX_EXECUTION_LEN: usize = 16;

/// The ground truth: every flow execution, plus the per-length universe of
/// valid patterns (all order-preserving subsequences with pairwise-distinct
/// events drawn from any execution).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub executions: BTreeSet<Vec<EventType>>,
    pub valid_universe: BTreeMap<usize, BTreeSet<Vec<EventType>>>,
}

impl GroundTruth {
    /// Build from explicit executions, with universes for lengths
    /// `2..=max_len`.
    pub fn from_executions<I>(executions: I, max_len: usize) -> Result<GroundTruth>
    where
        I: IntoIterator<Item = Vec<EventType>>,
    {
        if !(2..=MAX_UNIVERSE_LEN).contains(&max_len) {
            return Err(Error::InvalidParams(format!(
                "universe length {max_len} outside 2..={MAX_UNIVERSE_LEN}"
            )));
        }
        let executions: BTreeSet<Vec<EventType>> = executions.into_iter().collect();
        let mut valid_universe: BTreeMap<usize, BTreeSet<Vec<EventType>>> =
            (2..=max_len).map(|k| (k, BTreeSet::new())).collect();
        for exec in &executions {
            if exec.len() > MAX_EXECUTION_LEN {
                return Err(Error::UniverseTooLarge {
                    len: exec.len(),
                    cap: MAX_EXECUTION_LEN,
                });
            }
            for k in 2..=max_len.min(exec.len()) {
                let universe = valid_universe.get_mut(&k).unwrap();
                let mut picked = Vec::with_capacity(k);
                subsequences(exec, k, 0, &mut picked, universe);
            }
        }
        Ok(GroundTruth { executions, valid_universe })
    }

    /// True when `events` is an order-preserving subsequence with
    /// pairwise-distinct events of some execution.
    pub fn is_valid(&self, events: &[EventType]) -> bool {
        if events.len() < 2 {
            return false;
        }
        let distinct: BTreeSet<&EventType> = events.iter().collect();
        if distinct.len() != events.len() {
            return false;
        }
        if let Some(universe) = self.valid_universe.get(&events.len()) {
            return universe.contains(events);
        }
        // Lengths beyond the enumerated universes: direct subsequence scan.
        self.executions.iter().any(|exec| is_subsequence(events, exec))
    }
}

fn subsequences(
    exec: &[EventType],
    k: usize,
    from: usize,
    picked: &mut Vec<EventType>,
    out: &mut BTreeSet<Vec<EventType>>,
) {
    if picked.len() == k {
        out.insert(picked.clone());
        return;
    }
    let need = k - picked.len();
    for i in from..=exec.len().saturating_sub(need) {
        if picked.contains(&exec[i]) {
            continue;
        }
        picked.push(exec[i].clone());
        subsequences(exec, k, i + 1, picked, out);
        picked.pop();
    }
}

fn is_subsequence(needle: &[EventType], haystack: &[EventType]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|e| it.any(|h| h == e))
}

/// Enumerate every flow's executions and materialize the valid universe up
/// to `max_len`, deduplicated across flows.
pub fn build_ground_truth(flows: &[Flow], max_steps: usize, max_len: usize) -> Result<GroundTruth> {
    let mut executions = Vec::new();
    for flow in flows {
        for exec in flow.enumerate_executions(max_steps)? {
            executions.push(exec.events);
        }
    }
    GroundTruth::from_executions(executions, max_len)
}

/// One report line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub length: usize,
    pub valid_found: usize,
    pub invalid_found: usize,
    pub valid_not_found: usize,
}

/// Classification outcome: counters per length plus the underlying pattern
/// sets.
#[derive(Debug, Clone)]
pub struct MiningReport {
    pub rows: Vec<ReportRow>,
    pub valid_found: BTreeMap<usize, BTreeSet<Vec<EventType>>>,
    pub invalid_found: BTreeMap<usize, BTreeSet<Vec<EventType>>>,
    pub valid_not_found: BTreeMap<usize, BTreeSet<Vec<EventType>>>,
}

impl MiningReport {
    pub fn row(&self, length: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.length == length)
    }

    pub fn total_valid_found(&self) -> usize {
        self.rows.iter().map(|r| r.valid_found).sum()
    }

    pub fn total_invalid_found(&self) -> usize {
        self.rows.iter().map(|r| r.invalid_found).sum()
    }

    /// Comma-separated table: `length,V_F,IV_F,V_NF`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,V_F,IV_F,V_NF\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.length, r.valid_found, r.invalid_found, r.valid_not_found
            ));
        }
        out
    }

    /// Human-readable aligned table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:>6} {:>8} {:>8} {:>8}\n", "length", "V&F", "IV&F", "V&NF"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>6} {:>8} {:>8} {:>8}\n",
                r.length, r.valid_found, r.invalid_found, r.valid_not_found
            ));
        }
        out.push_str(&format!(
            "{:>6} {:>8} {:>8} {:>8}\n",
            "total",
            self.total_valid_found(),
            self.total_invalid_found(),
            self.rows.iter().map(|r| r.valid_not_found).sum::<usize>()
        ));
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }
}

/// Classify mined patterns against the ground truth for lengths
/// `2..=max_len`. Patterns are compared as event sequences (set semantics).
pub fn classify(mined: &[Pattern], gt: &GroundTruth, max_len: usize) -> MiningReport {
    let mut mined_by_len: BTreeMap<usize, BTreeSet<Vec<EventType>>> = BTreeMap::new();
    for p in mined {
        mined_by_len.entry(p.len()).or_default().insert(p.events.clone());
    }

    let mut rows = Vec::new();
    let mut valid_found = BTreeMap::new();
    let mut invalid_found = BTreeMap::new();
    let mut valid_not_found = BTreeMap::new();
    let empty = BTreeSet::new();
    for k in 2..=max_len {
        let universe = gt.valid_universe.get(&k).unwrap_or(&empty);
        let mined_k = mined_by_len.get(&k).unwrap_or(&empty);
        let vf: BTreeSet<Vec<EventType>> = mined_k.intersection(universe).cloned().collect();
        let ivf: BTreeSet<Vec<EventType>> = mined_k.difference(universe).cloned().collect();
        let vnf: BTreeSet<Vec<EventType>> = universe.difference(mined_k).cloned().collect();
        rows.push(ReportRow {
            length: k,
            valid_found: vf.len(),
            invalid_found: ivf.len(),
            valid_not_found: vnf.len(),
        });
        valid_found.insert(k, vf);
        invalid_found.insert(k, ivf);
        valid_not_found.insert(k, vnf);
    }
    MiningReport { rows, valid_found, invalid_found, valid_not_found }
}
