//! Trace data model: sequences of per-timestep event sets, their JSON Lines
//! serialization, linearization, and vocabulary construction.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::EventType;

/// One observed message: static identity plus the optional address payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventInstance {
    pub src: String,
    pub dest: String,
    pub cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addr: Option<u64>,
}

impl EventInstance {
    pub fn new(etype: EventType, addr: Option<u64>) -> Self {
        EventInstance { src: etype.src, dest: etype.dest, cmd: etype.cmd, addr }
    }

    pub fn etype(&self) -> EventType {
        EventType { src: self.src.clone(), dest: self.dest.clone(), cmd: self.cmd.clone() }
    }

    fn check(&self) -> Result<()> {
        self.etype().check()
    }
}

/// Events observed in the same cycle. Order within a step carries no
/// information; duplicates are preserved as a multiset.
pub type TimeStep = Vec<EventInstance>;

/// A full execution trace: a totally ordered sequence of timestep sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TimeStep>,
}

impl Trace {
    pub fn new(steps: Vec<TimeStep>) -> Self {
        Trace { steps }
    }

    pub fn total_events(&self) -> usize {
        self.steps.iter().map(|s| s.len()).sum()
    }

    /// Flatten to a single event sequence: steps in order, canonical
    /// `(src, dest, cmd, addr)` order within a step, addresses dropped.
    pub fn linearize(&self) -> Vec<EventType> {
        self.linearize_instances().into_iter().map(|(_, e)| e.etype()).collect()
    }

    /// Like [`Trace::linearize`] but keeps the instances and tags each with
    /// its source step index.
    pub fn linearize_instances(&self) -> Vec<(usize, EventInstance)> {
        let mut out = Vec::with_capacity(self.total_events());
        for (i, step) in self.steps.iter().enumerate() {
            let mut sorted: Vec<&EventInstance> = step.iter().collect();
            sorted.sort();
            out.extend(sorted.into_iter().map(|e| (i, e.clone())));
        }
        out
    }

    /// Parse the JSON Lines trace format: one array of event objects per line.
    pub fn read<R: Read>(reader: R) -> Result<Trace> {
        let reader = BufReader::new(reader);
        let mut steps = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::TraceParse {
                line: line_no,
                message: e.to_string(),
            })?;
            let step: TimeStep =
                serde_json::from_str(&line).map_err(|e| Error::TraceParse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if step.is_empty() {
                return Err(Error::TraceParse {
                    line: line_no,
                    message: "empty timestep".to_string(),
                });
            }
            for ev in &step {
                ev.check().map_err(|e| Error::TraceParse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            }
            steps.push(step);
        }
        Ok(Trace { steps })
    }

    /// Write the canonical form: events within a step sorted by
    /// `(src, dest, cmd, addr)`, one compact JSON array per line.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        for step in &self.steps {
            let mut sorted: Vec<&EventInstance> = step.iter().collect();
            sorted.sort();
            serde_json::to_writer(&mut w, &sorted)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Trace> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Trace::read(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write(file)
    }
}

/// The mining alphabet: distinct event types in canonical order with a
/// bijective index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    events: Vec<EventType>,
    index: HashMap<EventType, usize>,
}

impl Vocabulary {
    /// Collect the distinct event types occurring in `traces`, canonically
    /// sorted.
    pub fn build<'a, I: IntoIterator<Item = &'a Trace>>(traces: I) -> Vocabulary {
        let mut set = BTreeSet::new();
        for trace in traces {
            for step in &trace.steps {
                for ev in step {
                    set.insert(ev.etype());
                }
            }
        }
        Vocabulary::from_events(set.into_iter().collect())
    }

    pub fn from_events(events: Vec<EventType>) -> Vocabulary {
        let index = events.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Vocabulary { events, index }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn index_of(&self, event: &EventType) -> Option<usize> {
        self.index.get(event).copied()
    }

    pub fn event(&self, index: usize) -> Option<&EventType> {
        self.events.get(index)
    }

    pub fn events(&self) -> &[EventType] {
        &self.events
    }

    /// Map an event sequence to vocabulary indices; events not in the
    /// vocabulary are dropped.
    pub fn encode(&self, seq: &[EventType]) -> Vec<usize> {
        seq.iter().filter_map(|e| self.index_of(e)).collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Result<Vec<EventType>> {
        indices
            .iter()
            .map(|&i| {
                self.event(i).cloned().ok_or(Error::OutOfVocabulary { index: i, size: self.len() })
            })
            .collect()
    }

    /// Serialize as a JSON array of event objects in index order.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(&self.events).expect("vocabulary serializes")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Vocabulary> {
        let events: Vec<EventType> = serde_json::from_value(value)?;
        Ok(Vocabulary::from_events(events))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer_pretty(&mut f, &self.events)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        f.write_all(b"\n").map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocabulary> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let events: Vec<EventType> = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        Ok(Vocabulary::from_events(events))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn ev(src: &str, dest: &str, cmd: &str) -> EventType {
        EventType::new(src, dest, cmd).unwrap()
    }

    pub fn inst(src: &str, dest: &str, cmd: &str, addr: Option<u64>) -> EventInstance {
        EventInstance::new(ev(src, dest, cmd), addr)
    }

    /// The four-step example trace with two interleaved address contexts:
    /// ({e1(10)}, {e2(10), e1(15)}, {e3(10), e2(15)}, {e1(15)}) where
    /// e1 = c1->c2, e2 = c2->c3, e3 = c3->c1.
    pub fn interleaved_addr_trace() -> Trace {
        Trace::new(vec![
            vec![inst("c1", "c2", "e1", Some(10))],
            vec![inst("c2", "c3", "e2", Some(10)), inst("c1", "c2", "e1", Some(15))],
            vec![inst("c3", "c1", "e3", Some(10)), inst("c2", "c3", "e2", Some(15))],
            vec![inst("c1", "c2", "e1", Some(15))],
        ])
    }
}
