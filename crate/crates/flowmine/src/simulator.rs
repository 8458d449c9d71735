//! Concurrent trace generation: many flow instances advancing in parallel,
//! one transition per cycle, with randomized flow selection and start delays.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Execution, Flow, Marking};
use crate::trace::{EventInstance, Trace};
use crate::util::splitmix64;

/// A block that launches flow instances, one at a time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Initiator {
    pub component: String,
    /// Names of the flows this block may start.
    pub flows: Vec<String>,
}

/// Simulation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Launching blocks; when empty, one initiator per distinct start-event
    /// source component is derived from the flow set.
    #[serde(default)]
    pub initiators: Vec<Initiator>,
    pub instances_per_initiator: u32,
    /// Inclusive delay range, in cycles, between instance launches.
    pub delay_min: u32,
    pub delay_max: u32,
    pub seed: u64,
    /// Number of distinct address values instances draw from.
    pub address_pool: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            initiators: Vec::new(),
            instances_per_initiator: 100,
            delay_min: 1,
            delay_max: 10,
            seed: 0,
            address_pool: 8,
        }
    }
}

impl SimConfig {
    fn check(&self) -> Result<()> {
        if self.instances_per_initiator < 1 {
            return Err(Error::InvalidParams("instances_per_initiator must be >= 1".into()));
        }
        if self.delay_min < 1 || self.delay_min > self.delay_max {
            return Err(Error::InvalidParams(format!(
                "delay range [{}, {}] must satisfy 1 <= min <= max",
                self.delay_min, self.delay_max
            )));
        }
        if self.address_pool < 1 {
            return Err(Error::InvalidParams("address_pool must be >= 1".into()));
        }
        Ok(())
    }
}

/// Who emitted each trace event: one record per event, in trace order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub step: usize,
    pub event: EventInstance,
    pub instance: u64,
    pub flow: String,
}

/// A simulated trace with its provenance sidecar.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub trace: Trace,
    pub provenance: Vec<ProvenanceRecord>,
}

pub fn write_provenance<W: Write>(records: &[ProvenanceRecord], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_provenance<R: Read>(reader: R) -> Result<Vec<ProvenanceRecord>> {
    let reader = BufReader::new(reader);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::TraceParse { line: idx + 1, message: e.to_string() })?;
        out.push(serde_json::from_str(&line).map_err(|e| Error::TraceParse {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn save_provenance(records: &[ProvenanceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_provenance(records, f)
}

/// One initiator per distinct start-event source, launching every flow whose
/// start events it sources.
pub fn derive_initiators(flows: &[Flow]) -> Vec<Initiator> {
    let mut by_src: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for flow in flows {
        for ev in flow.start_events() {
            let entry = by_src.entry(ev.src.clone()).or_default();
            if !entry.contains(&flow.name) {
                entry.push(flow.name.clone());
            }
        }
    }
    by_src
        .into_iter()
        .map(|(component, flows)| Initiator { component, flows })
        .collect()
}

struct ActiveInstance {
    instance_id: u64,
    flow_idx: usize,
    addr: u64,
    marking: Marking,
    last_transition: usize,
}

struct InitiatorState {
    rng: ChaCha8Rng,
    flow_indices: Vec<usize>,
    remaining: u32,
    launched: u32,
    next_start: u64,
    active: Option<ActiveInstance>,
}

/// Run the concurrent simulation. Deterministic for a fixed `(flows, cfg)`
/// including the seed; events landing on the same cycle share a timestep.
pub fn simulate(flows: &[Flow], cfg: &SimConfig) -> Result<SimOutput> {
    cfg.check()?;
    if flows.is_empty() {
        return Err(Error::EmptyFlowSet);
    }
    for flow in flows {
        let report = flow.validate();
        if !report.is_ok() {
            return Err(Error::InvalidFlow { flow: flow.name.clone(), summary: report.summary() });
        }
    }

    let initiators = if cfg.initiators.is_empty() {
        derive_initiators(flows)
    } else {
        cfg.initiators.clone()
    };
    if initiators.is_empty() {
        return Err(Error::InvalidParams("no initiators configured or derivable".into()));
    }

    let mut states = Vec::with_capacity(initiators.len());
    for (idx, init) in initiators.iter().enumerate() {
        let mut flow_indices = Vec::new();
        for name in &init.flows {
            let fi = flows
                .iter()
                .position(|f| &f.name == name)
                .ok_or_else(|| Error::UnknownFlow(name.clone()))?;
            flow_indices.push(fi);
        }
        if flow_indices.is_empty() {
            return Err(Error::InvalidParams(format!(
                "initiator `{}` has an empty flow subset",
                init.component
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ splitmix64(idx as u64)));
        let first_delay = rng.random_range(cfg.delay_min..=cfg.delay_max) as u64;
        states.push(InitiatorState {
            rng,
            flow_indices,
            remaining: cfg.instances_per_initiator,
            launched: 0,
            next_start: first_delay,
            active: None,
        });
    }

    // cycle -> events emitted that cycle, in initiator order
    let mut cycles: BTreeMap<u64, Vec<(EventInstance, u64, String)>> = BTreeMap::new();
    let mut cycle: u64 = 0;

    loop {
        let mut any_pending = false;
        for (idx, st) in states.iter_mut().enumerate() {
            if st.active.is_none() && st.remaining > 0 && cycle >= st.next_start {
                // Launch: pick a flow and an address, then fire the start
                // transition this very cycle.
                let flow_idx = if st.flow_indices.len() > 1 {
                    st.flow_indices[st.rng.random_range(0..st.flow_indices.len())]
                } else {
                    st.flow_indices[0]
                };
                let addr = st.rng.random_range(0..cfg.address_pool);
                let instance_id =
                    idx as u64 * cfg.instances_per_initiator as u64 + st.launched as u64;
                st.launched += 1;
                st.remaining -= 1;
                let flow = &flows[flow_idx];
                let starts = flow.start_transitions();
                if starts.is_empty() {
                    return Err(Error::InstanceStuck {
                        flow: flow.name.clone(),
                        marking: flow.initial_marking.iter().cloned().collect(),
                    });
                }
                let pick =
                    if starts.len() > 1 { st.rng.random_range(0..starts.len()) } else { 0 };
                let t = starts[pick];
                let t_idx = flow.transitions.iter().position(|x| x.id == t.id).unwrap();
                let marking = flow.fire(&flow.initial_marking, &t.id)?;
                let event = EventInstance::new(flow.labeling[&t.id].clone(), Some(addr));
                cycles.entry(cycle).or_default().push((event, instance_id, flow.name.clone()));
                if t.postset.iter().all(|p| flow.end_marking.contains(p)) {
                    let delay = st.rng.random_range(cfg.delay_min..=cfg.delay_max) as u64;
                    st.next_start = cycle + delay;
                } else {
                    st.active = Some(ActiveInstance {
                        instance_id,
                        flow_idx,
                        addr,
                        marking,
                        last_transition: t_idx,
                    });
                }
            } else if let Some(active) = st.active.as_mut() {
                let flow = &flows[active.flow_idx];
                let last = &flow.transitions[active.last_transition];
                let continuations = flow.chain_continuations(last, &active.marking);
                if continuations.is_empty() {
                    return Err(Error::InstanceStuck {
                        flow: flow.name.clone(),
                        marking: active.marking.iter().cloned().collect(),
                    });
                }
                let pick = if continuations.len() > 1 {
                    st.rng.random_range(0..continuations.len())
                } else {
                    0
                };
                let t = continuations[pick];
                let t_idx = flow.transitions.iter().position(|x| x.id == t.id).unwrap();
                active.marking = flow.fire(&active.marking, &t.id)?;
                active.last_transition = t_idx;
                let event = EventInstance::new(flow.labeling[&t.id].clone(), Some(active.addr));
                cycles
                    .entry(cycle)
                    .or_default()
                    .push((event, active.instance_id, flow.name.clone()));
                if t.postset.iter().all(|p| flow.end_marking.contains(p)) {
                    st.active = None;
                    let delay = st.rng.random_range(cfg.delay_min..=cfg.delay_max) as u64;
                    st.next_start = cycle + delay;
                }
            }
            if st.active.is_some() || st.remaining > 0 {
                any_pending = true;
            }
        }
        if !any_pending {
            break;
        }
        cycle += 1;
    }

    // Compress: cycles with no events produce no timestep.
    let mut steps = Vec::new();
    let mut provenance = Vec::new();
    for (_, emitted) in cycles {
        let step_idx = steps.len();
        let mut step = Vec::with_capacity(emitted.len());
        for (event, instance, flow) in emitted {
            provenance.push(ProvenanceRecord { step: step_idx, event: event.clone(), instance, flow });
            step.push(event);
        }
        steps.push(step);
    }
    Ok(SimOutput { trace: Trace::new(steps), provenance })
}

/// Enumerate every flow's executions, keyed by flow name.
pub fn ground_truth(
    flows: &[Flow],
    max_steps: usize,
) -> Result<BTreeMap<String, Vec<Execution>>> {
    let mut out = BTreeMap::new();
    for flow in flows {
        out.insert(flow.name.clone(), flow.enumerate_executions(max_steps)?);
    }
    Ok(out)
}
