//! Trace slicing: splitting an interleaved trace into sub-traces so that
//! unrelated events end up separated, by address payload or by chaining on
//! the causality relation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{EventInstance, Trace};

/// How a sub-trace was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMethod {
    None,
    Address,
    Causality,
    AddressThenCausality,
}

impl fmt::Display for SliceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SliceMethod::None => "none",
            SliceMethod::Address => "address",
            SliceMethod::Causality => "causality",
            SliceMethod::AddressThenCausality => "address+causality",
        };
        f.write_str(s)
    }
}

impl FromStr for SliceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SliceMethod::None),
            "address" => Ok(SliceMethod::Address),
            "causality" => Ok(SliceMethod::Causality),
            "address+causality" | "address_then_causality" => {
                Ok(SliceMethod::AddressThenCausality)
            }
            other => Err(Error::UnknownSliceMethod(other.to_string())),
        }
    }
}

/// What to do with events that carry no address during address slicing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddrlessPolicy {
    /// Copy each address-less event into every address slice, so causal
    /// links through address-free hops survive.
    #[default]
    CopyAll,
    /// Collect address-less events into one extra slice of their own.
    Residual,
}

/// An order-preserving projection of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTrace {
    pub events: Vec<EventInstance>,
    pub origin: SliceMethod,
    /// The shared address, for address slices.
    pub key: Option<u64>,
    merged: bool,
}

impl SubTrace {
    /// True when this sub-trace absorbed others during causality slicing.
    pub fn was_merged(&self) -> bool {
        self.merged
    }

    /// View the sub-trace as a trace of singleton steps.
    pub fn to_trace(&self) -> Trace {
        Trace::new(self.events.iter().map(|e| vec![e.clone()]).collect())
    }
}

/// Partition events by address value. Events are visited in trace order
/// (canonical order within a step); each distinct address becomes one slice.
pub fn address_slice(trace: &Trace) -> Vec<SubTrace> {
    address_slice_with_policy(trace, AddrlessPolicy::CopyAll)
}

pub fn address_slice_with_policy(trace: &Trace, policy: AddrlessPolicy) -> Vec<SubTrace> {
    let ordered = trace.linearize_instances();
    let mut by_addr: BTreeMap<u64, Vec<(usize, EventInstance)>> = BTreeMap::new();
    let mut addrless: Vec<(usize, EventInstance)> = Vec::new();
    for (pos, (_, ev)) in ordered.into_iter().enumerate() {
        match ev.addr {
            Some(a) => by_addr.entry(a).or_default().push((pos, ev)),
            None => addrless.push((pos, ev)),
        }
    }

    match policy {
        AddrlessPolicy::CopyAll => {
            let mut out = Vec::with_capacity(by_addr.len());
            for (addr, mut events) in by_addr {
                events.extend(addrless.iter().cloned());
                events.sort_by_key(|(pos, _)| *pos);
                out.push(SubTrace {
                    events: events.into_iter().map(|(_, e)| e).collect(),
                    origin: SliceMethod::Address,
                    key: Some(addr),
                    merged: false,
                });
            }
            out
        }
        AddrlessPolicy::Residual => {
            let mut out: Vec<SubTrace> = by_addr
                .into_iter()
                .map(|(addr, events)| SubTrace {
                    events: events.into_iter().map(|(_, e)| e).collect(),
                    origin: SliceMethod::Address,
                    key: Some(addr),
                    merged: false,
                })
                .collect();
            if !addrless.is_empty() {
                out.push(SubTrace {
                    events: addrless.into_iter().map(|(_, e)| e).collect(),
                    origin: SliceMethod::Address,
                    key: None,
                    merged: false,
                });
            }
            out
        }
    }
}

/// Greedy causality chaining over position-tagged events: append an event to
/// the sub-trace whose last event's destination matches its source; merge
/// when several match; open a new sub-trace when none do.
fn causality_chain(ordered: Vec<(usize, EventInstance)>, origin: SliceMethod) -> Vec<SubTrace> {
    struct Chain {
        events: Vec<(usize, EventInstance)>,
        merged: bool,
    }
    let mut chains: Vec<Chain> = Vec::new();

    for (pos, ev) in ordered {
        let matching: Vec<usize> = chains
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                c.events.last().map(|(_, last)| last.dest == ev.src).unwrap_or(false)
            })
            .map(|(i, _)| i)
            .collect();
        match matching.len() {
            0 => chains.push(Chain { events: vec![(pos, ev)], merged: false }),
            1 => chains[matching[0]].events.push((pos, ev)),
            _ => {
                // Interleave the matching chains by original trace position,
                // then append the event to the combined chain.
                let mut combined: Vec<(usize, EventInstance)> = Vec::new();
                for &i in matching.iter().rev() {
                    combined.extend(chains.remove(i).events);
                }
                combined.sort_by_key(|(p, _)| *p);
                combined.push((pos, ev));
                chains.push(Chain { events: combined, merged: true });
            }
        }
    }

    let mut out: Vec<SubTrace> = chains
        .into_iter()
        .map(|c| SubTrace {
            events: c.events.into_iter().map(|(_, e)| e).collect(),
            origin,
            key: None,
            merged: c.merged,
        })
        .collect();
    out.sort_by(|a, b| a.events.first().cmp(&b.events.first()));
    out
}

/// Split a trace into causally chained sub-traces.
pub fn causality_slice(trace: &Trace) -> Vec<SubTrace> {
    let ordered: Vec<(usize, EventInstance)> = trace
        .linearize_instances()
        .into_iter()
        .enumerate()
        .map(|(pos, (_, ev))| (pos, ev))
        .collect();
    causality_chain(ordered, SliceMethod::Causality)
}

/// Dispatch on the slicing method. `None` yields a single sub-trace holding
/// the linearized trace; the composed mode chains causality slicing within
/// each address slice.
pub fn slice(trace: &Trace, method: SliceMethod) -> Vec<SubTrace> {
    slice_with_policy(trace, method, AddrlessPolicy::CopyAll)
}

pub fn slice_with_policy(
    trace: &Trace,
    method: SliceMethod,
    policy: AddrlessPolicy,
) -> Vec<SubTrace> {
    match method {
        SliceMethod::None => vec![SubTrace {
            events: trace.linearize_instances().into_iter().map(|(_, e)| e).collect(),
            origin: SliceMethod::None,
            key: None,
            merged: false,
        }],
        SliceMethod::Address => address_slice_with_policy(trace, policy),
        SliceMethod::Causality => causality_slice(trace),
        SliceMethod::AddressThenCausality => {
            let mut out = Vec::new();
            for addr_slice in address_slice_with_policy(trace, policy) {
                let key = addr_slice.key;
                let ordered: Vec<(usize, EventInstance)> =
                    addr_slice.events.into_iter().enumerate().collect();
                for mut sub in causality_chain(ordered, SliceMethod::AddressThenCausality) {
                    sub.key = key;
                    out.push(sub);
                }
            }
            out
        }
    }
}

/// Entry in the slice index file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceIndexEntry {
    pub file: String,
    pub method: String,
    pub key: Option<u64>,
}
