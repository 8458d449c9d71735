//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here recomputes results from first principles — window counts
//! by direct scanning, firing sequences by naive recursion — so the tests
//! check the library against a second, independent route.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use flowmine::event::EventType;
use flowmine::flow::Flow;
use flowmine::miner::{causality_ok, MinerParams};
use flowmine::trace::{EventInstance, Trace, Vocabulary};

pub fn ev(src: &str, dest: &str, cmd: &str) -> EventType {
    EventType::new(src, dest, cmd).unwrap()
}

pub fn inst(src: &str, dest: &str, cmd: &str, addr: Option<u64>) -> EventInstance {
    EventInstance::new(ev(src, dest, cmd), addr)
}

pub fn flows_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../flows/v1")
}

pub fn load_flow(name: &str) -> Flow {
    Flow::load(flows_dir().join(format!("{name}.json"))).unwrap()
}

pub fn load_library() -> Vec<Flow> {
    let mut flows: Vec<Flow> = std::fs::read_dir(flows_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().map(|x| x == "json") == Some(true)).then(|| Flow::load(p).unwrap())
        })
        .collect();
    flows.sort_by(|a, b| a.name.cmp(&b.name));
    flows
}

/// The interleaved two-address example trace:
/// ({e1(10)}, {e2(10), e1(15)}, {e3(10), e2(15)}, {e1(15)}).
pub fn interleaved_addr_trace() -> Trace {
    Trace::new(vec![
        vec![inst("c1", "c2", "e1", Some(10))],
        vec![inst("c2", "c3", "e2", Some(10)), inst("c1", "c2", "e1", Some(15))],
        vec![inst("c3", "c1", "e3", Some(10)), inst("c2", "c3", "e2", Some(15))],
        vec![inst("c1", "c2", "e1", Some(15))],
    ])
}

/// Empirical conditional of `label` after `prefix`, by scanning windows of
/// length `prefix.len() + 1` across the sequences. `None` when the prefix
/// never occurs with a successor.
pub fn scan_conditional(seqs: &[Vec<usize>], prefix: &[usize], label: usize) -> Option<f64> {
    let w = prefix.len() + 1;
    let mut prefix_count = 0u64;
    let mut label_count = 0u64;
    for seq in seqs {
        if seq.len() < w {
            continue;
        }
        for i in 0..=seq.len() - w {
            if &seq[i..i + w - 1] == prefix {
                prefix_count += 1;
                if seq[i + w - 1] == label {
                    label_count += 1;
                }
            }
        }
    }
    (prefix_count > 0).then(|| label_count as f64 / prefix_count as f64)
}

/// Brute-force pattern enumerator: scores every unique-event sequence by
/// direct window counts and applies the θ/θ′/filter semantics by recursion.
/// Returns mined event-index sequences with their step probabilities.
pub fn oracle_mine(
    seqs: &[Vec<usize>],
    vocab: &Vocabulary,
    params: &MinerParams,
    initiating: Option<&BTreeSet<EventType>>,
) -> Vec<(Vec<usize>, Vec<f64>)> {
    let seeds: Vec<usize> = match (params.initiating_filter, initiating) {
        (true, Some(set)) => set.iter().filter_map(|e| vocab.index_of(e)).collect(),
        (true, None) => panic!("initiating filter without a set"),
        (false, _) => (0..vocab.len()).collect(),
    };

    let mut out = Vec::new();
    for seed in seeds {
        let mut probs = Vec::new();
        extend(seqs, vocab, params, &mut vec![seed], &mut probs, &mut out);
    }
    out.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    out
}

fn extend(
    seqs: &[Vec<usize>],
    vocab: &Vocabulary,
    params: &MinerParams,
    prefix: &mut Vec<usize>,
    probs: &mut Vec<f64>,
    out: &mut Vec<(Vec<usize>, Vec<f64>)>,
) {
    if prefix.len() >= params.max_len {
        return;
    }
    let last = vocab.event(*prefix.last().unwrap()).unwrap().clone();
    for e in 0..vocab.len() {
        if prefix.contains(&e) {
            continue;
        }
        if params.causality_filter && !causality_ok(&last, vocab.event(e).unwrap()) {
            continue;
        }
        let Some(p) = scan_conditional(seqs, prefix, e) else { continue };
        if p < params.theta_prime {
            continue;
        }
        prefix.push(e);
        probs.push(p);
        if p >= params.theta {
            out.push((prefix.clone(), probs.clone()));
        }
        extend(seqs, vocab, params, prefix, probs, out);
        probs.pop();
        prefix.pop();
    }
}

/// Naive execution enumerator: explore every firing sequence by marking
/// semantics (no chain pruning, no memoization), stop a path at the end
/// condition, and keep the event sequences whose firing sequences satisfy
/// the chain conditions (initial coverage, stepwise postset coverage).
pub fn oracle_executions(flow: &Flow, depth_limit: usize) -> BTreeSet<Vec<EventType>> {
    let mut out = BTreeSet::new();
    let mut firing: Vec<String> = Vec::new();
    explore(flow, &flow.initial_marking.clone(), &mut firing, depth_limit, &mut out);
    out
}

fn explore(
    flow: &Flow,
    marking: &flowmine::flow::Marking,
    firing: &mut Vec<String>,
    depth_limit: usize,
    out: &mut BTreeSet<Vec<EventType>>,
) {
    if firing.len() >= depth_limit {
        return;
    }
    for t in flow.enabled(marking).unwrap() {
        let next = flow.fire(marking, &t.id).unwrap();
        firing.push(t.id.clone());
        if t.postset.iter().all(|p| flow.end_marking.contains(p)) {
            if chain_conditions_hold(flow, firing) {
                let events: Vec<EventType> =
                    firing.iter().map(|id| flow.labeling[id].clone()).collect();
                out.insert(events);
            }
        } else {
            explore(flow, &next, firing, depth_limit, out);
        }
        firing.pop();
    }
}

fn chain_conditions_hold(flow: &Flow, firing: &[String]) -> bool {
    let transitions: Vec<_> = firing.iter().map(|id| flow.transition(id).unwrap()).collect();
    let first = transitions.first().unwrap();
    if !flow.initial_marking.iter().all(|p| first.preset.contains(p)) {
        return false;
    }
    transitions
        .windows(2)
        .all(|pair| pair[1].preset.iter().all(|p| pair[0].postset.contains(p)))
}
