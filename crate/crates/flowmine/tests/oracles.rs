//! Dual-route checks: the implementation against naive brute-force
//! enumerators on randomized inputs.

mod common;

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flowmine::event::EventType;
use flowmine::flow::{Flow, Marking, Transition, DEFAULT_MAX_STEPS};
use flowmine::miner::{mine, MinerParams, ModelSuite};
use flowmine::seq_model::{train_models, AnyModel, Hyperparams, ModelKind};
use flowmine::trace::{EventInstance, Trace, Vocabulary};

use common::{oracle_executions, oracle_mine};

/// Random branching chain net: junction places connected by 1..=3 parallel
/// paths of 1..=3 transitions each. Acyclic, single-token, well-formed.
fn random_chain_flow(rng: &mut ChaCha8Rng, junctions: usize) -> Flow {
    let comps = ["A", "B", "C", "D"];
    let mut places: Vec<String> = (0..=junctions).map(|i| format!("j{i}")).collect();
    let mut transitions = Vec::new();
    let mut labeling = std::collections::BTreeMap::new();
    let mut fresh = 0usize;
    let mut t_id = 0usize;

    for j in 0..junctions {
        let n_paths = rng.random_range(1..=3);
        for _ in 0..n_paths {
            let hops = rng.random_range(1..=3);
            let mut from = format!("j{j}");
            for h in 0..hops {
                let to = if h == hops - 1 {
                    format!("j{}", j + 1)
                } else {
                    fresh += 1;
                    let p = format!("q{fresh}");
                    places.push(p.clone());
                    p
                };
                let id = format!("t{t_id}");
                t_id += 1;
                transitions.push(Transition::new(id.clone(), [from.clone()], [to.clone()]));
                let src = comps[rng.random_range(0..comps.len())];
                let dest = comps[rng.random_range(0..comps.len())];
                labeling.insert(
                    id,
                    EventType::new(src, dest, format!("m{}", rng.random_range(0..6))).unwrap(),
                );
                from = to;
            }
        }
    }

    Flow {
        name: "random_chain".into(),
        places: places.into_iter().collect(),
        transitions,
        labeling,
        initial_marking: Marking::new(["j0".to_string()]),
        end_marking: Marking::new([format!("j{junctions}")]),
    }
}

#[test]
fn enumeration_matches_naive_search_on_random_acyclic_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240811);
    for case in 0..60 {
        let junctions = rng.random_range(1..=3);
        let flow = random_chain_flow(&mut rng, junctions);
        let fast: BTreeSet<Vec<EventType>> = flow
            .enumerate_executions(DEFAULT_MAX_STEPS)
            .unwrap()
            .into_iter()
            .map(|e| e.events)
            .collect();
        let naive = oracle_executions(&flow, DEFAULT_MAX_STEPS);
        assert_eq!(fast, naive, "case {case}: flow {flow:?}");
    }
}

#[test]
fn enumerated_firing_sequences_satisfy_the_chain_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let junctions = rng.random_range(1..=3);
        let flow = random_chain_flow(&mut rng, junctions);
        for exec in flow.enumerate_executions(DEFAULT_MAX_STEPS).unwrap() {
            let ts: Vec<&Transition> =
                exec.firings.iter().map(|id| flow.transition(id).unwrap()).collect();
            assert!(flow.initial_marking.iter().all(|p| ts[0].preset.contains(p)));
            assert!(ts
                .windows(2)
                .all(|pair| pair[1].preset.iter().all(|p| pair[0].postset.contains(p))));
            assert!(ts.last().unwrap().postset.iter().all(|p| flow.end_marking.contains(p)));
            assert_eq!(exec.events.len(), exec.firings.len());
        }
    }
}

/// Random trace over a small component alphabet; singleton steps.
fn random_corpus(rng: &mut ChaCha8Rng) -> (Vec<Trace>, Vocabulary) {
    let comps = ["A", "B", "C", "D", "E"];
    let n_types = rng.random_range(3..=8);
    let types: Vec<EventType> = (0..n_types)
        .map(|i| {
            EventType::new(
                comps[rng.random_range(0..comps.len())],
                comps[rng.random_range(0..comps.len())],
                format!("c{i}"),
            )
            .unwrap()
        })
        .collect();
    let n_traces = rng.random_range(1..=3);
    let mut traces = Vec::new();
    for _ in 0..n_traces {
        let len = rng.random_range(6..=60);
        let steps: Vec<Vec<EventInstance>> = (0..len)
            .map(|_| {
                vec![EventInstance::new(types[rng.random_range(0..types.len())].clone(), None)]
            })
            .collect();
        traces.push(Trace::new(steps));
    }
    let vocab = Vocabulary::build(traces.iter());
    (traces, vocab)
}

#[test]
fn count_model_mining_matches_the_window_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..15 {
        let (traces, vocab) = random_corpus(&mut rng);
        let seqs: Vec<Vec<usize>> =
            traces.iter().map(|t| vocab.encode(&t.linearize())).collect();
        let max_seq = seqs.iter().map(|s| s.len()).max().unwrap();
        let max_len = 4.min(max_seq);
        if max_len < 2 {
            continue;
        }
        let models: Vec<AnyModel> = train_models(
            &seqs,
            vocab.len(),
            max_len,
            ModelKind::Count,
            &Hyperparams::default(),
            0,
            1,
        )
        .unwrap();
        let suite: ModelSuite<'_> = models.iter().map(|m| m.as_dyn()).collect();

        for (theta, theta_prime, causality) in [
            (0.3, 0.3, false),
            (0.3, 0.1, false),
            (0.5, 0.2, true),
        ] {
            let params = MinerParams {
                theta,
                theta_prime,
                max_len,
                causality_filter: causality,
                initiating_filter: false,
            };
            let mined = mine(&suite, &vocab, &params, None).unwrap();
            let mined_set: Vec<(Vec<usize>, Vec<f64>)> = mined
                .iter()
                .map(|p| {
                    (
                        p.events.iter().map(|e| vocab.index_of(e).unwrap()).collect(),
                        p.step_probs.clone(),
                    )
                })
                .collect();
            let oracle = oracle_mine(&seqs, &vocab, &params, None);
            assert_eq!(
                mined_set.len(),
                oracle.len(),
                "case {case} θ={theta} θ'={theta_prime} causality={causality}"
            );
            for ((ms, mp), (os, op)) in mined_set.iter().zip(oracle.iter()) {
                assert_eq!(ms, os, "case {case}: sequence sets differ");
                let bits_m: Vec<u64> = mp.iter().map(|x| x.to_bits()).collect();
                let bits_o: Vec<u64> = op.iter().map(|x| x.to_bits()).collect();
                assert_eq!(bits_m, bits_o, "case {case}: step probabilities differ");
            }
        }
    }
}
