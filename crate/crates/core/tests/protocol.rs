use std::collections::BTreeSet;

use benes_onoc::circuit::{MessageState, Simulation};
use benes_onoc::routing::{bcra_path, enumerate_paths, Algorithm, TieBreak};
use benes_onoc::topology::{build_network, LinkId};
use benes_onoc::{SimConfig, SimTime};
use proptest::prelude::*;

fn cfg(k: u32, algorithm: Algorithm) -> SimConfig {
    SimConfig {
        k,
        algorithm,
        retry_limit: 0,
        ..Default::default()
    }
}

fn traced(cfg: &SimConfig) -> Simulation {
    Simulation::idle(cfg).unwrap().with_trace().with_audit(true)
}

fn lines_of<'a>(trace: &'a [String], kind: &str) -> Vec<&'a str> {
    trace
        .iter()
        .filter(|l| l.split(' ').nth(1) == Some(kind))
        .map(String::as_str)
        .collect()
}

fn time_of(line: &str) -> u64 {
    line.split(' ').next().unwrap().parse().unwrap()
}

#[test]
fn bcra_reserves_the_label_path() {
    let mut sim = traced(&cfg(4, Algorithm::Bcra));
    sim.inject(9, 13, 64, SimTime::ZERO).unwrap();
    sim.run_to_drain().unwrap();
    let trace = sim.outcome().trace.unwrap();

    let oracle = bcra_path(&build_network(4).unwrap(), 9, 13).unwrap();
    let hops = lines_of(&trace, "setup-hop");
    assert_eq!(hops.len(), 7);
    for (line, (sw, port)) in hops.iter().zip(&oracle.hops) {
        assert!(
            line.contains(&format!("switch={sw} port={port}")),
            "{line} vs {sw}.{port}"
        );
    }
    assert_eq!(sim.outcome().summary.received, 1);
}

/// Circuit 8 -> 5 on its BCRA route holds link L(1,9), which the BCRA route
/// of 9 -> 13 needs but several of its other routes avoid.
fn blocker() -> (Vec<LinkId>, benes_onoc::routing::Path) {
    let net = build_network(4).unwrap();
    let pinned = bcra_path(&net, 8, 5).unwrap();
    (pinned.links(&net), pinned)
}

#[test]
fn blocker_overlaps_some_but_not_all_routes() {
    let net = build_network(4).unwrap();
    let (held, _) = blocker();
    let held: BTreeSet<_> = held.into_iter().collect();
    let paths = enumerate_paths(&net, 9, 13).unwrap();
    let conflicting = paths
        .iter()
        .filter(|p| p.links(&net).iter().any(|l| held.contains(l)))
        .count();
    assert!(
        conflicting > 0 && conflicting < paths.len(),
        "{conflicting} of {}",
        paths.len()
    );
    let bcra = bcra_path(&net, 9, 13).unwrap();
    assert!(bcra.links(&net).iter().any(|l| held.contains(l)));
}

#[test]
fn dra_routes_around_an_occupied_link() {
    let (held, pinned) = blocker();
    let mut reached = BTreeSet::new();
    for tie_break in [TieBreak::Label, TieBreak::Random] {
        for seed in 0..32 {
            let c = SimConfig {
                seed,
                dra_tie_break: tie_break,
                ..cfg(4, Algorithm::Dra)
            };
            let mut sim = traced(&c);
            sim.pin_path(&pinned).unwrap();
            sim.inject(9, 13, 64, SimTime::ZERO).unwrap();
            sim.run_to_drain().unwrap();
            let out = sim.outcome();
            assert_eq!(
                (out.summary.received, out.summary.dropped),
                (1, 0),
                "seed {seed}"
            );
            let route: Vec<String> = lines_of(out.trace.as_ref().unwrap(), "setup-hop")
                .iter()
                .map(|l| l.rsplit(' ').next().unwrap().to_string())
                .collect();
            assert!(route
                .iter()
                .all(|l| !held.iter().any(|h| format!("link={h}") == *l)));
            reached.insert(route);
            // only the pinned circuit is left holding links
            assert_eq!(sim.reserved_link_count(), held.len());
        }
    }
    assert!(
        reached.len() > 1,
        "random tie-breaks should reach more than one route"
    );
}

#[test]
fn bcra_blocks_on_the_occupied_link() {
    let (held, pinned) = blocker();
    let mut sim = traced(&cfg(4, Algorithm::Bcra));
    sim.pin_path(&pinned).unwrap();
    sim.inject(9, 13, 64, SimTime::ZERO).unwrap();
    sim.run_to_drain().unwrap();
    let out = sim.outcome();
    assert_eq!((out.summary.received, out.summary.dropped), (0, 1));
    let trace = out.trace.unwrap();
    let block = lines_of(&trace, "block");
    assert_eq!(block.len(), 1);
    assert!(block[0].ends_with("switch=R(4,1)"), "{}", block[0]);
    assert_eq!(sim.reserved_link_count(), held.len());
}

#[test]
fn single_ejection_link_admits_one_circuit() {
    // two sources racing for destination 3 of a 4x4 network
    for algorithm in [Algorithm::Dra, Algorithm::Bcra] {
        let mut sim = traced(&cfg(2, algorithm));
        sim.inject(0, 3, 64, SimTime::ZERO).unwrap();
        sim.inject(1, 3, 64, SimTime::ZERO).unwrap();
        sim.run_to_drain().unwrap();
        let s = sim.outcome().summary;
        assert_eq!((s.received, s.dropped), (1, 1), "{algorithm}");
        assert_eq!(sim.reserved_link_count(), 0);
    }
}

#[test]
fn retry_requeues_once_after_backoff() {
    let c = SimConfig {
        retry_limit: 1,
        retry_backoff: SimTime::from_ns(200),
        ..cfg(2, Algorithm::Bcra)
    };
    let mut sim = traced(&c);
    sim.inject(0, 3, 64, SimTime::ZERO).unwrap();
    sim.inject(1, 3, 64, SimTime::ZERO).unwrap();
    sim.run_to_drain().unwrap();
    let out = sim.outcome();
    assert_eq!((out.summary.received, out.summary.dropped), (2, 0));

    let trace = out.trace.unwrap();
    let blocks = lines_of(&trace, "block");
    let retries = lines_of(&trace, "retry");
    assert_eq!((blocks.len(), retries.len()), (1, 1));
    let loser = sim.messages().iter().find(|m| m.attempts == 2).unwrap();
    assert!(retries[0].contains(&format!("msg={}", loser.id)));

    // release of the prefix ends at the source, then the backoff starts
    let freed = lines_of(&trace, "release")
        .into_iter()
        .filter(|l| time_of(l) >= time_of(blocks[0]))
        .filter(|l| l.contains(&format!("link=L(0,{})", loser.src)))
        .map(time_of)
        .next()
        .unwrap();
    assert_eq!(time_of(retries[0]), freed + 200_000);
}

#[test]
fn retries_exhausted_drop_the_message() {
    let c = SimConfig {
        retry_limit: 1,
        retry_backoff: SimTime::from_ns(1),
        ..cfg(2, Algorithm::Bcra)
    };
    let mut sim = traced(&c);
    sim.inject(0, 3, 64, SimTime::ZERO).unwrap();
    sim.inject(1, 3, 64, SimTime::ZERO).unwrap();
    sim.run_to_drain().unwrap();
    let s = sim.outcome().summary;
    assert_eq!((s.received, s.dropped), (1, 1));
    let dropped = sim
        .messages()
        .iter()
        .find(|m| m.state == MessageState::Dropped)
        .unwrap();
    assert_eq!(dropped.attempts, 2);
    assert_eq!(sim.reserved_link_count(), 0);
}

#[test]
fn back_to_back_messages_serialize_at_the_source() {
    let mut sim = traced(&cfg(4, Algorithm::Dra));
    sim.inject(2, 7, 64, SimTime::ZERO).unwrap();
    sim.inject(2, 11, 64, SimTime::ZERO).unwrap();
    sim.run_to_drain().unwrap();
    let trace = sim.outcome().trace.unwrap();

    let starts = lines_of(&trace, "setup-start");
    assert_eq!(starts.len(), 2);
    let injection_freed = lines_of(&trace, "release")
        .into_iter()
        .find(|l| l.contains("circuit=0 link=L(0,2)"))
        .unwrap();
    assert_eq!(time_of(starts[1]), time_of(injection_freed));
    // 20.48 + 8 + 8 + 40.96 + 7 ns for the first message
    assert_eq!(time_of(starts[1]), 84_440);
    assert_eq!(sim.outcome().summary.received, 2);
}

#[test]
fn paired_streams_dra_delivers_a_superset() {
    // source 8 holds its circuit throughout while source 9 streams to 13
    let (_, pinned) = blocker();
    let schedule: Vec<u64> = (0..40)
        .map(|i| i * 37_000 + (i * i * 911) % 5_000)
        .collect();
    let run = |algorithm| {
        let mut sim = Simulation::idle(&cfg(4, algorithm))
            .unwrap()
            .with_audit(true);
        sim.pin_path(&pinned).unwrap();
        for &t in &schedule {
            sim.inject(9, 13, 64, SimTime::from_ps(t)).unwrap();
        }
        sim.run_to_drain().unwrap();
        sim.messages()
            .iter()
            .filter(|m| m.state == MessageState::Delivered)
            .map(|m| m.t_gen)
            .collect::<BTreeSet<_>>()
    };
    let dra = run(Algorithm::Dra);
    let bcra = run(Algorithm::Bcra);
    assert!(bcra.is_subset(&dra));
    assert!(dra.len() > bcra.len());
}

#[test]
fn same_seed_replays_identically() {
    let c = SimConfig {
        lambda: 0.8,
        seed: 42,
        messages_per_source: 50,
        ..Default::default()
    };
    let trace = |c: &SimConfig| {
        let mut sim = Simulation::new(c).unwrap().with_trace();
        sim.run_to_drain().unwrap();
        sim.outcome().trace.unwrap()
    };
    let a = trace(&c);
    assert_eq!(a, trace(&c));
    assert_ne!(
        a,
        trace(&SimConfig {
            seed: 43,
            ..c.clone()
        })
    );
}

#[test]
fn both_algorithms_see_the_same_arrivals() {
    let arrivals = |algorithm| {
        let c = SimConfig {
            algorithm,
            lambda: 0.9,
            seed: 7,
            messages_per_source: 40,
            ..Default::default()
        };
        let mut sim = Simulation::new(&c).unwrap();
        sim.run_to_drain().unwrap();
        sim.messages()
            .iter()
            .map(|m| (m.src, m.dest, m.t_gen))
            .collect::<BTreeSet<_>>()
    };
    assert_eq!(arrivals(Algorithm::Dra), arrivals(Algorithm::Bcra));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservation_and_drain(
        k in 1u32..=3,
        lambda in 0.05f64..=1.0,
        seed in any::<u64>(),
        retry_limit in 0u32..3,
        dra in any::<bool>(),
        bytes in prop::sample::select(vec![32u64, 64, 128]),
    ) {
        let c = SimConfig {
            k,
            lambda,
            seed,
            retry_limit,
            msg_bytes: bytes,
            algorithm: if dra { Algorithm::Dra } else { Algorithm::Bcra },
            messages_per_source: 30,
            ..Default::default()
        };
        let mut sim = Simulation::new(&c).unwrap().with_audit(true);
        while sim.step().unwrap() {
            prop_assert!(sim.conservation().holds());
        }
        let out = sim.outcome();
        prop_assert_eq!(out.conservation.in_flight + out.conservation.queued, 0);
        prop_assert_eq!(sim.reserved_link_count(), 0);
        let s = out.summary;
        prop_assert_eq!(s.sent, s.received + s.dropped);
        prop_assert!(s.throughput <= lambda);
        prop_assert_eq!(s.throughput == lambda, s.dropped == 0);
    }
}
