mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use interq_core::metrics::{lpst, queue_stats};
use interq_core::partition::{find_partition, intercomm_modes, lo_cut_overhead, locc_cut_overhead};
use interq_core::scheduler::{schedule_interq, schedule_serial_rr, sort_by_runtime, SchedulerConfig};
use interq_core::sim::{run_simulation, EventKind, SimConfig};
use interq_core::workload::{
    generate_random_workload, parse_workload, platform_preset, workload_to_string, RandomWorkload,
};
use interq_core::{CommMode, Edge, Fragment, JobSpec, LinkKind, Platform};

/// Two classical-linked modules of `capacity` qubits.
fn pair_platform(capacity: u32) -> Platform {
    let mut p = platform_preset("IBM_LOCC").unwrap();
    p.modules.truncate(2);
    for m in &mut p.modules {
        m.capacity = capacity;
    }
    p.links.retain(|l| l.endpoints.0 .0 < 2 && l.endpoints.1 .0 < 2);
    p.cut_budget = 1.0e12;
    p.validate().unwrap()
}

fn job(qubits: u32, edges: Vec<Edge>) -> JobSpec {
    JobSpec {
        id: "j".into(),
        qubits,
        depth: 4,
        shots: 10,
        edges,
        modes: CommMode::ALL.to_vec(),
        arrival_ns: 0,
    }
}

/// Minimum crossing weight over every split into parts of at most `cap`.
fn brute_force_bisection(n: u32, edges: &[Edge], cap: u32) -> u64 {
    (0u32..1 << n)
        .filter(|mask| {
            let ones = mask.count_ones();
            ones <= cap && n - ones <= cap
        })
        .map(|mask| {
            edges
                .iter()
                .filter(|e| (mask >> e.a & 1) != (mask >> e.b & 1))
                .map(|e| u64::from(e.weight))
                .sum()
        })
        .min()
        .unwrap()
}

#[test]
fn ring_of_eight_splits_across_two_edges() {
    let edges: Vec<Edge> = (0..8).map(|i| Edge::new(i, (i + 1) % 8, 1)).collect();
    let p = pair_platform(4);
    let plan = find_partition(&job(8, edges.clone()), CommMode::Locc, &p).unwrap();
    assert_eq!(plan.crossing_weight(), brute_force_bisection(8, &edges, 4));
    assert_eq!(plan.crossing_weight(), 2);
}

fn small_graph() -> impl Strategy<Value = (u32, Vec<Edge>)> {
    (4u32..=10).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 1u32..=3).prop_filter_map("no loops", |(a, b, w)| {
            (a != b).then(|| Edge::new(a.min(b), a.max(b), w))
        });
        (Just(n), prop::collection::btree_set(edge, 1..=2 * n as usize))
            .prop_map(|(n, set)| {
                let mut seen = BTreeSet::new();
                let edges = set.into_iter().filter(|e| seen.insert((e.a, e.b))).collect();
                (n, edges)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lo_overhead_factorizes(kw in 0u32..=8, kg in 0u32..=8) {
        let expected = 16f64.powi(kw as i32) * 9f64.powi(kg as i32);
        prop_assert_eq!(lo_cut_overhead(kw, kg).unwrap(), expected);
        prop_assert_eq!(lo_cut_overhead(kw + 1, kg).unwrap(), 16.0 * expected);
    }

    #[test]
    fn locc_overhead_quadruples(k in 0u32..=10) {
        prop_assert_eq!(locc_cut_overhead(k + 1).unwrap(), 4.0 * locc_cut_overhead(k).unwrap());
    }

    #[test]
    fn partition_is_near_the_brute_force_bisection((n, edges) in small_graph()) {
        let cap = n.div_ceil(2);
        let p = pair_platform(cap);
        let j = job(n, edges.clone());
        prop_assume!(n > cap);
        let plan = find_partition(&j, CommMode::Locc, &p).unwrap();
        let covered: BTreeSet<u32> = plan.parts.iter().flatten().copied().collect();
        prop_assert_eq!(covered.len() as u32, n);
        prop_assert!(plan.parts.iter().all(|q| q.len() as u32 <= cap));
        let crossing: u64 = edges
            .iter()
            .filter(|e| plan.part_of()[e.a as usize] != plan.part_of()[e.b as usize])
            .map(|e| u64::from(e.weight))
            .sum();
        prop_assert_eq!(crossing, plan.crossing_weight());
        prop_assert!(crossing >= brute_force_bisection(n, &edges, cap));
    }

    #[test]
    fn candidates_conserve_qubits_and_fit((n, edges) in small_graph()) {
        let mut p = platform_preset("IONQ_QCOMM").unwrap();
        for m in &mut p.modules {
            m.capacity = 6;
        }
        p.cut_budget = 1.0e12;
        let j = job(n, edges);
        for c in intercomm_modes(&j, &p) {
            let data: u32 = c.fragments.iter().map(|f| f.data_qubits).sum();
            prop_assert_eq!(data, n);
            prop_assert!(c.fragments.iter().all(|f| f.qubits <= 6));
            prop_assert!(c.fragments.iter().all(|f| f.cut_overhead >= 1.0));
            let gates: u64 = c.fragments.iter().map(|f| f.two_qubit_gates).sum();
            let remote: u64 = c.fragments.iter().map(|f| u64::from(f.remote_ops)).sum();
            match c.mode {
                CommMode::Qcomm => prop_assert_eq!(gates + remote / 2, j.two_qubit_gates()),
                _ => prop_assert!(gates <= j.two_qubit_gates()),
            }
        }
    }

    #[test]
    fn runtime_order_ignores_input_order(seed in 0u64..1000, rot in 0usize..8) {
        let p = platform_preset("IBM_LOCC").unwrap();
        let jobs = generate_random_workload(&RandomWorkload::new(8, 2..=127, 1..=30, 10, seed));
        let mut units: Vec<Fragment> = jobs.iter().map(Fragment::whole).collect();
        let a = sort_by_runtime(&units, &p);
        units.rotate_left(rot);
        units.reverse();
        prop_assert_eq!(a, sort_by_runtime(&units, &p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schedules_are_feasible_and_complete(seed in 0u64..100_000, preset in 0usize..3) {
        let name = ["IBM_LOCC", "IONQ_QCOMM", "ATOMIC_QCOMM"][preset];
        let p = platform_preset(name).unwrap();
        let mut jobs = generate_random_workload(&RandomWorkload::new(6, 2..=160, 1..=40, 20, seed));
        for (i, j) in jobs.iter_mut().enumerate() {
            j.arrival_ns = i as u64 * 1_000_000;
        }
        let interq = schedule_interq(&jobs, &p, &SchedulerConfig::default()).unwrap();
        let rr = schedule_serial_rr(&jobs, &p);
        for s in [&interq.schedule, &rr] {
            prop_assert_eq!(common::violations(s, &p), Vec::<String>::new());
            let placed = s.scheduled_jobs();
            let omitted: BTreeSet<_> = s.omitted.iter().map(|o| o.job.clone()).collect();
            for j in &jobs {
                prop_assert!(placed.contains(&j.id) != omitted.contains(&j.id));
            }
        }
        prop_assert!(interq.z_trace.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(rr.entries.iter().all(|e| e.group.fragments.len() == 1));
    }

    #[test]
    fn simulation_respects_constraints(seed in 0u64..100_000, succ in 0.2f64..=1.0) {
        let mut p = platform_preset("IONQ_QCOMM").unwrap();
        for l in &mut p.links {
            if l.kind == LinkKind::Quantum {
                l.succ_prob = succ;
            }
        }
        let jobs = generate_random_workload(&RandomWorkload::new(4, 2..=120, 1..=20, 5, seed));
        let out = run_simulation(&jobs, &p, &SimConfig::default(), seed).unwrap();
        prop_assert_eq!(common::violations(&out.executed, &p), Vec::<String>::new());
        prop_assert!(out.trace.windows(2).all(|w| w[0].time_ns <= w[1].time_ns));
        let pairs = out.pairs;
        prop_assert_eq!(pairs.generated, pairs.consumed + pairs.expired + pairs.live);
        let done = out.trace.iter().filter(|e| e.kind == EventKind::RemoteOpDone).count() as u64;
        prop_assert_eq!(done, pairs.consumed);

        let planned = out.planned.fragment_times();
        for (id, (start, end)) in out.executed.fragment_times() {
            let (_, plan_end) = planned[&id];
            prop_assert!(end >= start);
            if succ == 1.0 {
                prop_assert_eq!(end, plan_end);
            }
        }

        let q = queue_stats(&out.trace);
        prop_assert!((q.avg_queue_length - q.avg_queue_length_replay).abs() <= 1e-9 * q.avg_queue_length.max(1.0));
        prop_assert!(q.jobs.iter().all(|t| t.total_ns == t.wait_ns + t.run_ns));
        prop_assert!(out.metrics.avg_lpst <= 0.0);
        prop_assert!(out.metrics.avg_tiif > 0.0 && out.metrics.avg_tiif <= 1.0);
    }

    #[test]
    fn workload_text_round_trips(seed in 0u64..100_000, n in 0usize..6) {
        let jobs = generate_random_workload(&RandomWorkload::new(n, 1..=40, 1..=20, 100, seed));
        prop_assert_eq!(parse_workload(&workload_to_string(&jobs)).unwrap(), jobs);
    }

    #[test]
    fn lpst_is_increasing(a in 1e-6f64..=1.0, b in 1e-6f64..=1.0) {
        prop_assume!(a < b);
        prop_assert!(lpst(a).unwrap() < lpst(b).unwrap());
    }
}
