//! Architecture-aware partitioning: candidate fragment sets per communication mode.

mod bisect;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::remote_op_cost;
use crate::model::{
    CommMode, Edge, Fragment, FragmentId, FragmentName, JobSpec, Platform, Precedence,
    RemotePartner, Stage,
};

use bisect::{split, WeightMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("sampling overhead overflows (k_wire = {k_wire}, k_gate = {k_gate})")]
    OverheadOverflow { k_wire: u32, k_gate: u32 },
    #[error("no classical link can carry feed-forward")]
    NoClassicalLink,
    #[error("no quantum link available for remote operations")]
    NoQuantumLink,
    #[error("plan mode {plan} does not match expansion {expected}")]
    ModeMismatch { plan: CommMode, expected: CommMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CutKind {
    Wire,
    Gate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutEdge {
    pub edge: Edge,
    pub kind: CutKind,
}

/// Remote operations needed between two parts of a QComm plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartLink {
    pub parts: (usize, usize),
    pub ops: u32,
}

/// Reconstruction metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "UPPERCASE")]
pub enum PlanMeta {
    /// `kappa` is the quasi-probability sampling overhead of the whole plan.
    Lo { kappa: f64 },
    /// Upstream to downstream part pairs.
    Locc { precedence: Vec<(usize, usize)> },
    Qcomm { remote_ops: Vec<PartLink> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub mode: CommMode,
    pub parts: Vec<Vec<u32>>,
    pub cut_edges: Vec<CutEdge>,
    pub k_wire: u32,
    pub k_gate: u32,
    pub meta: PlanMeta,
}

impl PartitionPlan {
    pub fn is_degenerate(&self) -> bool {
        self.parts.len() == 1
    }

    /// Part index of every qubit.
    pub fn part_of(&self) -> Vec<usize> {
        let n = self.parts.iter().map(Vec::len).sum();
        let mut of = vec![0; n];
        for (p, qubits) in self.parts.iter().enumerate() {
            for &q in qubits {
                of[q as usize] = p;
            }
        }
        of
    }

    pub fn crossing_weight(&self) -> u64 {
        self.cut_edges.iter().map(|c| u64::from(c.edge.weight)).sum()
    }
}

/// A surviving expansion of one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mode: CommMode,
    pub plan: PartitionPlan,
    pub fragments: Vec<Fragment>,
}

impl Candidate {
    pub fn total_cut_overhead(&self) -> f64 {
        self.fragments.iter().map(|f| f.cut_overhead).sum()
    }

    pub fn total_comm_cost(&self) -> f64 {
        self.fragments.iter().map(|f| f.comm_cost).sum()
    }
}

/// `16^k_wire * 9^k_gate`.
pub fn lo_cut_overhead(k_wire: u32, k_gate: u32) -> Result<f64, PartitionError> {
    let v = pow_checked(16.0, k_wire) * pow_checked(9.0, k_gate);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PartitionError::OverheadOverflow { k_wire, k_gate })
    }
}

/// `4^k_wire` for classically assisted wire cuts.
pub fn locc_cut_overhead(k_wire: u32) -> Result<f64, PartitionError> {
    let v = pow_checked(4.0, k_wire);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PartitionError::OverheadOverflow { k_wire, k_gate: 0 })
    }
}

fn pow_checked(base: f64, k: u32) -> f64 {
    match i32::try_from(k) {
        Ok(k) => base.powi(k),
        Err(_) => f64::INFINITY,
    }
}

/// Finds a capacity-feasible split of `job` for `mode`; `None` when none exists.
///
/// Jobs that fit the largest module get the degenerate one-part plan. LO and
/// LOCC split into `ceil(q / Q_max)` balanced parts; LOCC is limited to a single
/// upstream/downstream pair. QCOMM picks the fewest largest modules whose
/// capacities, less one ancilla per possible partner, hold the job, and sizes
/// each part for one of them.
pub fn find_partition(job: &JobSpec, mode: CommMode, platform: &Platform) -> Option<PartitionPlan> {
    let q = job.qubits;
    let max_cap = platform.max_capacity();
    let nodes: Vec<u32> = (0..q).collect();

    if q <= max_cap {
        return Some(PartitionPlan {
            mode,
            parts: vec![nodes],
            cut_edges: Vec::new(),
            k_wire: 0,
            k_gate: 0,
            meta: match mode {
                CommMode::Lo => PlanMeta::Lo { kappa: 1.0 },
                CommMode::Locc => PlanMeta::Locc {
                    precedence: Vec::new(),
                },
                CommMode::Qcomm => PlanMeta::Qcomm {
                    remote_ops: Vec::new(),
                },
            },
        });
    }

    let targets: Vec<u32> = match mode {
        CommMode::Lo | CommMode::Locc => {
            let p = q.div_ceil(max_cap);
            if mode == CommMode::Locc && p > 2 {
                return None;
            }
            vec![max_cap; p as usize]
        }
        CommMode::Qcomm => qcomm_targets(q, platform)?,
    };

    let w = WeightMatrix::new(q, &job.edges);
    let parts = split(&w, &nodes, &targets)?;
    let mut plan = PartitionPlan {
        mode,
        parts,
        cut_edges: Vec::new(),
        k_wire: 0,
        k_gate: 0,
        meta: PlanMeta::Lo { kappa: 1.0 },
    };
    let part_of = plan.part_of();
    let crossing: Vec<Edge> = job
        .edges
        .iter()
        .filter(|e| part_of[e.a as usize] != part_of[e.b as usize])
        .copied()
        .collect();

    match mode {
        CommMode::Lo => {
            // One cut per crossing edge: a gate cut when the pair shares a single
            // gate (9 < 16), a wire cut otherwise.
            for e in crossing {
                let kind = if e.weight == 1 {
                    CutKind::Gate
                } else {
                    CutKind::Wire
                };
                match kind {
                    CutKind::Gate => plan.k_gate += 1,
                    CutKind::Wire => plan.k_wire += 1,
                }
                plan.cut_edges.push(CutEdge { edge: e, kind });
            }
            let kappa = lo_cut_overhead(plan.k_wire, plan.k_gate).ok()?;
            plan.meta = PlanMeta::Lo { kappa };
        }
        CommMode::Locc => {
            plan.k_wire = crossing.len() as u32;
            plan.cut_edges = crossing
                .into_iter()
                .map(|edge| CutEdge {
                    edge,
                    kind: CutKind::Wire,
                })
                .collect();
            plan.meta = PlanMeta::Locc {
                precedence: vec![(0, 1)],
            };
        }
        CommMode::Qcomm => {
            let mut ops: BTreeMap<(usize, usize), u32> = BTreeMap::new();
            for e in &crossing {
                let (pa, pb) = (part_of[e.a as usize], part_of[e.b as usize]);
                *ops.entry((pa.min(pb), pa.max(pb))).or_default() += e.weight;
            }
            plan.cut_edges = crossing
                .into_iter()
                .map(|edge| CutEdge {
                    edge,
                    kind: CutKind::Gate,
                })
                .collect();
            plan.meta = PlanMeta::Qcomm {
                remote_ops: ops
                    .into_iter()
                    .map(|(parts, ops)| PartLink { parts, ops })
                    .collect(),
            };
        }
    }
    Some(plan)
}

/// Per-part size limits for a QComm split over the `p` largest modules.
fn qcomm_targets(q: u32, platform: &Platform) -> Option<Vec<u32>> {
    let mut caps: Vec<u32> = platform.modules.iter().map(|m| m.capacity).collect();
    caps.sort_unstable_by(|a, b| b.cmp(a));
    for p in 2..=caps.len() {
        let allowance = (p - 1) as u32;
        let targets: Vec<u32> = caps[..p]
            .iter()
            .map(|&c| c.saturating_sub(allowance))
            .collect();
        if targets.iter().all(|&t| t > 0) && targets.iter().map(|&t| u64::from(t)).sum::<u64>() >= u64::from(q) {
            return Some(targets);
        }
    }
    None
}

fn effective_shots(shots: u64, factor: f64) -> u64 {
    (shots as f64 * factor).ceil() as u64
}

fn cut_fragment(job: &JobSpec, id: FragmentId, stage: Stage, part: &[u32]) -> Fragment {
    Fragment {
        id,
        parent: Some(job.id.clone()),
        stage,
        qubits: part.len() as u32,
        depth: job.depth,
        shots_effective: job.shots,
        cut_overhead: 1.0,
        comm_cost: 0.0,
        remote_ops: 0,
        bell_demand: BTreeMap::new(),
        precedence_in: Vec::new(),
        partners: Vec::new(),
        data_qubits: part.len() as u32,
        two_qubit_gates: 0,
        cut_penalties: 0,
        arrival_ns: job.arrival_ns,
    }
}

fn check_mode(plan: &PartitionPlan, expected: CommMode) -> Result<(), PartitionError> {
    if plan.mode == expected {
        Ok(())
    } else {
        Err(PartitionError::ModeMismatch {
            plan: plan.mode,
            expected,
        })
    }
}

/// Local gates per part; a crossing edge is charged to the higher-index part.
fn gates_per_part(job: &JobSpec, plan: &PartitionPlan, include_crossing: bool) -> (Vec<u64>, Vec<u32>) {
    let part_of = plan.part_of();
    let mut gates = vec![0u64; plan.parts.len()];
    let mut cuts = vec![0u32; plan.parts.len()];
    for e in &job.edges {
        let (pa, pb) = (part_of[e.a as usize], part_of[e.b as usize]);
        if pa == pb {
            gates[pa] += u64::from(e.weight);
        } else if include_crossing {
            gates[pa.max(pb)] += u64::from(e.weight);
            cuts[pa.max(pb)] += 1;
        }
    }
    (gates, cuts)
}

/// LO expansion: one independent FLAT fragment per part.
pub fn expand_lo(
    job: &JobSpec,
    plan: &PartitionPlan,
    platform: &Platform,
) -> Result<Vec<Fragment>, PartitionError> {
    check_mode(plan, CommMode::Lo)?;
    if plan.is_degenerate() {
        return Ok(vec![Fragment::whole(job)]);
    }
    let overhead = lo_cut_overhead(plan.k_wire, plan.k_gate)?;
    let (gates, cuts) = gates_per_part(job, plan, true);
    Ok(plan
        .parts
        .iter()
        .enumerate()
        .map(|(i, part)| {
            let name = FragmentName {
                parent: job.id.clone(),
                stage: Stage::Flat,
                index: i as u32 + 1,
            };
            let mut f = cut_fragment(job, name.format(), Stage::Flat, part);
            f.cut_overhead = overhead;
            f.shots_effective = effective_shots(job.shots, platform.sampling_factor * overhead);
            f.two_qubit_gates = gates[i];
            f.cut_penalties = cuts[i];
            f
        })
        .collect())
}

/// LOCC expansion: an upstream/downstream pair joined by a feed-forward edge.
pub fn expand_locc(
    job: &JobSpec,
    plan: &PartitionPlan,
    platform: &Platform,
) -> Result<Vec<Fragment>, PartitionError> {
    check_mode(plan, CommMode::Locc)?;
    if plan.is_degenerate() {
        return Ok(vec![Fragment::whole(job)]);
    }
    let link = platform
        .fastest_classical_link()
        .ok_or(PartitionError::NoClassicalLink)?;
    let delay = link.sync_delay();
    let overhead = locc_cut_overhead(plan.k_wire)?;
    let (gates, cuts) = gates_per_part(job, plan, true);
    let pairs = match &plan.meta {
        PlanMeta::Locc { precedence } => precedence.clone(),
        _ => vec![(0, 1)],
    };

    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (n, &(u, v)) in pairs.iter().enumerate() {
        let index = n as u32 + 1;
        let up_id = FragmentName {
            parent: job.id.clone(),
            stage: Stage::Upstream,
            index,
        }
        .format();
        let down_id = FragmentName {
            parent: job.id.clone(),
            stage: Stage::Downstream,
            index,
        }
        .format();
        let shots = effective_shots(job.shots, platform.sampling_factor * overhead);

        let mut up = cut_fragment(job, up_id.clone(), Stage::Upstream, &plan.parts[u]);
        up.cut_overhead = overhead;
        up.shots_effective = shots;
        up.two_qubit_gates = gates[u];
        up.cut_penalties = cuts[u];

        let mut down = cut_fragment(job, down_id, Stage::Downstream, &plan.parts[v]);
        down.cut_overhead = overhead;
        down.shots_effective = shots;
        down.two_qubit_gates = gates[v];
        down.cut_penalties = cuts[v];
        down.precedence_in.push(Precedence {
            from: up_id,
            delay_ns: delay,
        });
        out.push(up);
        out.push(down);
    }
    Ok(out)
}

/// QComm expansion: one REMOTE fragment per part, annotated with its remote
/// operations, Bell-pair demand, ancillas and an optimistic link cost.
pub fn expand_qcomm(
    job: &JobSpec,
    plan: &PartitionPlan,
    platform: &Platform,
) -> Result<Vec<Fragment>, PartitionError> {
    check_mode(plan, CommMode::Qcomm)?;
    if plan.is_degenerate() {
        return Ok(vec![Fragment::whole(job)]);
    }
    let link = platform
        .cheapest_quantum_link()
        .ok_or(PartitionError::NoQuantumLink)?;
    let op_cost = remote_op_cost(link).map_err(|_| PartitionError::NoQuantumLink)?;
    let (gates, _) = gates_per_part(job, plan, false);
    let links = match &plan.meta {
        PlanMeta::Qcomm { remote_ops } => remote_ops.clone(),
        _ => Vec::new(),
    };

    let ids: Vec<FragmentId> = (0..plan.parts.len())
        .map(|i| {
            FragmentName {
                parent: job.id.clone(),
                stage: Stage::Remote,
                index: i as u32,
            }
            .format()
        })
        .collect();

    Ok(plan
        .parts
        .iter()
        .enumerate()
        .map(|(i, part)| {
            let mut f = cut_fragment(job, ids[i].clone(), Stage::Remote, part);
            for pl in links.iter().filter(|pl| pl.parts.0 == i || pl.parts.1 == i) {
                let other = if pl.parts.0 == i { pl.parts.1 } else { pl.parts.0 };
                f.partners.push(RemotePartner {
                    fragment: ids[other].clone(),
                    ops: pl.ops,
                });
            }
            f.remote_ops = f.partners.iter().map(|p| p.ops).sum();
            f.qubits += f.partners.len() as u32;
            if f.remote_ops > 0 {
                f.bell_demand.insert(link.id, f.remote_ops);
            }
            f.comm_cost = f64::from(f.remote_ops) * op_cost;
            f.shots_effective = effective_shots(job.shots, platform.sampling_factor);
            f.two_qubit_gates = gates[i];
            f
        })
        .collect())
}

/// Candidate fragment sets for every admissible mode that survive the cut
/// and communication budgets.
pub fn intercomm_modes(job: &JobSpec, platform: &Platform) -> Vec<Candidate> {
    let mut modes: Vec<CommMode> = job
        .modes
        .iter()
        .copied()
        .filter(|&m| platform.supports(m))
        .collect();
    modes.sort();
    modes.dedup();

    let mut out = Vec::new();
    for mode in modes {
        let Some(plan) = find_partition(job, mode, platform) else {
            continue;
        };
        let expanded = match mode {
            CommMode::Lo => expand_lo(job, &plan, platform),
            CommMode::Locc => expand_locc(job, &plan, platform),
            CommMode::Qcomm => expand_qcomm(job, &plan, platform),
        };
        let Ok(fragments) = expanded else { continue };
        let candidate = Candidate {
            mode,
            plan,
            fragments,
        };
        if candidate.total_cut_overhead() > platform.cut_budget {
            continue;
        }
        if candidate.total_comm_cost() > platform.comm_budget {
            continue;
        }
        if candidate.fragments.iter().any(|f| u64::from(f.remote_ops) > min_link_budget(platform)) {
            continue;
        }
        out.push(candidate);
    }
    out
}

/// Smallest Bell-pair budget over quantum links; a fragment demanding more
/// could be refused by some placement.
fn min_link_budget(platform: &Platform) -> u64 {
    platform
        .links
        .iter()
        .filter(|l| l.is_quantum())
        .map(|l| l.effective_budget())
        .min()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::platform_preset;

    fn job(id: &str, qubits: u32, edges: Vec<Edge>, modes: Vec<CommMode>) -> JobSpec {
        JobSpec {
            id: id.into(),
            qubits,
            depth: 10,
            shots: 1000,
            edges,
            modes,
            arrival_ns: 0,
        }
    }

    fn chain(n: u32, w: u32) -> Vec<Edge> {
        (0..n - 1).map(|i| Edge::new(i, i + 1, w)).collect()
    }

    #[test]
    fn overhead_laws() {
        assert_eq!(lo_cut_overhead(0, 0).unwrap(), 1.0);
        assert_eq!(lo_cut_overhead(2, 0).unwrap(), 256.0);
        assert_eq!(lo_cut_overhead(0, 3).unwrap(), 729.0);
        assert_eq!(locc_cut_overhead(0).unwrap(), 1.0);
        assert_eq!(locc_cut_overhead(2).unwrap(), 16.0);
        assert_eq!(locc_cut_overhead(3).unwrap(), 64.0);
        assert!(matches!(
            lo_cut_overhead(300, 0),
            Err(PartitionError::OverheadOverflow { .. })
        ));
        assert!(locc_cut_overhead(600).is_err());
    }

    #[test]
    fn oversized_job_gets_two_parts_on_ibm() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("10", 142, chain(142, 20), vec![CommMode::Locc]);
        let plan = find_partition(&j, CommMode::Locc, &p).unwrap();
        assert_eq!(plan.parts.len(), 2);
        assert!(plan.parts.iter().all(|part| part.len() <= 127));
        assert_eq!(plan.k_wire, 1);
    }

    #[test]
    fn small_job_is_degenerate_in_every_mode() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("s", 10, chain(10, 1), CommMode::ALL.to_vec());
        for mode in CommMode::ALL {
            let plan = find_partition(&j, mode, &p).unwrap();
            assert!(plan.is_degenerate());
            assert!(plan.cut_edges.is_empty());
        }
    }

    #[test]
    fn lo_expansion_shots_and_overhead() {
        let mut p = platform_preset("IBM_LOCC").unwrap();
        p.sampling_factor = 2.0;
        let j = job("5", 200, chain(200, 3), vec![CommMode::Lo]);
        let plan = find_partition(&j, CommMode::Lo, &p).unwrap();
        assert_eq!((plan.k_wire, plan.k_gate), (1, 0));
        let frags = expand_lo(&j, &plan, &p).unwrap();
        assert_eq!(frags.len(), 2);
        for f in &frags {
            assert_eq!(f.stage, Stage::Flat);
            assert_eq!(f.cut_overhead, 16.0);
            // 1000 shots * 2.0 sampling * 16 overhead.
            assert_eq!(f.shots_effective, 32_000);
            assert!(f.precedence_in.is_empty());
        }
        assert_eq!(frags[0].id.as_str(), "5-LO-1");
        assert_eq!(frags[1].id.as_str(), "5-LO-2");
    }

    #[test]
    fn degenerate_lo_is_the_job_itself() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("3", 4, chain(4, 1), vec![CommMode::Lo]);
        let plan = find_partition(&j, CommMode::Lo, &p).unwrap();
        let frags = expand_lo(&j, &plan, &p).unwrap();
        assert_eq!(frags, vec![Fragment::whole(&j)]);
        assert_eq!(frags[0].cut_overhead, 1.0);
    }

    #[test]
    fn locc_expansion_on_ibm() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("10", 142, chain(142, 20), vec![CommMode::Locc]);
        let plan = find_partition(&j, CommMode::Locc, &p).unwrap();
        let frags = expand_locc(&j, &plan, &p).unwrap();
        let ids: Vec<&str> = frags.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, vec!["10-U-1", "10-D-1"]);
        assert_eq!(frags[1].precedence_in.len(), 1);
        assert_eq!(frags[1].precedence_in[0].from.as_str(), "10-U-1");
        assert_eq!(frags[1].precedence_in[0].delay_ns, 2_000_000);
        assert_eq!(frags[0].cut_overhead, 4.0);
        assert!(frags[0].precedence_in.is_empty());
        // Every gate is still executed somewhere.
        assert_eq!(
            frags.iter().map(|f| f.two_qubit_gates).sum::<u64>(),
            j.two_qubit_gates()
        );
    }

    #[test]
    fn locc_zero_delays_still_create_edge() {
        let mut p = platform_preset("IBM_LOCC").unwrap();
        for l in &mut p.links {
            l.classical_latency = 0;
            l.ctrl_latency = 0;
            l.meas_latency = 0;
        }
        let j = job("z", 142, chain(142, 1), vec![CommMode::Locc]);
        let plan = find_partition(&j, CommMode::Locc, &p).unwrap();
        let frags = expand_locc(&j, &plan, &p).unwrap();
        assert_eq!(frags[1].precedence_in[0].delay_ns, 0);
    }

    #[test]
    fn locc_needs_classical_link() {
        let p = platform_preset("ATOMIC_QCOMM").unwrap();
        let j = job("q", 150, chain(150, 1), vec![CommMode::Locc]);
        let plan = find_partition(&j, CommMode::Locc, &p).unwrap();
        assert_eq!(
            expand_locc(&j, &plan, &p).unwrap_err(),
            PartitionError::NoClassicalLink
        );
    }

    #[test]
    fn qcomm_naming_and_demand() {
        let p = platform_preset("ATOMIC_QCOMM").unwrap();
        let j = job("7", 150, chain(150, 5), vec![CommMode::Qcomm]);
        let plan = find_partition(&j, CommMode::Qcomm, &p).unwrap();
        assert_eq!(plan.parts.len(), 2);
        assert_eq!(plan.crossing_weight(), 5);
        let frags = expand_qcomm(&j, &plan, &p).unwrap();
        let ids: Vec<&str> = frags.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, vec!["7_P", "7_X1"]);
        let link = p.cheapest_quantum_link().unwrap();
        for f in &frags {
            assert_eq!(f.remote_ops, 5);
            assert_eq!(f.bell_demand.get(&link.id), Some(&5));
            assert_eq!(f.ancillas(), 1);
            assert_eq!(f.comm_cost, 5.0 * remote_op_cost(link).unwrap());
            assert!(f.qubits <= 112);
        }
    }

    #[test]
    fn qcomm_degenerate_has_no_comm() {
        let p = platform_preset("IONQ_QCOMM").unwrap();
        let j = job("1", 20, chain(20, 2), vec![CommMode::Qcomm]);
        let plan = find_partition(&j, CommMode::Qcomm, &p).unwrap();
        let frags = expand_qcomm(&j, &plan, &p).unwrap();
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].remote_ops, 0);
        assert_eq!(frags[0].comm_cost, 0.0);
    }

    #[test]
    fn ionq_142_needs_six_modules() {
        let p = platform_preset("IONQ_QCOMM").unwrap();
        let j = job("10", 142, chain(142, 4), vec![CommMode::Qcomm]);
        let cands = intercomm_modes(&j, &p);
        let q = cands.iter().find(|c| c.mode == CommMode::Qcomm).unwrap();
        assert!(q.fragments.len() >= 5);
        assert_eq!(q.fragments.len(), 6);
        assert_eq!(q.fragments.iter().map(|f| f.data_qubits).sum::<u32>(), 142);
    }

    #[test]
    fn lo_with_three_wire_cuts_is_pruned() {
        let p = platform_preset("IBM_LOCC").unwrap();
        // Chords (i, i + 71) force any split with both sides >= 15 to cross many edges.
        let mut edges = chain(142, 2);
        edges.extend((0..71).map(|i| Edge::new(i, i + 71, 2)));
        let j = job("x", 142, edges, vec![CommMode::Lo]);
        let plan = find_partition(&j, CommMode::Lo, &p).unwrap();
        assert!(plan.k_wire >= 3);
        assert!(lo_cut_overhead(plan.k_wire, plan.k_gate).unwrap() >= 4096.0);
        assert!(intercomm_modes(&j, &p).is_empty());
    }

    #[test]
    fn fitting_job_keeps_degenerate_candidate() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("f", 30, chain(30, 1), CommMode::ALL.to_vec());
        let cands = intercomm_modes(&j, &p);
        assert!(!cands.is_empty());
        assert!(cands.iter().any(|c| c.fragments == vec![Fragment::whole(&j)]));
    }
}
