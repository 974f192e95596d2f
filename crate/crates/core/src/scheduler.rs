//! Greedy grouping, timed placement, the improvement loop and the
//! round-robin baseline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{
    check_group_feasible, fragment_runtime, group_cost, schedule_objective, CostError,
};
use crate::model::{
    CostWeights, Fragment, FragmentId, FragmentName, FragmentPool, Group, JobId, JobSpec, LinkId,
    LinkProfile, ModuleId, ModuleProfile, Nanos, Omission, Placement, Platform, RealizedPrecedence, Reservation,
    Schedule, ScheduleEntry, Stage,
};
use crate::partition::{intercomm_modes, Candidate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("unit {0} fits no module")]
    UnplaceableUnit(FragmentId),
    #[error("{fragment} is mapped before its predecessor {predecessor}")]
    UnresolvedPredecessor {
        fragment: FragmentId,
        predecessor: FragmentId,
    },
    #[error("parts of job {job} share module {module}")]
    GangConflict { job: JobId, module: ModuleId },
    #[error("no quantum link between {0} and {1}")]
    MissingLink(ModuleId, ModuleId),
    #[error("invalid scheduler configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Policy {
    Interq,
    SerialRr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub weights: CostWeights,
    pub policy: Policy,
    pub max_improvement_rounds: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            policy: Policy::Interq,
            max_improvement_rounds: 64,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        if self.max_improvement_rounds == 0 {
            return Err(SchedulerError::InvalidConfig(
                "max_improvement_rounds must be at least 1".into(),
            ));
        }
        self.weights
            .validate()
            .map_err(|e| SchedulerError::InvalidConfig(e.to_string()))
    }
}

/// Module and link occupancy left by earlier plans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceState {
    pub module_free: BTreeMap<ModuleId, Nanos>,
    pub link_reservations: BTreeMap<LinkId, Vec<Reservation>>,
}

impl ResourceState {
    /// State after executing `s` on top of `self`.
    pub fn after(&self, s: &Schedule) -> Self {
        let mut next = self.clone();
        for e in &s.entries {
            let free = next.module_free.entry(e.group.module).or_default();
            *free = (*free).max(e.end_ns());
        }
        for (l, rs) in &s.link_reservations {
            let list = next.link_reservations.entry(*l).or_default();
            for r in rs {
                if !list.contains(r) {
                    list.push(r.clone());
                }
            }
        }
        next
    }
}

/// Fastest runtime over the modules that can hold `f`.
fn best_runtime(f: &Fragment, platform: &Platform) -> Option<Nanos> {
    platform
        .modules
        .iter()
        .filter_map(|m| fragment_runtime(f, m).ok())
        .min()
}

/// Descending estimated runtime on the fastest feasible module, ties by id.
/// Units that fit nowhere sort first.
pub fn sort_by_runtime(units: &[Fragment], platform: &Platform) -> Vec<FragmentId> {
    let mut keyed: Vec<(Nanos, &FragmentId)> = units
        .iter()
        .map(|f| (best_runtime(f, platform).unwrap_or(Nanos::MAX), &f.id))
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    keyed.into_iter().map(|(_, id)| id.clone()).collect()
}

/// REMOTE siblings of `f` (excluding `f`).
fn siblings<'a>(f: &Fragment, pool: &'a FragmentPool) -> impl Iterator<Item = &'a Fragment> {
    let parent = f.parent.clone();
    let id = f.id.clone();
    pool.values()
        .filter(move |s| s.stage == Stage::Remote && s.parent == parent && s.id != id)
}

/// Whether the REMOTE fragment `f` may join a group on `m`: no sibling already
/// on `m`, and the still unplaced siblings can each get a distinct other module.
fn remote_admissible(
    f: &Fragment,
    m: ModuleId,
    pool: &FragmentPool,
    placement: &Placement,
    platform: &Platform,
) -> bool {
    let mut used: BTreeSet<ModuleId> = BTreeSet::from([m]);
    let mut pending: Vec<u32> = Vec::new();
    for s in siblings(f, pool) {
        match placement.get(&s.id) {
            Some(&sm) => {
                if !used.insert(sm) || platform.quantum_link_between(m, sm).is_none() {
                    return false;
                }
            }
            None => pending.push(s.qubits),
        }
    }
    let mut caps: Vec<u32> = platform
        .modules
        .iter()
        .filter(|x| !used.contains(&x.id))
        .map(|x| x.capacity)
        .collect();
    if caps.len() < pending.len() {
        return false;
    }
    pending.sort_unstable_by(|a, b| b.cmp(a));
    caps.sort_unstable_by(|a, b| b.cmp(a));
    pending.iter().zip(&caps).all(|(q, c)| q <= c)
}

/// Greedy grouping: each step packs every module first-fit from the sorted
/// pool and emits the packed group with the lowest cost. Modules are scanned
/// by ascending planned load (sum of emitted group runtimes), then id, so ties
/// go to the least loaded module.
///
/// A gated fragment becomes eligible once all its predecessors sit in
/// emitted groups. A group holds the parts of at most one distributed job and
/// never mixes them with gated or gating fragments.
pub fn partition_interq(
    units: &[Fragment],
    platform: &Platform,
    weights: &CostWeights,
) -> Result<Vec<Group>, SchedulerError> {
    let pool: FragmentPool = units.iter().map(|f| (f.id.clone(), f.clone())).collect();
    for f in units {
        if best_runtime(f, platform).is_none() {
            return Err(SchedulerError::UnplaceableUnit(f.id.clone()));
        }
    }
    let mut remaining = sort_by_runtime(units, platform);
    let mut placement = Placement::new();
    let mut emitted: BTreeSet<FragmentId> = BTreeSet::new();
    let mut groups = Vec::new();
    let mut load: BTreeMap<ModuleId, Nanos> = BTreeMap::new();

    while !remaining.is_empty() {
        let mut best: Option<Group> = None;
        let mut order: Vec<&ModuleProfile> = platform.modules.iter().collect();
        order.sort_by_key(|m| (load.get(&m.id).copied().unwrap_or(0), m.id));
        for m in order {
            let mut g = Group {
                fragments: Vec::new(),
                module: m.id,
                score: 0.0,
            };
            let mut used = 0u32;
            let mut remote_job: Option<JobId> = None;
            let mut has_staged = false;
            for id in &remaining {
                let f = &pool[id];
                if used + f.qubits > m.capacity {
                    continue;
                }
                if !f.precedence_in.iter().all(|p| emitted.contains(&p.from)) {
                    continue;
                }
                let staged = matches!(f.stage, Stage::Upstream | Stage::Downstream);
                if f.stage == Stage::Remote {
                    if remote_job.is_some()
                        || has_staged
                        || !remote_admissible(f, m.id, &pool, &placement, platform)
                    {
                        continue;
                    }
                } else if staged && remote_job.is_some() {
                    continue;
                }
                g.fragments.push(id.clone());
                if !check_group_feasible(&g, &pool, &placement, platform)?.is_feasible() {
                    g.fragments.pop();
                    continue;
                }
                used += f.qubits;
                if f.stage == Stage::Remote {
                    remote_job = Some(f.job_id());
                }
                has_staged |= staged;
            }
            if g.fragments.is_empty() {
                continue;
            }
            g.score = group_cost(&g, &pool, &placement, platform, weights, None)?.total;
            if best.as_ref().is_none_or(|b| g.score < b.score) {
                best = Some(g);
            }
        }
        let Some(g) = best else {
            return Err(SchedulerError::UnplaceableUnit(remaining[0].clone()));
        };
        let m = platform.module(g.module).expect("candidate modules exist");
        let span = g
            .fragments
            .iter()
            .filter_map(|id| fragment_runtime(&pool[id], m).ok())
            .max()
            .unwrap_or(0);
        *load.entry(g.module).or_default() += span;
        for id in &g.fragments {
            placement.insert(id.clone(), g.module);
            emitted.insert(id.clone());
        }
        remaining.retain(|id| !g.fragments.contains(id));
        groups.push(g);
    }
    Ok(groups)
}

/// Earliest start `>= ready` of a `len`-long slot that keeps concurrent
/// bookings on the link below its parallelism.
fn earliest_fit(booked: &[Reservation], parallelism: u32, ready: Nanos, len: Nanos) -> Nanos {
    let mut candidates: Vec<Nanos> = booked
        .iter()
        .map(|r| r.end_ns)
        .filter(|&e| e > ready)
        .collect();
    candidates.push(ready);
    candidates.sort_unstable();
    candidates.dedup();
    candidates
        .into_iter()
        .find(|&s| max_overlap(booked, s, s + len) < parallelism as usize)
        .expect("the last reservation end is always free")
}

fn max_overlap(booked: &[Reservation], start: Nanos, end: Nanos) -> usize {
    let hits: Vec<&Reservation> = booked
        .iter()
        .filter(|r| r.start_ns < end.max(start + 1) && r.end_ns > start)
        .collect();
    if hits.is_empty() {
        return 0;
    }
    // Concurrency peaks at some booking start inside the window.
    let mut probes: Vec<Nanos> = hits.iter().map(|r| r.start_ns.max(start)).collect();
    probes.push(start);
    probes
        .into_iter()
        .map(|t| hits.iter().filter(|r| r.start_ns <= t && r.end_ns > t).count())
        .max()
        .unwrap_or(0)
}

/// Generation slot length: `round(T_pair / p_succ)`.
pub fn expected_generation_ns(link: &LinkProfile) -> Nanos {
    (link.pair_time as f64 / link.succ_prob).round() as Nanos
}

/// Books one remote operation ready at `ready`; returns its completion time.
fn book_remote_op(
    link: &LinkProfile,
    booked: &mut Vec<Reservation>,
    ready: Nanos,
    job: &JobId,
) -> Nanos {
    let gen = expected_generation_ns(link);
    let mut request = ready;
    loop {
        let gs = earliest_fit(booked, link.parallelism, request, gen);
        booked.push(Reservation {
            start_ns: gs,
            end_ns: gs + gen,
            pairs: 1,
            job: job.clone(),
        });
        let pair_ready = gs + gen;
        let ss = if link.bell_op_time == 0 {
            pair_ready
        } else {
            earliest_fit(booked, link.parallelism, pair_ready, link.bell_op_time)
        };
        if ss - pair_ready > link.ttl {
            request = pair_ready + link.ttl;
            continue;
        }
        if link.bell_op_time > 0 {
            booked.push(Reservation {
                start_ns: ss,
                end_ns: ss + link.bell_op_time,
                pairs: 0,
                job: job.clone(),
            });
        }
        return ss + link.bell_op_time + link.corr_time;
    }
}

/// Part pairs `(a, b, ops)` of a distributed job, `a < b` by part index.
pub fn remote_channels(members: &[&Fragment]) -> Vec<(FragmentId, FragmentId, u32)> {
    let index = |id: &FragmentId| FragmentName::parse(id.as_str()).map_or(0, |n| n.index);
    let mut out = Vec::new();
    for f in members {
        for p in &f.partners {
            if index(&f.id) < index(&p.fragment) {
                out.push((f.id.clone(), p.fragment.clone(), p.ops));
            }
        }
    }
    out.sort_by_key(|(a, b, _)| (index(a), index(b)));
    out
}

/// Timed placement of `groups` in order. Groups holding the parts of one
/// distributed job start together; their remote operations run serially per
/// part pair over the direct link.
pub fn map_groups(
    groups: &[Group],
    units: &[Fragment],
    platform: &Platform,
    state: &ResourceState,
) -> Result<Schedule, SchedulerError> {
    let pool: FragmentPool = units.iter().map(|f| (f.id.clone(), f.clone())).collect();
    let frag = |id: &FragmentId| {
        pool.get(id)
            .ok_or_else(|| SchedulerError::Cost(CostError::UnknownFragment(id.clone())))
    };

    let mut gang_of: BTreeMap<JobId, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        for id in &g.fragments {
            let f = frag(id)?;
            if f.stage == Stage::Remote {
                gang_of.entry(f.job_id()).or_default().push(i);
            }
        }
    }

    let mut module_free = state.module_free.clone();
    let mut links = state.link_reservations.clone();
    let mut ends: BTreeMap<FragmentId, Nanos> = BTreeMap::new();
    let mut mapped = vec![false; groups.len()];
    let mut schedule = Schedule::default();

    for i in 0..groups.len() {
        if mapped[i] {
            continue;
        }
        let gang_job = groups[i]
            .fragments
            .iter()
            .filter_map(|id| pool.get(id))
            .find(|f| f.stage == Stage::Remote)
            .map(Fragment::job_id);
        let members: Vec<usize> = match &gang_job {
            Some(j) => gang_of[j].clone(),
            None => vec![i],
        };
        let mut seen = BTreeSet::new();
        for &k in &members {
            if !seen.insert(groups[k].module) {
                return Err(SchedulerError::GangConflict {
                    job: gang_job.clone().expect("gangs have a job"),
                    module: groups[k].module,
                });
            }
        }

        let mut releases = Vec::with_capacity(members.len());
        let mut start = 0;
        for &k in &members {
            let g = &groups[k];
            let mut release = module_free.get(&g.module).copied().unwrap_or(0);
            for id in &g.fragments {
                let f = frag(id)?;
                release = release.max(f.arrival_ns);
                for p in &f.precedence_in {
                    let Some(&end) = ends.get(&p.from) else {
                        return Err(SchedulerError::UnresolvedPredecessor {
                            fragment: id.clone(),
                            predecessor: p.from.clone(),
                        });
                    };
                    start = start.max(end + p.delay_ns);
                }
            }
            start = start.max(release);
            releases.push(release);
        }

        // Remote phase, serial per part pair.
        let mut remote_done: BTreeMap<FragmentId, Nanos> = BTreeMap::new();
        if let Some(job) = &gang_job {
            let parts: Vec<&Fragment> = members
                .iter()
                .flat_map(|&k| groups[k].fragments.iter())
                .filter_map(|id| pool.get(id))
                .filter(|f| f.stage == Stage::Remote && &f.job_id() == job)
                .collect();
            let module_of: BTreeMap<&FragmentId, ModuleId> = members
                .iter()
                .flat_map(|&k| groups[k].fragments.iter().map(move |id| (id, groups[k].module)))
                .collect();
            for (a, b, ops) in remote_channels(&parts) {
                let (ma, mb) = (module_of[&a], module_of[&b]);
                let link = platform
                    .quantum_link_between(ma, mb)
                    .ok_or(SchedulerError::MissingLink(ma, mb))?;
                let booked = links.entry(link.id).or_default();
                let mut t = start;
                for _ in 0..ops {
                    t = book_remote_op(link, booked, t, job);
                }
                for f in [a, b] {
                    let e = remote_done.entry(f).or_insert(start);
                    *e = (*e).max(t);
                }
            }
        }

        for (&k, release) in members.iter().zip(releases) {
            let g = &groups[k];
            let m = platform
                .module(g.module)
                .ok_or(CostError::UnknownModule(g.module))?;
            let mut fragment_ends = Vec::with_capacity(g.fragments.len());
            for id in &g.fragments {
                let f = frag(id)?;
                let begin = remote_done.get(id).copied().unwrap_or(start);
                let end = begin + fragment_runtime(f, m)?;
                ends.insert(id.clone(), end);
                fragment_ends.push((id.clone(), end));
                for p in &f.precedence_in {
                    schedule.precedence_edges.push(RealizedPrecedence {
                        from: p.from.clone(),
                        to: id.clone(),
                        delay_ns: p.delay_ns,
                    });
                }
                schedule.fragments.push(f.clone());
            }
            let entry = ScheduleEntry {
                group: g.clone(),
                start_ns: start,
                release_ns: release,
                fragment_ends,
            };
            module_free.insert(g.module, entry.end_ns());
            schedule.entries.push(entry);
            mapped[k] = true;
        }
    }

    for (l, rs) in links {
        let before = state.link_reservations.get(&l).map_or(0, Vec::len);
        let mut new: Vec<Reservation> = rs[before..].to_vec();
        if !new.is_empty() {
            new.sort_by_key(|r| (r.start_ns, r.end_ns));
            schedule.link_reservations.insert(l, new);
        }
    }
    Ok(schedule)
}

/// One accepted repartitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedStep {
    pub job: JobId,
    pub mode: crate::model::CommMode,
    pub z_before: f64,
    pub z_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterqOutcome {
    pub schedule: Schedule,
    pub objective: f64,
    /// Objective of the seeded schedule followed by every accepted value.
    pub z_trace: Vec<f64>,
    pub steps: Vec<AcceptedStep>,
    pub rounds: u32,
}

struct Planner<'a> {
    platform: &'a Platform,
    config: &'a SchedulerConfig,
    state: &'a ResourceState,
}

impl Planner<'_> {
    fn evaluate(&self, units: &[Fragment]) -> Result<(Schedule, f64), SchedulerError> {
        let groups = partition_interq(units, self.platform, &self.config.weights)?;
        let s = map_groups(&groups, units, self.platform, self.state)?;
        let z = schedule_objective(&s, self.platform, &self.config.weights)?;
        Ok((s, z))
    }
}

fn flatten(order: &[JobId], current: &BTreeMap<JobId, Vec<Fragment>>) -> Vec<Fragment> {
    order
        .iter()
        .filter_map(|j| current.get(j))
        .flatten()
        .cloned()
        .collect()
}

/// The improvement loop on a fresh platform.
pub fn schedule_interq(
    queue: &[JobSpec],
    platform: &Platform,
    config: &SchedulerConfig,
) -> Result<InterqOutcome, SchedulerError> {
    schedule_interq_with(queue, platform, config, &ResourceState::default())
}

/// The improvement loop on top of existing module and link occupancy.
///
/// Jobs wider than every module are seeded with a candidate in the platform's
/// own communication mode, else the first one that schedules; those without
/// any surviving candidate are reported as omitted.
/// Each round rebuilds the schedule, then scans jobs by descending width and
/// accepts the first candidate that strictly lowers the objective.
pub fn schedule_interq_with(
    queue: &[JobSpec],
    platform: &Platform,
    config: &SchedulerConfig,
    state: &ResourceState,
) -> Result<InterqOutcome, SchedulerError> {
    config.validate()?;
    let planner = Planner {
        platform,
        config,
        state,
    };
    let order: Vec<JobId> = queue.iter().map(|j| j.id.clone()).collect();
    let jobs: BTreeMap<JobId, &JobSpec> = queue.iter().map(|j| (j.id.clone(), j)).collect();
    let mut scan: Vec<&JobSpec> = queue.iter().collect();
    scan.sort_by(|a, b| b.qubits.cmp(&a.qubits).then_with(|| a.id.cmp(&b.id)));

    let max_cap = platform.max_capacity();
    let mut current: BTreeMap<JobId, Vec<Fragment>> = BTreeMap::new();
    let mut omitted = Vec::new();
    let mut candidates: BTreeMap<JobId, Vec<Candidate>> = BTreeMap::new();
    for j in queue.iter().filter(|j| j.qubits <= max_cap) {
        current.insert(j.id.clone(), vec![Fragment::whole(j)]);
    }

    for j in scan.iter().filter(|j| j.qubits > max_cap) {
        let cands = intercomm_modes(j, platform);
        let mut ranked: Vec<&Candidate> = cands.iter().collect();
        ranked.sort_by_key(|c| c.mode != platform.comm_mode);
        let seed = ranked.into_iter().find(|c| {
            let mut trial = current.clone();
            trial.insert(j.id.clone(), c.fragments.clone());
            planner.evaluate(&flatten(&order, &trial)).is_ok()
        });
        match seed {
            Some(c) => {
                current.insert(j.id.clone(), c.fragments.clone());
            }
            None => omitted.push(Omission {
                job: j.id.clone(),
                reason: format!(
                    "{} qubits exceed every module and no partition fits the budgets",
                    j.qubits
                ),
            }),
        }
        candidates.insert(j.id.clone(), cands);
    }

    let (mut schedule, mut z) = planner.evaluate(&flatten(&order, &current))?;
    let mut z_trace = vec![z];
    let mut steps = Vec::new();
    let mut rounds = 0;

    while rounds < config.max_improvement_rounds {
        rounds += 1;
        let mut improved = false;
        'scan: for j in &scan {
            let Some(units) = current.get(&j.id) else {
                continue;
            };
            let cands = candidates
                .entry(j.id.clone())
                .or_insert_with(|| intercomm_modes(jobs[&j.id], platform));
            for c in cands.iter() {
                if &c.fragments == units {
                    continue;
                }
                let mut trial = current.clone();
                trial.insert(j.id.clone(), c.fragments.clone());
                let Ok((s, zc)) = planner.evaluate(&flatten(&order, &trial)) else {
                    continue;
                };
                if zc < z {
                    log::debug!("job {} -> {}: objective {z} -> {zc}", j.id, c.mode);
                    steps.push(AcceptedStep {
                        job: j.id.clone(),
                        mode: c.mode,
                        z_before: z,
                        z_after: zc,
                    });
                    current = trial;
                    schedule = s;
                    z = zc;
                    z_trace.push(z);
                    improved = true;
                    break 'scan;
                }
            }
        }
        if !improved {
            break;
        }
    }

    schedule.omitted = omitted;
    Ok(InterqOutcome {
        schedule,
        objective: z,
        z_trace,
        steps,
        rounds,
    })
}

/// Round-robin baseline: one whole job per group, no cutting, no co-residency.
pub fn schedule_serial_rr(queue: &[JobSpec], platform: &Platform) -> Schedule {
    schedule_serial_rr_with(queue, platform, &ResourceState::default())
}

/// Each job goes to the first module, cycling from the one after the last
/// assignment, that can hold it. Jobs wider than every module are omitted.
pub fn schedule_serial_rr_with(
    queue: &[JobSpec],
    platform: &Platform,
    state: &ResourceState,
) -> Schedule {
    let mut module_free = state.module_free.clone();
    let mut schedule = Schedule::default();
    let n = platform.modules.len();
    let mut pointer = 0;
    for job in queue {
        let pick = (0..n)
            .map(|k| (pointer + k) % n)
            .find(|&i| platform.modules[i].capacity >= job.qubits);
        let Some(i) = pick else {
            schedule.omitted.push(Omission {
                job: job.id.clone(),
                reason: format!("{} qubits exceed every module", job.qubits),
            });
            continue;
        };
        pointer = (i + 1) % n;
        let m = &platform.modules[i];
        let f = Fragment::whole(job);
        let release = module_free.get(&m.id).copied().unwrap_or(0).max(job.arrival_ns);
        let end = release + fragment_runtime(&f, m).expect("capacity checked");
        module_free.insert(m.id, end);
        schedule.entries.push(ScheduleEntry {
            group: Group {
                fragments: vec![f.id.clone()],
                module: m.id,
                score: 0.0,
            },
            start_ns: release,
            release_ns: release,
            fragment_ends: vec![(f.id.clone(), end)],
        });
        schedule.fragments.push(f);
    }
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CommMode, Edge, LinkKind};
    use crate::workload::platform_preset;

    fn job(id: &str, qubits: u32, depth: u32) -> JobSpec {
        JobSpec {
            id: id.into(),
            qubits,
            depth,
            shots: 10,
            edges: (0..qubits.saturating_sub(1))
                .map(|i| Edge::new(i, i + 1, 1))
                .collect(),
            modes: CommMode::ALL.to_vec(),
            arrival_ns: 0,
        }
    }

    fn single_module(capacity: u32) -> Platform {
        let mut p = platform_preset("IBM_LOCC").unwrap();
        p.modules.truncate(1);
        p.modules[0].capacity = capacity;
        p.links.clear();
        p
    }

    #[test]
    fn sort_ties_by_id() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let a = job("A", 5, 5);
        let b = job("B", 5, 9);
        let c = job("C", 5, 9);
        let units: Vec<Fragment> = [&c, &a, &b].iter().map(|j| Fragment::whole(j)).collect();
        let order = sort_by_runtime(&units, &p);
        let ids: Vec<&str> = order.iter().map(FragmentId::as_str).collect();
        assert_eq!(ids, vec!["B", "C", "A"]);
        assert_eq!(sort_by_runtime(&units[..1], &p).len(), 1);
    }

    #[test]
    fn packs_three_jobs_into_one_group() {
        let p = single_module(127);
        let units: Vec<Fragment> = (0..3).map(|i| Fragment::whole(&job(&format!("j{i}"), 40, 5))).collect();
        let groups = partition_interq(&units, &p, &CostWeights::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].fragments.len(), 3);
    }

    #[test]
    fn oversized_unit_is_unplaceable() {
        let p = single_module(10);
        let units = vec![Fragment::whole(&job("w", 11, 1))];
        assert_eq!(
            partition_interq(&units, &p, &CostWeights::default()),
            Err(SchedulerError::UnplaceableUnit("w".into()))
        );
    }

    #[test]
    fn locc_pair_never_shares_a_group() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("5", 142, 3);
        let cands = intercomm_modes(&j, &p);
        let locc = cands.iter().find(|c| c.mode == CommMode::Locc).unwrap();
        let groups = partition_interq(&locc.fragments, &p, &CostWeights::default()).unwrap();
        assert_eq!(groups.len(), 2);
        for g in &groups {
            assert_eq!(g.fragments.len(), 1);
        }
    }

    #[test]
    fn identical_modules_tie_to_lowest_id() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let units = vec![Fragment::whole(&job("a", 100, 5)), Fragment::whole(&job("b", 100, 5))];
        let g1 = partition_interq(&units, &p, &CostWeights::default()).unwrap();
        let g2 = partition_interq(&units, &p, &CostWeights::default()).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1[0].module, ModuleId(0));
    }

    #[test]
    fn independent_groups_start_at_zero() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let units = vec![Fragment::whole(&job("a", 100, 5)), Fragment::whole(&job("b", 100, 5))];
        let groups = vec![
            Group {
                fragments: vec!["a".into()],
                module: ModuleId(0),
                score: 0.0,
            },
            Group {
                fragments: vec!["b".into()],
                module: ModuleId(1),
                score: 0.0,
            },
        ];
        let s = map_groups(&groups, &units, &p, &ResourceState::default()).unwrap();
        assert!(s.entries.iter().all(|e| e.start_ns == 0));
    }

    #[test]
    fn downstream_waits_for_feed_forward() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let mut j = job("10", 142, 1);
        j.shots = 40;
        let cands = intercomm_modes(&j, &p);
        let locc = cands.iter().find(|c| c.mode == CommMode::Locc).unwrap();
        let groups = partition_interq(&locc.fragments, &p, &CostWeights::default()).unwrap();
        let s = map_groups(&groups, &locc.fragments, &p, &ResourceState::default()).unwrap();
        let t = s.fragment_times();
        let (_, u_end) = t[&FragmentId::from("10-U-1")];
        let (d_start, _) = t[&FragmentId::from("10-D-1")];
        assert_eq!(d_start, u_end + 2_000_000);
    }

    #[test]
    fn downstream_before_upstream_is_rejected() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let j = job("10", 142, 1);
        let cands = intercomm_modes(&j, &p);
        let locc = cands.iter().find(|c| c.mode == CommMode::Locc).unwrap();
        let groups = vec![
            Group {
                fragments: vec!["10-D-1".into()],
                module: ModuleId(0),
                score: 0.0,
            },
            Group {
                fragments: vec!["10-U-1".into()],
                module: ModuleId(1),
                score: 0.0,
            },
        ];
        assert!(matches!(
            map_groups(&groups, &locc.fragments, &p, &ResourceState::default()),
            Err(SchedulerError::UnresolvedPredecessor { .. })
        ));
    }

    fn two_part_job(id: &str, ops: u32) -> Vec<Fragment> {
        let mk = |suffix: &str, partner: &str| Fragment {
            id: format!("{id}{suffix}").into(),
            parent: Some(id.into()),
            stage: Stage::Remote,
            qubits: 5,
            depth: 1,
            shots_effective: 1,
            cut_overhead: 1.0,
            comm_cost: 0.0,
            remote_ops: ops,
            bell_demand: BTreeMap::new(),
            precedence_in: Vec::new(),
            partners: vec![crate::model::RemotePartner {
                fragment: format!("{id}{partner}").into(),
                ops,
            }],
            data_qubits: 4,
            two_qubit_gates: 0,
            cut_penalties: 0,
            arrival_ns: 0,
        };
        vec![mk("_P", "_X1"), mk("_X1", "_P")]
    }

    fn two_module_qcomm() -> Platform {
        let mut p = platform_preset("IONQ_QCOMM").unwrap();
        p.modules.truncate(2);
        p.links.retain(|l| l.connects(ModuleId(0), ModuleId(1)));
        for m in &mut p.modules {
            m.layer_time = 1000;
            m.shot_overhead = 0;
        }
        assert_eq!(p.links[0].kind, LinkKind::Quantum);
        p
    }

    fn on(ids: &[&str], module: u32) -> Group {
        Group {
            fragments: ids.iter().map(|&s| s.into()).collect(),
            module: ModuleId(module),
            score: 0.0,
        }
    }

    #[test]
    fn remote_phase_matches_link_cost() {
        let p = two_module_qcomm();
        let units = two_part_job("j", 3);
        let groups = vec![on(&["j_P"], 0), on(&["j_X1"], 1)];
        let s = map_groups(&groups, &units, &p, &ResourceState::default()).unwrap();
        for e in &s.entries {
            assert_eq!(e.start_ns, 0);
            assert_eq!(e.end_ns(), 3 * 600_000 + 1000);
        }
        assert_eq!(s.link_reservations[&p.links[0].id].len(), 6);
    }

    #[test]
    fn shared_link_serializes_generation() {
        let p = two_module_qcomm();
        let mut state = ResourceState::default();
        // The link is busy generating for someone else until 1e6.
        state.link_reservations.insert(
            p.links[0].id,
            vec![Reservation {
                start_ns: 0,
                end_ns: 1_000_000,
                pairs: 1,
                job: "other".into(),
            }],
        );
        let units = two_part_job("j", 1);
        let groups = vec![on(&["j_P"], 0), on(&["j_X1"], 1)];
        let s = map_groups(&groups, &units, &p, &state).unwrap();
        assert_eq!(s.entries[0].end_ns(), 1_000_000 + 600_000 + 1000);
    }

    #[test]
    fn gang_on_one_module_is_a_conflict() {
        let p = two_module_qcomm();
        let units = two_part_job("j", 1);
        let groups = vec![on(&["j_P"], 0), on(&["j_X1"], 0)];
        assert!(matches!(
            map_groups(&groups, &units, &p, &ResourceState::default()),
            Err(SchedulerError::GangConflict { .. })
        ));
    }

    #[test]
    fn expired_pair_is_regenerated() {
        let mut p = two_module_qcomm();
        p.links[0].ttl = 10;
        let mut state = ResourceState::default();
        // Service slot right after the first generation is taken.
        state.link_reservations.insert(
            p.links[0].id,
            vec![Reservation {
                start_ns: 200_000,
                end_ns: 300_000,
                pairs: 0,
                job: "other".into(),
            }],
        );
        let units = two_part_job("j", 1);
        let groups = vec![on(&["j_P"], 0), on(&["j_X1"], 1)];
        let s = map_groups(&groups, &units, &p, &state).unwrap();
        let gens = s.link_reservations[&p.links[0].id]
            .iter()
            .filter(|r| r.pairs == 1)
            .count();
        assert_eq!(gens, 2);
    }

    #[test]
    fn serial_rr_semantics() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let queue: Vec<JobSpec> = (1..=8).map(|i| job(&format!("j{i}"), 20, 10)).collect();
        let s = schedule_serial_rr(&queue, &p);
        assert_eq!(s.entries.len(), 8);
        for k in 0..4 {
            assert_eq!(s.entries[k].start_ns, 0);
            assert_eq!(s.entries[k].group.module, s.entries[k + 4].group.module);
            assert_eq!(s.entries[k + 4].start_ns, s.entries[k].end_ns());
        }
        let wide = vec![job("10", 142, 3)];
        let s = schedule_serial_rr(&wide, &p);
        assert!(s.entries.is_empty());
        assert_eq!(s.omitted.len(), 1);
    }

    #[test]
    fn interq_fixed_point_equals_initial_schedule() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let queue: Vec<JobSpec> = (0..5).map(|i| job(&format!("j{i}"), 30, 10 + i)).collect();
        let out = schedule_interq(&queue, &p, &SchedulerConfig::default()).unwrap();
        let units: Vec<Fragment> = queue.iter().map(Fragment::whole).collect();
        let groups = partition_interq(&units, &p, &CostWeights::default()).unwrap();
        let initial = map_groups(&groups, &units, &p, &ResourceState::default()).unwrap();
        assert_eq!(out.schedule, initial);
        assert_eq!(out.z_trace.len(), 1);
        assert!(out.steps.is_empty());
    }

    #[test]
    fn interq_cuts_the_wide_job() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let mut queue: Vec<JobSpec> = (0..4).map(|i| job(&format!("j{i}"), 30, 10)).collect();
        let mut wide = job("10", 142, 10);
        wide.edges = (0..141).map(|i| Edge::new(i, i + 1, 20)).collect();
        queue.push(wide);
        let out = schedule_interq(&queue, &p, &SchedulerConfig::default()).unwrap();
        assert!(out.schedule.omitted.is_empty());
        let ids: BTreeSet<&str> = out.schedule.fragments.iter().map(|f| f.id.as_str()).collect();
        assert!(ids.contains("10-U-1") && ids.contains("10-D-1"));
        assert_eq!(out.schedule.scheduled_jobs().len(), 5);
    }

    #[test]
    fn zero_rounds_is_invalid() {
        let cfg = SchedulerConfig {
            max_improvement_rounds: 0,
            ..SchedulerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
