//! Deterministic discrete-event execution of schedules.
//!
//! Modules run their groups first-in first-out in planned start order; the
//! parts of a distributed job start together. Every remote operation asks its
//! link for a Bell pair (geometric retries of `T_pair` each), then for a
//! remote-gate slot of `T_bell`, then waits `T_corr` for the correction.
//! Link requests are served FIFO up to the link's parallelism. A pair left
//! waiting past its TTL expires and is regenerated.
//!
//! Events at equal times pop in this order: `PAIR_READY`, `LINK_FREED`,
//! `REMOTE_OP_DONE`, `PAIR_EXPIRED`, `CLASSICAL_MSG_DELIVERED`,
//! `FRAGMENT_END`, `GROUP_START`, `JOB_ARRIVAL`; then by sequence number.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{fragment_runtime, remote_op_fidelity};
use crate::metrics::{report, MetricsError, MetricsReport};
use crate::model::{
    Fragment, FragmentId, FragmentPool, Group, JobId, JobSpec, LinkId, LinkProfile, ModelError,
    ModuleId, Nanos, Omission, Platform, Reservation, Schedule, ScheduleEntry, Stage,
};
use crate::scheduler::{
    remote_channels, schedule_interq_with, schedule_serial_rr_with, Policy, ResourceState,
    SchedulerConfig, SchedulerError,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("deadlock at {time_ns} ns with {pending} groups unfinished")]
    DeadlockDetected { time_ns: Nanos, pending: usize },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    PairReady,
    LinkFreed,
    RemoteOpDone,
    PairExpired,
    ClassicalMsgDelivered,
    FragmentEnd,
    GroupStart,
    JobArrival,
}

/// One trace record. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time_ns: Nanos,
    pub kind: EventKind,
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<JobId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<ModuleId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fragments: Vec<FragmentId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jobs: Vec<JobId>,
}

impl Event {
    pub fn new(time_ns: Nanos, kind: EventKind) -> Self {
        Self {
            time_ns,
            kind,
            seq: 0,
            job: None,
            group: None,
            module: None,
            link: None,
            fragments: Vec::new(),
            jobs: Vec::new(),
        }
    }
}

/// Line-delimited JSON, one event per line.
pub fn trace_to_jsonl(trace: &[Event]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// Named, independent random substreams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn substream(&self, name: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(name));
        rng
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Time until a pair is ready: attempts until success, `T_pair` each.
pub fn generate_pair(link: &LinkProfile, rng: &mut impl Rng) -> Nanos {
    let mut attempts = 1;
    while !rng.gen_bool(link.succ_prob.clamp(0.0, 1.0)) {
        attempts += 1;
    }
    attempts * link.pair_time
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueMode {
    /// Plan the whole workload once; arrivals constrain start times.
    #[default]
    Batch,
    /// Plan each arrival burst when it arrives, on top of the current state.
    EventDriven,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimConfig {
    pub scheduler: SchedulerConfig,
    pub queue_mode: QueueMode,
    /// Uniform jitter added to every arrival, drawn from the `arrivals` substream.
    pub arrival_jitter_ns: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairStats {
    pub generated: u64,
    pub consumed: u64,
    pub expired: u64,
    pub live: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub planned: Schedule,
    pub executed: Schedule,
    pub trace: Vec<Event>,
    pub metrics: MetricsReport,
    pub pairs: PairStats,
    /// Accumulated `ln F^q` of executed remote operations per job.
    pub remote_log_fidelity: BTreeMap<JobId, f64>,
    /// Objective values accepted by the improvement loop, per planning call.
    pub z_traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
enum Action {
    Plan(Vec<JobSpec>),
    Arrival(JobId),
    GroupStart(usize),
    FragmentEnd(usize, FragmentId),
    PairReady(usize),
    PairExpired(usize, u64),
    LinkFreed(usize),
    RemoteOpDone(usize),
    Delivered(FragmentId, FragmentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Request {
    Generate,
    Serve,
}

struct Pair {
    no: u64,
    consumed: bool,
}

struct Channel {
    job: JobId,
    a: FragmentId,
    b: FragmentId,
    link: LinkId,
    module_a: ModuleId,
    ops_left: u32,
    pair: Option<Pair>,
    pairs_made: u64,
}

#[derive(Default)]
struct LinkState {
    busy: u32,
    queue: VecDeque<(usize, Request)>,
}

struct Entry {
    group: Group,
    gang: Option<usize>,
    reserved: bool,
    start: Nanos,
    release: Nanos,
    ends: Vec<(FragmentId, Nanos)>,
    open: usize,
    done: bool,
}

struct Engine<'a> {
    platform: &'a Platform,
    config: &'a SimConfig,
    rng: RngStream,
    link_rngs: BTreeMap<LinkId, ChaCha8Rng>,
    now: Nanos,
    seq: u64,
    heap: BinaryHeap<Reverse<(Nanos, EventKind, u64)>>,
    pending: BTreeMap<u64, (Event, Action)>,
    trace: Vec<Event>,

    planned: Schedule,
    plan_state: ResourceState,
    z_traces: Vec<Vec<f64>>,
    pool: FragmentPool,
    entries: Vec<Entry>,
    entry_of: BTreeMap<FragmentId, usize>,
    gangs: Vec<Vec<usize>>,
    gang_started: Vec<bool>,
    module_queue: BTreeMap<ModuleId, VecDeque<usize>>,
    running: BTreeMap<ModuleId, usize>,
    idle_since: BTreeMap<ModuleId, Nanos>,
    arrived: BTreeSet<JobId>,
    successors: BTreeMap<FragmentId, Vec<(FragmentId, Nanos)>>,
    delivered: BTreeSet<(FragmentId, FragmentId)>,
    channel_wait: BTreeMap<FragmentId, usize>,
    channels: Vec<Channel>,
    links: BTreeMap<LinkId, LinkState>,
    reservations: BTreeMap<LinkId, Vec<Reservation>>,
    pairs: PairStats,
    ledger: BTreeMap<JobId, f64>,
}

impl<'a> Engine<'a> {
    fn new(platform: &'a Platform, config: &'a SimConfig, seed: u64) -> Self {
        Self {
            platform,
            config,
            rng: RngStream::new(seed),
            link_rngs: BTreeMap::new(),
            now: 0,
            seq: 0,
            heap: BinaryHeap::new(),
            pending: BTreeMap::new(),
            trace: Vec::new(),
            planned: Schedule::default(),
            plan_state: ResourceState::default(),
            z_traces: Vec::new(),
            pool: FragmentPool::new(),
            entries: Vec::new(),
            entry_of: BTreeMap::new(),
            gangs: Vec::new(),
            gang_started: Vec::new(),
            module_queue: BTreeMap::new(),
            running: BTreeMap::new(),
            idle_since: BTreeMap::new(),
            arrived: BTreeSet::new(),
            successors: BTreeMap::new(),
            delivered: BTreeSet::new(),
            channel_wait: BTreeMap::new(),
            channels: Vec::new(),
            links: BTreeMap::new(),
            reservations: BTreeMap::new(),
            pairs: PairStats::default(),
            ledger: BTreeMap::new(),
        }
    }

    fn push(&mut self, time: Nanos, mut event: Event, action: Action) {
        event.time_ns = time;
        event.seq = self.seq;
        self.heap.push(Reverse((time, event.kind, self.seq)));
        self.pending.insert(self.seq, (event, action));
        self.seq += 1;
    }

    fn link(&self, id: LinkId) -> &'a LinkProfile {
        self.platform.link(id).expect("planned links exist")
    }

    fn plan(&mut self, jobs: &[JobSpec]) -> Result<(), SimError> {
        let mut state = self.plan_state.clone();
        for m in &self.platform.modules {
            let free = state.module_free.entry(m.id).or_default();
            *free = (*free).max(self.now);
        }
        let s = match self.config.scheduler.policy {
            Policy::Interq => {
                let out = schedule_interq_with(jobs, self.platform, &self.config.scheduler, &state)?;
                self.z_traces.push(out.z_trace);
                out.schedule
            }
            Policy::SerialRr => schedule_serial_rr_with(jobs, self.platform, &state),
        };
        self.plan_state = state.after(&s);
        self.admit(&s);
        self.planned.entries.extend(s.entries.iter().cloned());
        self.planned.fragments.extend(s.fragments.iter().cloned());
        self.planned.precedence_edges.extend(s.precedence_edges.iter().cloned());
        self.planned.omitted.extend(s.omitted.iter().cloned());
        for (l, rs) in &s.link_reservations {
            self.planned
                .link_reservations
                .entry(*l)
                .or_default()
                .extend(rs.iter().cloned());
        }

        let scheduled = s.scheduled_jobs();
        for j in jobs.iter().filter(|j| scheduled.contains(&j.id)) {
            let mut e = Event::new(0, EventKind::JobArrival);
            e.job = Some(j.id.clone());
            self.push(j.arrival_ns.max(self.now), e, Action::Arrival(j.id.clone()));
        }
        Ok(())
    }

    /// Appends a plan's groups to the module queues.
    fn admit(&mut self, s: &Schedule) {
        for f in &s.fragments {
            self.pool.insert(f.id.clone(), f.clone());
            for p in &f.precedence_in {
                self.successors
                    .entry(p.from.clone())
                    .or_default()
                    .push((f.id.clone(), p.delay_ns));
            }
        }
        let base = self.entries.len();
        let mut order: Vec<usize> = (0..s.entries.len()).collect();
        order.sort_by_key(|&i| (s.entries[i].start_ns, i));
        let mut gang_of_job: BTreeMap<JobId, usize> = BTreeMap::new();
        for (i, e) in s.entries.iter().enumerate() {
            let gang = e
                .group
                .fragments
                .iter()
                .filter_map(|id| self.pool.get(id))
                .find(|f| f.stage == Stage::Remote)
                .map(|f| {
                    *gang_of_job.entry(f.job_id()).or_insert_with(|| {
                        self.gangs.push(Vec::new());
                        self.gang_started.push(false);
                        self.gangs.len() - 1
                    })
                });
            if let Some(g) = gang {
                self.gangs[g].push(base + i);
            }
            for id in &e.group.fragments {
                self.entry_of.insert(id.clone(), base + i);
            }
            self.entries.push(Entry {
                group: e.group.clone(),
                gang,
                reserved: false,
                start: 0,
                release: 0,
                ends: Vec::new(),
                open: e.group.fragments.len(),
                done: false,
            });
        }
        for i in order {
            self.module_queue
                .entry(s.entries[i].group.module)
                .or_default()
                .push_back(base + i);
        }
    }

    fn group_jobs(&self, k: usize) -> Vec<JobId> {
        let set: BTreeSet<JobId> = self.entries[k]
            .group
            .fragments
            .iter()
            .map(|id| self.pool[id].job_id())
            .collect();
        set.into_iter().collect()
    }

    /// Head of its module queue, module idle, jobs arrived, messages in.
    fn locally_ready(&self, k: usize) -> bool {
        let e = &self.entries[k];
        let m = e.group.module;
        if e.reserved || self.running.contains_key(&m) {
            return false;
        }
        if self.module_queue.get(&m).and_then(|q| q.front()) != Some(&k) {
            return false;
        }
        e.group.fragments.iter().all(|id| {
            let f = &self.pool[id];
            self.arrived.contains(&f.job_id())
                && f.precedence_in
                    .iter()
                    .all(|p| self.delivered.contains(&(p.from.clone(), id.clone())))
        })
    }

    fn try_start(&mut self) {
        let heads: Vec<usize> = self
            .module_queue
            .values()
            .filter_map(|q| q.front().copied())
            .collect();
        for k in heads {
            if !self.locally_ready(k) {
                continue;
            }
            let members = match self.entries[k].gang {
                Some(g) => self.gangs[g].clone(),
                None => vec![k],
            };
            if !members.iter().all(|&x| self.locally_ready(x)) {
                continue;
            }
            for x in members {
                let m = self.entries[x].group.module;
                let arrivals = self.entries[x]
                    .group
                    .fragments
                    .iter()
                    .map(|id| self.pool[id].arrival_ns)
                    .max()
                    .unwrap_or(0);
                let idle = self.idle_since.get(&m).copied().unwrap_or(0);
                let entry = &mut self.entries[x];
                entry.reserved = true;
                entry.release = idle.max(arrivals);
                let mut e = Event::new(0, EventKind::GroupStart);
                e.group = Some(x);
                e.module = Some(m);
                e.fragments = self.entries[x].group.fragments.clone();
                e.jobs = self.group_jobs(x);
                self.push(self.now, e, Action::GroupStart(x));
            }
        }
    }

    fn schedule_fragment_end(&mut self, id: &FragmentId) {
        let k = self.entry_of[id];
        let m = self
            .platform
            .module(self.entries[k].group.module)
            .expect("planned modules exist");
        let f = &self.pool[id];
        let t = fragment_runtime(f, m).expect("planned groups fit their module");
        let mut e = Event::new(0, EventKind::FragmentEnd);
        e.job = Some(f.job_id());
        e.group = Some(k);
        e.module = Some(m.id);
        e.fragments = vec![id.clone()];
        self.push(self.now + t, e, Action::FragmentEnd(k, id.clone()));
    }

    fn start_group(&mut self, k: usize) -> Result<(), SimError> {
        let m = self.entries[k].group.module;
        self.running.insert(m, k);
        self.entries[k].start = self.now;
        if let Some(g) = self.entries[k].gang {
            if !self.gang_started[g] {
                self.gang_started[g] = true;
                self.open_channels(g)?;
            }
        }
        for id in self.entries[k].group.fragments.clone() {
            if self.channel_wait.get(&id).copied().unwrap_or(0) == 0 {
                self.schedule_fragment_end(&id);
            }
        }
        Ok(())
    }

    fn open_channels(&mut self, g: usize) -> Result<(), SimError> {
        let members = self.gangs[g].clone();
        let parts: Vec<Fragment> = members
            .iter()
            .flat_map(|&k| self.entries[k].group.fragments.iter())
            .map(|id| self.pool[id].clone())
            .filter(|f| f.stage == Stage::Remote)
            .collect();
        let refs: Vec<&Fragment> = parts.iter().collect();
        for (a, b, ops) in remote_channels(&refs) {
            if ops == 0 {
                continue;
            }
            let ma = self.entries[self.entry_of[&a]].group.module;
            let mb = self.entries[self.entry_of[&b]].group.module;
            let link = self
                .platform
                .quantum_link_between(ma, mb)
                .ok_or(SchedulerError::MissingLink(ma, mb))?;
            *self.channel_wait.entry(a.clone()).or_default() += 1;
            *self.channel_wait.entry(b.clone()).or_default() += 1;
            let job = self.pool[&a].job_id();
            self.channels.push(Channel {
                job,
                a,
                b,
                link: link.id,
                module_a: ma,
                ops_left: ops,
                pair: None,
                pairs_made: 0,
            });
            let ch = self.channels.len() - 1;
            self.request(ch, Request::Generate);
        }
        Ok(())
    }

    fn request(&mut self, ch: usize, r: Request) {
        let l = self.channels[ch].link;
        self.links.entry(l).or_default().queue.push_back((ch, r));
        self.dispatch(l);
    }

    fn link_event(&self, kind: EventKind, ch: usize) -> Event {
        let c = &self.channels[ch];
        let mut e = Event::new(0, kind);
        e.job = Some(c.job.clone());
        e.link = Some(c.link);
        e.fragments = vec![c.a.clone(), c.b.clone()];
        e
    }

    fn dispatch(&mut self, l: LinkId) {
        let link = self.link(l);
        loop {
            let state = self.links.entry(l).or_default();
            if state.busy >= link.parallelism {
                return;
            }
            let Some((ch, r)) = state.queue.pop_front() else {
                return;
            };
            state.busy += 1;
            let job = self.channels[ch].job.clone();
            match r {
                Request::Generate => {
                    let rng = self
                        .link_rngs
                        .entry(l)
                        .or_insert_with(|| self.rng.substream(&format!("pairs/{l}")));
                    let d = generate_pair(link, rng);
                    self.reservations.entry(l).or_default().push(Reservation {
                        start_ns: self.now,
                        end_ns: self.now + d,
                        pairs: 1,
                        job,
                    });
                    let e = self.link_event(EventKind::PairReady, ch);
                    self.push(self.now + d, e, Action::PairReady(ch));
                }
                Request::Serve => {
                    if let Some(p) = self.channels[ch].pair.as_mut() {
                        p.consumed = true;
                    }
                    self.pairs.consumed += 1;
                    if link.bell_op_time > 0 {
                        self.reservations.entry(l).or_default().push(Reservation {
                            start_ns: self.now,
                            end_ns: self.now + link.bell_op_time,
                            pairs: 0,
                            job,
                        });
                    }
                    let e = self.link_event(EventKind::LinkFreed, ch);
                    self.push(self.now + link.bell_op_time, e, Action::LinkFreed(ch));
                }
            }
        }
    }

    fn handle(&mut self, action: Action) -> Result<bool, SimError> {
        match action {
            Action::Plan(jobs) => {
                self.plan(&jobs)?;
                return Ok(false);
            }
            Action::Arrival(j) => {
                self.arrived.insert(j);
            }
            Action::GroupStart(k) => self.start_group(k)?,
            Action::FragmentEnd(k, id) => {
                self.entries[k].ends.push((id.clone(), self.now));
                for (to, delay) in self.successors.get(&id).cloned().unwrap_or_default() {
                    let mut e = Event::new(0, EventKind::ClassicalMsgDelivered);
                    e.job = Some(self.pool[&id].job_id());
                    e.fragments = vec![id.clone(), to.clone()];
                    self.push(self.now + delay, e, Action::Delivered(id.clone(), to));
                }
                self.entries[k].open -= 1;
                if self.entries[k].open == 0 {
                    self.entries[k].done = true;
                    let m = self.entries[k].group.module;
                    self.running.remove(&m);
                    self.idle_since.insert(m, self.now);
                    if let Some(q) = self.module_queue.get_mut(&m) {
                        q.retain(|&x| x != k);
                    }
                }
            }
            Action::Delivered(from, to) => {
                self.delivered.insert((from, to));
            }
            Action::PairReady(ch) => {
                let l = self.channels[ch].link;
                self.links.entry(l).or_default().busy -= 1;
                self.pairs.generated += 1;
                let c = &mut self.channels[ch];
                c.pairs_made += 1;
                let no = c.pairs_made;
                c.pair = Some(Pair {
                    no,
                    consumed: false,
                });
                let ttl = self.link(l).ttl;
                let e = self.link_event(EventKind::PairExpired, ch);
                self.push(self.now + ttl, e, Action::PairExpired(ch, no));
                self.request(ch, Request::Serve);
                self.dispatch(l);
            }
            Action::PairExpired(ch, no) => {
                let live = matches!(&self.channels[ch].pair, Some(p) if p.no == no && !p.consumed);
                if !live {
                    return Ok(false);
                }
                self.pairs.expired += 1;
                self.channels[ch].pair = None;
                let l = self.channels[ch].link;
                self.links
                    .entry(l)
                    .or_default()
                    .queue
                    .retain(|&(c, r)| !(c == ch && r == Request::Serve));
                self.request(ch, Request::Generate);
            }
            Action::LinkFreed(ch) => {
                let l = self.channels[ch].link;
                self.links.entry(l).or_default().busy -= 1;
                self.channels[ch].pair = None;
                let corr = self.link(l).corr_time;
                let e = self.link_event(EventKind::RemoteOpDone, ch);
                self.push(self.now + corr, e, Action::RemoteOpDone(ch));
                self.dispatch(l);
            }
            Action::RemoteOpDone(ch) => {
                let link = self.link(self.channels[ch].link);
                let m = self
                    .platform
                    .module(self.channels[ch].module_a)
                    .expect("planned modules exist");
                let fq = remote_op_fidelity(link, m).map_err(SchedulerError::from)?;
                *self.ledger.entry(self.channels[ch].job.clone()).or_default() += fq.ln();
                self.channels[ch].ops_left -= 1;
                if self.channels[ch].ops_left > 0 {
                    self.request(ch, Request::Generate);
                } else {
                    for id in [self.channels[ch].a.clone(), self.channels[ch].b.clone()] {
                        let w = self.channel_wait.get_mut(&id).expect("channel parts wait");
                        *w -= 1;
                        if *w == 0 {
                            self.schedule_fragment_end(&id);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(Reverse((time, _, seq))) = self.heap.pop() {
            self.now = time;
            let (event, action) = self.pending.remove(&seq).expect("every key has a payload");
            let logged = self.handle(action)?;
            if logged {
                self.trace.push(event);
            }
            self.try_start();
        }
        let unfinished = self.entries.iter().filter(|e| !e.done).count();
        if unfinished > 0 {
            return Err(SimError::DeadlockDetected {
                time_ns: self.now,
                pending: unfinished,
            });
        }
        Ok(())
    }

    fn executed(&self) -> Schedule {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut ends = e.ends.clone();
                ends.sort_by_key(|(id, _)| {
                    e.group.fragments.iter().position(|x| x == id).unwrap_or(usize::MAX)
                });
                ScheduleEntry {
                    group: e.group.clone(),
                    start_ns: e.start,
                    release_ns: e.release,
                    fragment_ends: ends,
                }
            })
            .collect();
        let mut link_reservations = self.reservations.clone();
        for rs in link_reservations.values_mut() {
            rs.sort_by_key(|r| (r.start_ns, r.end_ns));
        }
        Schedule {
            entries,
            link_reservations,
            precedence_edges: self.planned.precedence_edges.clone(),
            fragments: self.planned.fragments.clone(),
            omitted: self.planned.omitted.clone(),
        }
    }
}

/// Runs `workload` on `platform` under the configured policy.
pub fn run_simulation(
    workload: &[JobSpec],
    platform: &Platform,
    config: &SimConfig,
    seed: u64,
) -> Result<SimOutcome, SimError> {
    for j in workload {
        j.validate()?;
    }
    let mut jobs = workload.to_vec();
    if config.arrival_jitter_ns > 0 {
        let mut rng = RngStream::new(seed).substream("arrivals");
        for j in &mut jobs {
            j.arrival_ns += rng.gen_range(0..=config.arrival_jitter_ns);
        }
    }
    jobs.sort_by_key(|j| j.arrival_ns);

    let mut engine = Engine::new(platform, config, seed);
    match config.queue_mode {
        QueueMode::Batch => engine.plan(&jobs)?,
        QueueMode::EventDriven => {
            let mut bursts: BTreeMap<Nanos, Vec<JobSpec>> = BTreeMap::new();
            for j in jobs.iter().cloned() {
                bursts.entry(j.arrival_ns).or_default().push(j);
            }
            for (t, burst) in bursts {
                engine.push(t, Event::new(t, EventKind::JobArrival), Action::Plan(burst));
            }
        }
    }
    engine.run()?;

    let executed = engine.executed();
    let metrics = report(workload, platform, &executed, &engine.trace)?;
    let mut pairs = engine.pairs;
    pairs.live = pairs.generated - pairs.consumed - pairs.expired;
    Ok(SimOutcome {
        planned: engine.planned,
        executed,
        trace: engine.trace,
        metrics,
        pairs,
        remote_log_fidelity: engine.ledger,
        z_traces: engine.z_traces,
    })
}

/// Omitted jobs as reported by the executed schedule.
pub fn omissions(outcome: &SimOutcome) -> &[Omission] {
    &outcome.executed.omitted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CommMode, Edge};
    use crate::workload::platform_preset;

    fn job(id: &str, qubits: u32, depth: u32, shots: u64) -> JobSpec {
        JobSpec {
            id: id.into(),
            qubits,
            depth,
            shots,
            edges: (0..qubits.saturating_sub(1))
                .map(|i| Edge::new(i, i + 1, 1))
                .collect(),
            modes: CommMode::ALL.to_vec(),
            arrival_ns: 0,
        }
    }

    #[test]
    fn event_order_is_fixed() {
        use EventKind::*;
        let order = [
            PairReady,
            LinkFreed,
            RemoteOpDone,
            PairExpired,
            ClassicalMsgDelivered,
            FragmentEnd,
            GroupStart,
            JobArrival,
        ];
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_workload() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let out = run_simulation(&[], &p, &SimConfig::default(), 1).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.metrics.jobs_completed, 0);
        assert_eq!(out.metrics.makespan, 0.0);
    }

    #[test]
    fn single_job_completes_after_its_runtime() {
        let mut p = platform_preset("IBM_LOCC").unwrap();
        for m in &mut p.modules {
            m.shot_overhead = 0;
        }
        let mut j = job("a", 5, 10, 1);
        j.arrival_ns = 500;
        let out = run_simulation(&[j], &p, &SimConfig::default(), 0).unwrap();
        let end = out
            .trace
            .iter()
            .find(|e| e.kind == EventKind::FragmentEnd)
            .unwrap();
        assert_eq!(end.time_ns, 500 + 10_000);
    }

    #[test]
    fn certain_pairs_take_exactly_t_pair() {
        let p = platform_preset("IONQ_QCOMM").unwrap();
        let mut rng = RngStream::new(3).substream("x");
        for _ in 0..100 {
            assert_eq!(generate_pair(&p.links[0], &mut rng), 200_000);
        }
    }

    #[test]
    fn substreams_are_independent_and_reproducible() {
        let s = RngStream::new(9);
        let a: Vec<u32> = (0..4).map(|_| 0).scan(s.substream("a"), |r, _| Some(r.gen())).collect();
        let a2: Vec<u32> = (0..4).map(|_| 0).scan(s.substream("a"), |r, _| Some(r.gen())).collect();
        let b: Vec<u32> = (0..4).map(|_| 0).scan(s.substream("b"), |r, _| Some(r.gen())).collect();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn qcomm_job_matches_plan_at_unit_success() {
        let p = platform_preset("IONQ_QCOMM").unwrap();
        let mut wide = job("w", 50, 4, 10);
        wide.edges = (0..49).map(|i| Edge::new(i, i + 1, 2)).collect();
        let out = run_simulation(&[wide], &p, &SimConfig::default(), 5).unwrap();
        assert_eq!(out.executed.fragment_times(), out.planned.fragment_times());
        assert!(out.trace.iter().any(|e| e.kind == EventKind::RemoteOpDone));
        assert_eq!(out.pairs.generated, out.pairs.consumed + out.pairs.expired + out.pairs.live);
    }

    #[test]
    fn remote_op_latency_is_link_cost() {
        let p = platform_preset("IONQ_QCOMM").unwrap();
        let mut wide = job("w", 40, 1, 1);
        wide.edges = (0..39).map(|i| Edge::new(i, i + 1, 1)).collect();
        let out = run_simulation(&[wide], &p, &SimConfig::default(), 5).unwrap();
        let ready: Vec<Nanos> = out
            .trace
            .iter()
            .filter(|e| e.kind == EventKind::GroupStart)
            .map(|e| e.time_ns)
            .collect();
        let done = out
            .trace
            .iter()
            .find(|e| e.kind == EventKind::RemoteOpDone)
            .unwrap();
        assert_eq!(done.time_ns - ready[0], 600_000);
    }

    #[test]
    fn feed_forward_gates_downstream() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let wide = job("10", 142, 5, 20);
        let out = run_simulation(&[wide], &p, &SimConfig::default(), 0).unwrap();
        let t = out.executed.fragment_times();
        let (_, u_end) = t[&FragmentId::from("10-U-1")];
        let (d_start, _) = t[&FragmentId::from("10-D-1")];
        assert_eq!(d_start, u_end + 2_000_000);
        let msg = out
            .trace
            .iter()
            .find(|e| e.kind == EventKind::ClassicalMsgDelivered)
            .unwrap();
        assert_eq!(msg.time_ns, u_end + 2_000_000);
    }

    #[test]
    fn same_seed_same_trace() {
        let mut p = platform_preset("IONQ_QCOMM").unwrap();
        for l in &mut p.links {
            l.succ_prob = 0.3;
        }
        let jobs = vec![job("a", 60, 3, 5), job("b", 10, 2, 5)];
        let x = run_simulation(&jobs, &p, &SimConfig::default(), 11).unwrap();
        let y = run_simulation(&jobs, &p, &SimConfig::default(), 11).unwrap();
        assert_eq!(trace_to_jsonl(&x.trace), trace_to_jsonl(&y.trace));
    }

    #[test]
    fn event_driven_mode_runs_bursts() {
        let p = platform_preset("IBM_LOCC").unwrap();
        let mut jobs: Vec<JobSpec> = (0..4).map(|i| job(&format!("j{i}"), 30, 5, 10)).collect();
        jobs[2].arrival_ns = 1_000_000_000;
        jobs[3].arrival_ns = 1_000_000_000;
        let cfg = SimConfig {
            queue_mode: QueueMode::EventDriven,
            ..SimConfig::default()
        };
        let out = run_simulation(&jobs, &p, &cfg, 0).unwrap();
        assert_eq!(out.metrics.jobs_completed, 4);
        assert_eq!(out.z_traces.len(), 2);
        for e in &out.executed.entries {
            for id in &e.group.fragments {
                let f = out.executed.fragments.iter().find(|f| &f.id == id).unwrap();
                assert!(e.start_ns >= f.arrival_ns);
            }
        }
    }
}
