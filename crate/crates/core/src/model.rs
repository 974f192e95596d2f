//! Domain types shared by the partitioner, cost model, schedulers and simulator.
//!
//! All times are integer nanoseconds. Every type here is a plain value: once
//! built and validated it is never mutated behind the caller's back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Simulated time in nanoseconds.
pub type Nanos = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("platform has no modules")]
    EmptyPlatform,
    #[error("link {link} references unknown module {module}")]
    DanglingLinkEndpoint { link: LinkId, module: ModuleId },
    #[error("link {0} connects a module to itself")]
    SelfLoop(LinkId),
    #[error("{what} = {value} is outside (0, 1]")]
    InvalidFidelity { what: String, value: f64 },
    #[error("classical link {0} carries non-zero quantum fields")]
    ClassicalLinkWithQuantumFields(LinkId),
    #[error("invalid link {link}: {reason}")]
    InvalidLink { link: LinkId, reason: String },
    #[error("invalid module {module}: {reason}")]
    InvalidModule { module: ModuleId, reason: String },
    #[error("invalid platform: {0}")]
    InvalidPlatform(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
    #[error("invalid job {job}: {reason}")]
    InvalidJob { job: JobId, reason: String },
}

macro_rules! numeric_id {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

numeric_id!(ModuleId, "m");
numeric_id!(LinkId, "l");

macro_rules! string_id {
    ($name:ident) => {
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(JobId);
string_id!(FragmentId);

/// Distributed-execution regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CommMode {
    Lo,
    Locc,
    Qcomm,
}

impl CommMode {
    pub const ALL: [CommMode; 3] = [CommMode::Lo, CommMode::Locc, CommMode::Qcomm];
}

impl fmt::Display for CommMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommMode::Lo => "LO",
            CommMode::Locc => "LOCC",
            CommMode::Qcomm => "QCOMM",
        })
    }
}

/// Execution stage of a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Stage {
    Flat,
    Upstream,
    Downstream,
    Remote,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Flat => "FLAT",
            Stage::Upstream => "UPSTREAM",
            Stage::Downstream => "DOWNSTREAM",
            Stage::Remote => "REMOTE",
        })
    }
}

/// Interaction-graph edge. The weight is the two-qubit gate count between the pair.
///
/// Serialized as `[a, b, weight]`; `[a, b]` is accepted on input with weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub weight: u32,
}

impl Edge {
    pub fn new(a: u32, b: u32, weight: u32) -> Self {
        Self { a, b, weight }
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.a, self.b, self.weight].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EdgeVisitor;

        impl<'de> Visitor<'de> for EdgeVisitor {
            type Value = Edge;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("[a, b] or [a, b, weight]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Edge, A::Error> {
                let a = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let b = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let weight = seq.next_element()?.unwrap_or(1);
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                Ok(Edge { a, b, weight })
            }
        }

        d.deserialize_seq(EdgeVisitor)
    }
}

/// A submitted circuit job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: JobId,
    pub qubits: u32,
    pub depth: u32,
    pub shots: u64,
    #[serde(default)]
    pub edges: Vec<Edge>,
    pub modes: Vec<CommMode>,
    #[serde(default)]
    pub arrival_ns: Nanos,
}

impl JobSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| ModelError::InvalidJob {
            job: self.id.clone(),
            reason,
        };
        if self.id.0.is_empty() {
            return Err(bad("empty id".into()));
        }
        if FragmentName::parse(self.id.as_str()).is_some() {
            return Err(bad("id collides with the fragment naming scheme".into()));
        }
        if self.qubits == 0 || self.depth == 0 || self.shots == 0 {
            return Err(bad("qubits, depth and shots must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(bad("no admissible communication modes".into()));
        }
        for e in &self.edges {
            if e.a >= self.qubits || e.b >= self.qubits {
                return Err(bad(format!(
                    "edge ({}, {}) references a qubit >= {}",
                    e.a, e.b, self.qubits
                )));
            }
            if e.a == e.b {
                return Err(bad(format!("self-loop on qubit {}", e.a)));
            }
            if e.weight == 0 {
                return Err(bad(format!("edge ({}, {}) has zero weight", e.a, e.b)));
            }
        }
        Ok(())
    }

    pub fn allows(&self, mode: CommMode) -> bool {
        self.modes.contains(&mode)
    }

    /// Total two-qubit gate count.
    pub fn two_qubit_gates(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.weight)).sum()
    }
}

/// One QPU and its scalarized calibration profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleProfile {
    pub id: ModuleId,
    #[serde(default)]
    pub name: String,
    pub capacity: u32,
    pub layer_time: Nanos,
    pub shot_overhead: Nanos,
    pub gate_fidelity_1q: f64,
    pub gate_fidelity_2q: f64,
    pub meas_fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LinkKind {
    Classical,
    Quantum,
}

/// One interconnect edge between two modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub id: LinkId,
    pub endpoints: (ModuleId, ModuleId),
    pub kind: LinkKind,
    pub classical_latency: Nanos,
    #[serde(default)]
    pub meas_latency: Nanos,
    #[serde(default)]
    pub ctrl_latency: Nanos,
    #[serde(default)]
    pub pair_time: Nanos,
    #[serde(default)]
    pub succ_prob: f64,
    #[serde(default)]
    pub bell_op_time: Nanos,
    #[serde(default)]
    pub corr_time: Nanos,
    #[serde(default)]
    pub pair_fidelity: f64,
    #[serde(default)]
    pub ttl: Nanos,
    pub parallelism: u32,
    /// Maximum Bell pairs reservable per scheduling group. Derived from the
    /// steady-state pair inventory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl LinkProfile {
    pub fn is_quantum(&self) -> bool {
        self.kind == LinkKind::Quantum
    }

    pub fn touches(&self, m: ModuleId) -> bool {
        self.endpoints.0 == m || self.endpoints.1 == m
    }

    pub fn connects(&self, a: ModuleId, b: ModuleId) -> bool {
        (self.endpoints.0 == a && self.endpoints.1 == b)
            || (self.endpoints.0 == b && self.endpoints.1 == a)
    }

    /// Feed-forward delay for one classical dependency: measurement, transmission and control.
    pub fn sync_delay(&self) -> Nanos {
        self.meas_latency + self.classical_latency + self.ctrl_latency
    }

    /// `B_e`: explicit budget, else `parallelism * ttl / pair_time` rounded down.
    pub fn effective_budget(&self) -> u64 {
        match (self.budget, self.kind) {
            (Some(b), _) => b,
            (None, LinkKind::Classical) => 0,
            (None, LinkKind::Quantum) => {
                if self.pair_time == 0 {
                    0
                } else {
                    u64::from(self.parallelism) * self.ttl / self.pair_time
                }
            }
        }
    }

    /// Bell-pair generation rate in Hz.
    pub fn pair_rate_hz(&self) -> f64 {
        if self.pair_time == 0 {
            0.0
        } else {
            1.0e9 / self.pair_time as f64
        }
    }
}

/// A modular platform: modules, links, and the scheduler-facing budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    #[serde(default)]
    pub name: String,
    pub modules: Vec<ModuleProfile>,
    pub links: Vec<LinkProfile>,
    pub comm_mode: CommMode,
    pub cut_budget: f64,
    pub comm_budget: f64,
    pub sampling_factor: f64,
}

fn check_probability(what: String, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidFidelity { what, value })
    }
}

impl Platform {
    /// Checks every module, link and platform invariant.
    pub fn validate(self) -> Result<Self, ModelError> {
        if self.modules.is_empty() {
            return Err(ModelError::EmptyPlatform);
        }
        let mut module_ids = BTreeSet::new();
        for m in &self.modules {
            if !module_ids.insert(m.id) {
                return Err(ModelError::DuplicateId {
                    kind: "module",
                    id: m.id.to_string(),
                });
            }
            if m.capacity == 0 {
                return Err(ModelError::InvalidModule {
                    module: m.id,
                    reason: "capacity must be at least 1".into(),
                });
            }
            if m.layer_time == 0 && m.shot_overhead == 0 {
                return Err(ModelError::InvalidModule {
                    module: m.id,
                    reason: "layer_time and shot_overhead cannot both be zero".into(),
                });
            }
            check_probability(format!("{}.gate_fidelity_1q", m.id), m.gate_fidelity_1q)?;
            check_probability(format!("{}.gate_fidelity_2q", m.id), m.gate_fidelity_2q)?;
            check_probability(format!("{}.meas_fidelity", m.id), m.meas_fidelity)?;
        }

        let mut link_ids = BTreeSet::new();
        for l in &self.links {
            if !link_ids.insert(l.id) {
                return Err(ModelError::DuplicateId {
                    kind: "link",
                    id: l.id.to_string(),
                });
            }
            for end in [l.endpoints.0, l.endpoints.1] {
                if !module_ids.contains(&end) {
                    return Err(ModelError::DanglingLinkEndpoint {
                        link: l.id,
                        module: end,
                    });
                }
            }
            if l.endpoints.0 == l.endpoints.1 {
                return Err(ModelError::SelfLoop(l.id));
            }
            if l.parallelism == 0 {
                return Err(ModelError::InvalidLink {
                    link: l.id,
                    reason: "parallelism must be at least 1".into(),
                });
            }
            match l.kind {
                LinkKind::Classical => {
                    let quantum_fields_zero = l.pair_time == 0
                        && l.succ_prob == 0.0
                        && l.bell_op_time == 0
                        && l.corr_time == 0
                        && l.pair_fidelity == 0.0
                        && l.ttl == 0
                        && l.budget.unwrap_or(0) == 0;
                    if !quantum_fields_zero {
                        return Err(ModelError::ClassicalLinkWithQuantumFields(l.id));
                    }
                }
                LinkKind::Quantum => {
                    check_probability(format!("{}.pair_fidelity", l.id), l.pair_fidelity)?;
                    check_probability(format!("{}.succ_prob", l.id), l.succ_prob)?;
                    if l.ttl == 0 {
                        return Err(ModelError::InvalidLink {
                            link: l.id,
                            reason: "quantum links need ttl > 0".into(),
                        });
                    }
                    if l.pair_time == 0 {
                        return Err(ModelError::InvalidLink {
                            link: l.id,
                            reason: "quantum links need pair_time > 0".into(),
                        });
                    }
                }
            }
        }

        if !(self.sampling_factor >= 1.0) || !self.sampling_factor.is_finite() {
            return Err(ModelError::InvalidPlatform(format!(
                "sampling_factor {} must be a finite value >= 1",
                self.sampling_factor
            )));
        }
        if !(self.cut_budget >= 1.0) || !(self.comm_budget >= 0.0) {
            return Err(ModelError::InvalidPlatform(
                "cut_budget must be >= 1 and comm_budget >= 0".into(),
            ));
        }
        Ok(self)
    }

    pub fn module(&self, id: ModuleId) -> Option<&ModuleProfile> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn link(&self, id: LinkId) -> Option<&LinkProfile> {
        self.links.iter().find(|l| l.id == id)
    }

    /// `δ(m)`: ids of links with `m` as an endpoint, ascending.
    pub fn incident_links(&self, m: ModuleId) -> Result<Vec<LinkId>, ModelError> {
        if self.module(m).is_none() {
            return Err(ModelError::UnknownModule(m));
        }
        let mut ids: Vec<LinkId> = self
            .links
            .iter()
            .filter(|l| l.touches(m))
            .map(|l| l.id)
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Incidence map for every module.
    pub fn incidence(&self) -> BTreeMap<ModuleId, Vec<LinkId>> {
        self.modules
            .iter()
            .map(|m| {
                let mut ids: Vec<LinkId> = self
                    .links
                    .iter()
                    .filter(|l| l.touches(m.id))
                    .map(|l| l.id)
                    .collect();
                ids.sort();
                (m.id, ids)
            })
            .collect()
    }

    pub fn max_capacity(&self) -> u32 {
        self.modules.iter().map(|m| m.capacity).max().unwrap_or(0)
    }

    pub fn max_layer_time(&self) -> Nanos {
        self.modules.iter().map(|m| m.layer_time).max().unwrap_or(0)
    }

    pub fn has_link_kind(&self, kind: LinkKind) -> bool {
        self.links.iter().any(|l| l.kind == kind)
    }

    /// LO needs no interconnect; LOCC needs a classical link; QCOMM a quantum one.
    pub fn supports(&self, mode: CommMode) -> bool {
        match mode {
            CommMode::Lo => true,
            CommMode::Locc => self.has_link_kind(LinkKind::Classical),
            CommMode::Qcomm => self.has_link_kind(LinkKind::Quantum),
        }
    }

    /// Cheapest quantum link directly joining `a` and `b` (ties by id).
    pub fn quantum_link_between(&self, a: ModuleId, b: ModuleId) -> Option<&LinkProfile> {
        self.links
            .iter()
            .filter(|l| l.is_quantum() && l.connects(a, b))
            .min_by(|x, y| {
                link_cost_key(x)
                    .partial_cmp(&link_cost_key(y))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(x.id.cmp(&y.id))
            })
    }

    /// Cheapest quantum link incident to `m` (ties by id).
    pub fn cheapest_incident_quantum_link(&self, m: ModuleId) -> Option<&LinkProfile> {
        self.links
            .iter()
            .filter(|l| l.is_quantum() && l.touches(m))
            .min_by(|x, y| {
                link_cost_key(x)
                    .partial_cmp(&link_cost_key(y))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(x.id.cmp(&y.id))
            })
    }

    /// Cheapest quantum link on the whole platform (ties by id).
    pub fn cheapest_quantum_link(&self) -> Option<&LinkProfile> {
        self.links
            .iter()
            .filter(|l| l.is_quantum())
            .min_by(|x, y| {
                link_cost_key(x)
                    .partial_cmp(&link_cost_key(y))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(x.id.cmp(&y.id))
            })
    }

    /// Classical link with the smallest feed-forward delay (ties by id).
    pub fn fastest_classical_link(&self) -> Option<&LinkProfile> {
        self.links
            .iter()
            .filter(|l| l.kind == LinkKind::Classical)
            .min_by_key(|l| (l.sync_delay(), l.id))
    }
}

fn link_cost_key(l: &LinkProfile) -> f64 {
    l.pair_time as f64 / l.succ_prob + l.bell_op_time as f64 + l.corr_time as f64
}

/// Precedence requirement on a DOWNSTREAM fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precedence {
    pub from: FragmentId,
    pub delay_ns: Nanos,
}

/// Remote operations a QComm fragment performs with one sibling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemotePartner {
    pub fragment: FragmentId,
    pub ops: u32,
}

/// A schedulable unit derived from a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub id: FragmentId,
    /// Originating job when the job was cut; `None` for uncut jobs.
    pub parent: Option<JobId>,
    pub stage: Stage,
    /// Qubit demand including communication ancillas.
    pub qubits: u32,
    pub depth: u32,
    pub shots_effective: u64,
    pub cut_overhead: f64,
    /// Link cost in ns-equivalent, priced optimistically at partition time.
    pub comm_cost: f64,
    pub remote_ops: u32,
    pub bell_demand: BTreeMap<LinkId, u32>,
    pub precedence_in: Vec<Precedence>,
    #[serde(default)]
    pub partners: Vec<RemotePartner>,
    /// Data qubits; measured at the end of the fragment.
    pub data_qubits: u32,
    /// Two-qubit gates executed locally by this fragment.
    pub two_qubit_gates: u64,
    /// Cuts whose reconstruction or correction is charged to this fragment.
    pub cut_penalties: u32,
    pub arrival_ns: Nanos,
}

impl Fragment {
    /// The uncut footprint of a job.
    pub fn whole(job: &JobSpec) -> Self {
        Self {
            id: FragmentId(job.id.0.clone()),
            parent: None,
            stage: Stage::Flat,
            qubits: job.qubits,
            depth: job.depth,
            shots_effective: job.shots,
            cut_overhead: 1.0,
            comm_cost: 0.0,
            remote_ops: 0,
            bell_demand: BTreeMap::new(),
            precedence_in: Vec::new(),
            partners: Vec::new(),
            data_qubits: job.qubits,
            two_qubit_gates: job.two_qubit_gates(),
            cut_penalties: 0,
            arrival_ns: job.arrival_ns,
        }
    }

    /// Job this fragment executes work for.
    pub fn job_id(&self) -> JobId {
        self.parent
            .clone()
            .unwrap_or_else(|| JobId(self.id.0.clone()))
    }

    pub fn ancillas(&self) -> u32 {
        self.qubits - self.data_qubits
    }
}

/// Structured view of a fragment id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentName {
    pub parent: JobId,
    pub stage: Stage,
    pub index: u32,
}

impl FragmentName {
    /// Parses the generated naming scheme: `{job}-LO-{n}`, `{job}-U-{n}`,
    /// `{job}-D-{n}`, `{job}_P`, `{job}_X{n}`. Returns `None` for anything else,
    /// which includes the ids of uncut jobs.
    pub fn parse(id: &str) -> Option<Self> {
        fn positive(s: &str) -> Option<u32> {
            if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            s.parse().ok()
        }
        fn non_empty(s: &str) -> Option<JobId> {
            (!s.is_empty()).then(|| JobId(s.to_owned()))
        }

        if let Some(parent) = id.strip_suffix("_P") {
            return Some(Self {
                parent: non_empty(parent)?,
                stage: Stage::Remote,
                index: 0,
            });
        }
        if let Some(pos) = id.rfind("_X") {
            if let Some(index) = positive(&id[pos + 2..]) {
                return Some(Self {
                    parent: non_empty(&id[..pos])?,
                    stage: Stage::Remote,
                    index,
                });
            }
        }
        for (tag, stage) in [
            ("-U-", Stage::Upstream),
            ("-D-", Stage::Downstream),
            ("-LO-", Stage::Flat),
        ] {
            if let Some(pos) = id.rfind(tag) {
                if let Some(index) = positive(&id[pos + tag.len()..]) {
                    return Some(Self {
                        parent: non_empty(&id[..pos])?,
                        stage,
                        index,
                    });
                }
            }
        }
        None
    }

    pub fn format(&self) -> FragmentId {
        let p = &self.parent;
        FragmentId(match (self.stage, self.index) {
            (Stage::Remote, 0) => format!("{p}_P"),
            (Stage::Remote, n) => format!("{p}_X{n}"),
            (Stage::Upstream, n) => format!("{p}-U-{n}"),
            (Stage::Downstream, n) => format!("{p}-D-{n}"),
            (Stage::Flat, n) => format!("{p}-LO-{n}"),
        })
    }
}

/// Fragments co-placed on one module as a parallel batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub fragments: Vec<FragmentId>,
    pub module: ModuleId,
    pub score: f64,
}

/// Fragment pool keyed by id.
pub type FragmentPool = BTreeMap<FragmentId, Fragment>;

/// Fragment to module assignment known so far.
pub type Placement = BTreeMap<FragmentId, ModuleId>;

pub fn pool_of(fragments: impl IntoIterator<Item = Fragment>) -> FragmentPool {
    fragments.into_iter().map(|f| (f.id.clone(), f)).collect()
}

/// `(α, β, γ, η)` weights of the group cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            eta: 1.0,
        }
    }
}

impl CostWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<Self, ModelError> {
        let w = Self {
            alpha,
            beta,
            gamma,
            eta,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.alpha, self.beta, self.gamma, self.eta];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ModelError::InvalidPlatform(
                "cost weights must be finite and non-negative".into(),
            ));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(ModelError::InvalidPlatform(
                "at least one cost weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Bell-pair traffic booked on one link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservation {
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    /// 1 for a generation slot, 0 for remote-gate service.
    pub pairs: u32,
    pub job: JobId,
}

/// A group with its timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub group: Group,
    pub start_ns: Nanos,
    /// Earliest start allowed by module availability and arrivals alone.
    pub release_ns: Nanos,
    pub fragment_ends: Vec<(FragmentId, Nanos)>,
}

impl ScheduleEntry {
    pub fn end_ns(&self) -> Nanos {
        self.fragment_ends
            .iter()
            .map(|(_, e)| *e)
            .max()
            .unwrap_or(self.start_ns)
    }

    pub fn end_of(&self, f: &FragmentId) -> Option<Nanos> {
        self.fragment_ends
            .iter()
            .find(|(id, _)| id == f)
            .map(|(_, e)| *e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizedPrecedence {
    pub from: FragmentId,
    pub to: FragmentId,
    pub delay_ns: Nanos,
}

/// Job left out of a schedule, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omission {
    pub job: JobId,
    pub reason: String,
}

/// A full timed assignment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
    pub link_reservations: BTreeMap<LinkId, Vec<Reservation>>,
    pub precedence_edges: Vec<RealizedPrecedence>,
    /// Every unit referenced by `entries`.
    pub fragments: Vec<Fragment>,
    #[serde(default)]
    pub omitted: Vec<Omission>,
}

impl Schedule {
    pub fn pool(&self) -> FragmentPool {
        pool_of(self.fragments.iter().cloned())
    }

    pub fn placement(&self) -> Placement {
        self.entries
            .iter()
            .flat_map(|e| e.group.fragments.iter().map(|f| (f.clone(), e.group.module)))
            .collect()
    }

    /// `(start, end)` per fragment.
    pub fn fragment_times(&self) -> BTreeMap<FragmentId, (Nanos, Nanos)> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.fragment_ends
                    .iter()
                    .map(move |(f, end)| (f.clone(), (e.start_ns, *end)))
            })
            .collect()
    }

    pub fn makespan_end(&self) -> Nanos {
        self.entries.iter().map(|e| e.end_ns()).max().unwrap_or(0)
    }

    /// Jobs with at least one scheduled fragment.
    pub fn scheduled_jobs(&self) -> BTreeSet<JobId> {
        self.fragments.iter().map(|f| f.job_id()).collect()
    }
}
