//! Workload files, synthetic workloads and platform presets.

use std::collections::BTreeSet;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CommMode, Edge, JobId, JobSpec, LinkId, LinkKind, LinkProfile, ModelError, ModuleId,
    ModuleProfile, Platform,
};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate job id {0}")]
    DuplicateJobId(JobId),
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("unknown platform preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WorkloadFile {
    jobs: Vec<JobSpec>,
}

/// Parses and validates a workload document.
pub fn parse_workload(text: &str) -> Result<Vec<JobSpec>, WorkloadError> {
    let file: WorkloadFile = serde_json::from_str(text).map_err(|e| WorkloadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut seen = BTreeSet::new();
    let mut last_arrival = 0;
    for (i, job) in file.jobs.iter().enumerate() {
        job.validate()?;
        if !seen.insert(job.id.clone()) {
            return Err(WorkloadError::DuplicateJobId(job.id.clone()));
        }
        if job.arrival_ns < last_arrival {
            return Err(WorkloadError::Parse {
                line: 0,
                column: 0,
                message: format!("jobs[{i}].arrival_ns decreases ({})", job.arrival_ns),
            });
        }
        last_arrival = job.arrival_ns;
    }
    Ok(file.jobs)
}

pub fn load_workload(path: impl AsRef<Path>) -> Result<Vec<JobSpec>, WorkloadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_workload(&text)
}

pub fn workload_to_string(jobs: &[JobSpec]) -> String {
    let file = WorkloadFile {
        jobs: jobs.to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("workload serializes")
}

pub fn save_workload(path: impl AsRef<Path>, jobs: &[JobSpec]) -> Result<(), WorkloadError> {
    let path = path.as_ref();
    fs::write(path, workload_to_string(jobs)).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a platform document and validates it.
pub fn load_platform(path: impl AsRef<Path>) -> Result<Platform, WorkloadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let p: Platform = serde_json::from_str(&text).map_err(|e| WorkloadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(p.validate()?)
}

/// Parameters of the random workload generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWorkload {
    pub jobs: usize,
    pub widths: RangeInclusive<u32>,
    pub depths: RangeInclusive<u32>,
    pub shots: u64,
    /// Extra edges per qubit beyond the spanning tree.
    pub density: f64,
    pub max_weight: u32,
    pub seed: u64,
}

impl RandomWorkload {
    pub fn new(jobs: usize, widths: RangeInclusive<u32>, depths: RangeInclusive<u32>, shots: u64, seed: u64) -> Self {
        Self {
            jobs,
            widths,
            depths,
            shots,
            density: 0.5,
            max_weight: 3,
            seed,
        }
    }
}

/// Jobs `r0, r1, ...` with uniform widths and depths and random connected
/// interaction graphs. A pure function of its arguments.
pub fn generate_random_workload(cfg: &RandomWorkload) -> Vec<JobSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.jobs)
        .map(|i| {
            let qubits = rng.gen_range(cfg.widths.clone()).max(1);
            let depth = rng.gen_range(cfg.depths.clone()).max(1);
            let edges = random_connected_graph(&mut rng, qubits, cfg.density, cfg.max_weight.max(1));
            JobSpec {
                id: JobId(format!("r{i}")),
                qubits,
                depth,
                shots: cfg.shots.max(1),
                edges,
                modes: CommMode::ALL.to_vec(),
                arrival_ns: 0,
            }
        })
        .collect()
}

/// Random spanning tree plus about `density * n` extra distinct edges.
fn random_connected_graph(rng: &mut ChaCha8Rng, n: u32, density: f64, max_weight: u32) -> Vec<Edge> {
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(rng);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for i in 1..order.len() {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        seen.insert((a.min(b), a.max(b)));
        edges.push(Edge::new(a.min(b), a.max(b), rng.gen_range(1..=max_weight)));
    }
    if n >= 2 {
        let max_pairs = u64::from(n) * u64::from(n - 1) / 2;
        let extra = ((f64::from(n) * density).round() as u64).min(max_pairs - edges.len() as u64);
        let mut added = 0;
        while added < extra {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            edges.push(Edge::new(a.min(b), a.max(b), rng.gen_range(1..=max_weight)));
            added += 1;
        }
    }
    edges.sort();
    edges
}

pub const PRESETS: [&str; 3] = ["IBM_LOCC", "IONQ_QCOMM", "ATOMIC_QCOMM"];

struct Class {
    layer_time: u64,
    shot_overhead: u64,
    f1q: f64,
    f2q: f64,
    fmeas: f64,
}

const SUPERCONDUCTING: Class = Class {
    layer_time: 1_000,
    shot_overhead: 250_000,
    f1q: 0.9997,
    f2q: 0.993,
    fmeas: 0.98,
};

const TRAPPED_ION: Class = Class {
    layer_time: 100_000,
    shot_overhead: 1_000_000,
    f1q: 0.9998,
    f2q: 0.995,
    fmeas: 0.995,
};

const NEUTRAL_ATOM: Class = Class {
    layer_time: 10_000,
    shot_overhead: 500_000,
    f1q: 0.9995,
    f2q: 0.994,
    fmeas: 0.99,
};

fn module(id: u32, name: &str, capacity: u32, class: &Class) -> ModuleProfile {
    ModuleProfile {
        id: ModuleId(id),
        name: name.into(),
        capacity,
        layer_time: class.layer_time,
        shot_overhead: class.shot_overhead,
        gate_fidelity_1q: class.f1q,
        gate_fidelity_2q: class.f2q,
        meas_fidelity: class.fmeas,
    }
}

fn full_mesh(n: u32, template: &LinkProfile) -> Vec<LinkProfile> {
    let mut links = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            links.push(LinkProfile {
                id: LinkId(links.len() as u32),
                endpoints: (ModuleId(a), ModuleId(b)),
                ..template.clone()
            });
        }
    }
    links
}

fn classical_template(latency: u64, ctrl: u64) -> LinkProfile {
    LinkProfile {
        id: LinkId(0),
        endpoints: (ModuleId(0), ModuleId(1)),
        kind: LinkKind::Classical,
        classical_latency: latency,
        meas_latency: 0,
        ctrl_latency: ctrl,
        pair_time: 0,
        succ_prob: 0.0,
        bell_op_time: 0,
        corr_time: 0,
        pair_fidelity: 0.0,
        ttl: 0,
        parallelism: 1,
        budget: None,
    }
}

struct QuantumLink {
    latency: u64,
    pair_time: u64,
    bell: u64,
    corr: u64,
    fidelity: f64,
    ttl: u64,
}

fn quantum_template(q: QuantumLink) -> LinkProfile {
    LinkProfile {
        kind: LinkKind::Quantum,
        classical_latency: q.latency,
        ctrl_latency: 0,
        pair_time: q.pair_time,
        succ_prob: 1.0,
        bell_op_time: q.bell,
        corr_time: q.corr,
        pair_fidelity: q.fidelity,
        ttl: q.ttl,
        ..classical_template(0, 0)
    }
}

/// Named platform configurations with full-mesh interconnects.
pub fn platform_preset(name: &str) -> Result<Platform, WorkloadError> {
    let p = match name {
        "IBM_LOCC" => {
            let names = ["ibm_kawasaki", "ibm_kyiv", "ibm_sherbrooke", "ibm_brisbane"];
            Platform {
                name: name.into(),
                modules: names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| module(i as u32, n, 127, &SUPERCONDUCTING))
                    .collect(),
                links: full_mesh(4, &classical_template(500_000, 1_500_000)),
                comm_mode: CommMode::Locc,
                cut_budget: 16.0,
                comm_budget: 1.0e12,
                sampling_factor: 1.0,
            }
        }
        "IONQ_QCOMM" => {
            let mut modules: Vec<ModuleProfile> = (0..3)
                .map(|i| module(i, &format!("aria_{}", i + 1), 25, &TRAPPED_ION))
                .collect();
            modules.extend((3..6).map(|i| module(i, &format!("forte_{}", i - 2), 36, &TRAPPED_ION)));
            Platform {
                name: name.into(),
                modules,
                links: full_mesh(
                    6,
                    &quantum_template(QuantumLink {
                        latency: 2_000_000,
                        pair_time: 200_000,
                        bell: 200_000,
                        corr: 200_000,
                        fidelity: 0.99,
                        ttl: 500_000_000,
                    }),
                ),
                comm_mode: CommMode::Qcomm,
                cut_budget: 16.0,
                comm_budget: 1.0e12,
                sampling_factor: 2.0,
            }
        }
        "ATOMIC_QCOMM" => Platform {
            name: name.into(),
            modules: (0..4)
                .map(|i| module(i, &format!("ac1000_{}", i + 1), 112, &NEUTRAL_ATOM))
                .collect(),
            links: full_mesh(
                4,
                &quantum_template(QuantumLink {
                    latency: 3_000_000,
                    pair_time: 333_333,
                    bell: 100_000,
                    corr: 300_000,
                    fidelity: 0.988,
                    ttl: 300_000_000,
                }),
            ),
            comm_mode: CommMode::Qcomm,
            cut_budget: 16.0,
            comm_budget: 1.0e12,
            sampling_factor: 2.0,
        },
        other => return Err(WorkloadError::UnknownPreset(other.into())),
    };
    Ok(p.validate()?)
}
