use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use interq_core::partition::intercomm_modes;
use interq_core::scheduler::{Policy, SchedulerConfig};
use interq_core::sim::{run_simulation, trace_to_jsonl, QueueMode, SimConfig, SimOutcome};
use interq_core::workload::{load_platform, load_workload, platform_preset, PRESETS};
use interq_core::{CommMode, CostWeights, JobSpec, Platform};

use crate::output::{self, Characterization};
use crate::{CharacterizeArgs, CompareArgs, PolicyArg, QueueModeArg, RunArgs, RunOptions};

/// Jobs were left unscheduled under `--strict`.
#[derive(Debug)]
pub struct Unschedulable(pub Vec<String>);

impl std::fmt::Display for Unschedulable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unschedulable jobs: {}", self.0.join(", "))
    }
}

impl std::error::Error for Unschedulable {}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    policy: Option<PolicyArg>,
    seed: Option<u64>,
    weights: Option<CostWeights>,
    max_improvement_rounds: Option<u32>,
    queue_mode: Option<QueueModeArg>,
    arrival_jitter_ns: Option<u64>,
}

fn platform(spec: &str) -> Result<Platform> {
    if PRESETS.contains(&spec) {
        return Ok(platform_preset(spec)?);
    }
    let path = Path::new(spec);
    ensure!(
        path.exists(),
        "unknown platform {spec:?}: not a preset ({}) and not a file",
        PRESETS.join(", ")
    );
    load_platform(path).with_context(|| format!("loading platform {spec}"))
}

fn workload(path: &Path) -> Result<Vec<JobSpec>> {
    load_workload(path).with_context(|| format!("loading workload {}", path.display()))
}

fn parse_weights(s: &str) -> Result<CostWeights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("weights {s:?} are not numbers"))?;
    let [alpha, beta, gamma, eta] = parts[..] else {
        bail!("weights need four values alpha,beta,gamma,eta; got {s:?}");
    };
    Ok(CostWeights::new(alpha, beta, gamma, eta)?)
}

/// Flags over config file over defaults.
fn resolve(o: &RunOptions, policy_override: Option<PolicyArg>) -> Result<(SimConfig, u64)> {
    let file: FileConfig = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let defaults = SchedulerConfig::default();
    let weights = match &o.weights {
        Some(s) => parse_weights(s)?,
        None => file.weights.unwrap_or(defaults.weights),
    };
    let policy = match policy_override.or(o.policy).or(file.policy) {
        Some(PolicyArg::SerialRr) => Policy::SerialRr,
        Some(PolicyArg::Interq) | None => Policy::Interq,
    };
    let queue_mode = match o.queue_mode.or(file.queue_mode) {
        Some(QueueModeArg::EventDriven) => QueueMode::EventDriven,
        Some(QueueModeArg::Batch) | None => QueueMode::Batch,
    };
    let scheduler = SchedulerConfig {
        weights,
        policy,
        max_improvement_rounds: o
            .max_rounds
            .or(file.max_improvement_rounds)
            .unwrap_or(defaults.max_improvement_rounds),
    };
    scheduler.validate()?;
    let cfg = SimConfig {
        scheduler,
        queue_mode,
        arrival_jitter_ns: o.jitter_ns.or(file.arrival_jitter_ns).unwrap_or(0),
    };
    Ok((cfg, o.seed.or(file.seed).unwrap_or(0)))
}

fn simulate(jobs: &[JobSpec], p: &Platform, cfg: &SimConfig, seed: u64) -> Result<SimOutcome> {
    log::info!(
        "simulating {} jobs on {} with {:?}",
        jobs.len(),
        p.name,
        cfg.scheduler.policy
    );
    Ok(run_simulation(jobs, p, cfg, seed)?)
}

pub fn run(a: RunArgs) -> Result<()> {
    let (cfg, seed) = resolve(&a.options, None)?;
    let p = platform(&a.platform)?;
    let jobs = workload(&a.workload)?;
    let out = simulate(&jobs, &p, &cfg, seed)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    output::write_json(&a.out.join("schedule.json"), &out.executed)?;
    fs::write(a.out.join("trace.log"), trace_to_jsonl(&out.trace))?;
    let metrics = output::rounded(&out.metrics);
    output::write_json(&a.out.join("metrics.json"), &metrics)?;
    output::write_gantt(&a.out.join("gantt.csv"), &out.executed)?;
    print!("{}", output::summary_table(&metrics)?);

    if a.strict && !out.executed.omitted.is_empty() {
        let ids = out.executed.omitted.iter().map(|o| o.job.to_string()).collect();
        return Err(Unschedulable(ids).into());
    }
    Ok(())
}

/// `PLATFORM` or `PLATFORM:POLICY`.
fn parse_run_id(id: &str) -> Result<(String, Option<PolicyArg>)> {
    match id.split_once(':') {
        None => Ok((id.to_string(), None)),
        Some((p, "interq")) => Ok((p.to_string(), Some(PolicyArg::Interq))),
        Some((p, "serial-rr")) => Ok((p.to_string(), Some(PolicyArg::SerialRr))),
        Some((_, other)) => bail!("unknown policy {other:?} in {id:?}"),
    }
}

pub fn compare(a: CompareArgs) -> Result<()> {
    ensure!(a.platforms.len() >= 2, "compare needs at least two configurations");
    let distinct: BTreeSet<&String> = a.platforms.iter().collect();
    ensure!(distinct.len() == a.platforms.len(), "configuration ids must be distinct");
    ensure!(
        a.platforms.contains(&a.baseline),
        "baseline {:?} is not among the configurations {:?}",
        a.baseline,
        a.platforms
    );
    let jobs = workload(&a.workload)?;
    let mut setups = Vec::new();
    for id in &a.platforms {
        let (name, policy) = parse_run_id(id)?;
        let (cfg, seed) = resolve(&a.options, policy)?;
        setups.push((id.clone(), platform(&name)?, cfg, seed));
    }

    let results: Vec<Result<SimOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = setups
            .iter()
            .map(|(_, p, cfg, seed)| s.spawn(|| simulate(&jobs, p, cfg, *seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut runs = Vec::new();
    for ((id, ..), r) in setups.iter().zip(results) {
        runs.push((id.clone(), r.with_context(|| format!("configuration {id}"))?));
    }

    let table = output::comparison(&runs, &a.baseline)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    output::write_comparison(&a.out.join("comparison.csv"), &table)?;
    print!("{}", output::comparison_text(&table));
    Ok(())
}

pub fn characterize(a: CharacterizeArgs) -> Result<()> {
    let p = platform(&a.platform)?;
    ensure!(
        p.supports(CommMode::Qcomm),
        "platform {} has no quantum links",
        a.platform
    );
    let jobs = workload(&a.workload)?;
    let max_cap = p.max_capacity();
    let rows: Vec<Characterization> = jobs
        .iter()
        .map(|j| {
            if j.qubits <= max_cap {
                return Characterization::whole(j);
            }
            let plan = intercomm_modes(j, &p)
                .into_iter()
                .find(|c| c.mode == CommMode::Qcomm);
            match plan {
                Some(c) => Characterization {
                    job: j.id.to_string(),
                    qubits: j.qubits,
                    partitions: c.plan.parts.len(),
                    remote_ops: c.plan.crossing_weight(),
                    extra_qubits: c.fragments.iter().map(|f| u64::from(f.ancillas())).sum(),
                    status: "partitioned".into(),
                },
                None => Characterization {
                    status: "unpartitionable".into(),
                    partitions: 0,
                    ..Characterization::whole(j)
                },
            }
        })
        .collect();
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    output::write_characterization(&a.out.join("characterize.csv"), &rows)?;
    for r in &rows {
        println!(
            "{:>8} {:>4}q  partitions {:>2}  remote ops {:>6}  extra qubits {:>3}  {}",
            r.job, r.qubits, r.partitions, r.remote_ops, r.extra_qubits, r.status
        );
    }
    Ok(())
}
