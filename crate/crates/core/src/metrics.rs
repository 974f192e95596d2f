//! Queue, timing and fidelity metrics of executed runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::remote_op_fidelity;
use crate::model::{FragmentName, JobId, JobSpec, ModuleProfile, Nanos, Platform, Schedule, Stage};
use crate::sim::{Event, EventKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("job {0} has fragments that never completed")]
    IncompleteJob(JobId),
    #[error("fidelity is zero")]
    ZeroFidelity,
    #[error("makespan is zero")]
    ZeroMakespan,
}

const NS_PER_S: f64 = 1.0e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub avg_queue_length: f64,
    pub avg_queue_time: f64,
    pub avg_run_time: f64,
    pub avg_total_time: f64,
    pub workload_changes: u64,
    pub trf: Option<f64>,
    pub tirf: Option<f64>,
    pub avg_tiif: f64,
    pub avg_lpst: f64,
    pub makespan: f64,
    pub jobs_completed: u64,
    pub jobs_omitted: u64,
}

/// Per-job timing in nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobTiming {
    pub job: JobId,
    pub arrival_ns: Nanos,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub wait_ns: Nanos,
    pub run_ns: Nanos,
    pub total_ns: Nanos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    /// Time-integral of waiting jobs over the makespan.
    pub avg_queue_length: f64,
    /// The same quantity by event-by-event replay.
    pub avg_queue_length_replay: f64,
    pub avg_queue_time: f64,
    pub avg_run_time: f64,
    pub avg_total_time: f64,
    pub workload_changes: u64,
    pub makespan_ns: Nanos,
    pub jobs: Vec<JobTiming>,
}

/// Job timings from a complete trace: first start and last fragment end.
pub fn job_timings(trace: &[Event]) -> Vec<JobTiming> {
    let mut arrival: BTreeMap<JobId, Nanos> = BTreeMap::new();
    let mut start: BTreeMap<JobId, Nanos> = BTreeMap::new();
    let mut end: BTreeMap<JobId, Nanos> = BTreeMap::new();
    for e in trace {
        match e.kind {
            EventKind::JobArrival => {
                if let Some(j) = &e.job {
                    arrival.entry(j.clone()).or_insert(e.time_ns);
                }
            }
            EventKind::GroupStart => {
                for j in &e.jobs {
                    start.entry(j.clone()).or_insert(e.time_ns);
                }
            }
            EventKind::FragmentEnd => {
                if let Some(j) = &e.job {
                    let t = end.entry(j.clone()).or_insert(e.time_ns);
                    *t = (*t).max(e.time_ns);
                }
            }
            _ => {}
        }
    }
    arrival
        .into_iter()
        .filter_map(|(job, a)| {
            let s = *start.get(&job)?;
            let e = *end.get(&job)?;
            Some(JobTiming {
                wait_ns: s - a,
                run_ns: e - s,
                total_ns: e - a,
                job,
                arrival_ns: a,
                start_ns: s,
                end_ns: e,
            })
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Queue statistics of a complete trace. Times are in seconds.
pub fn queue_stats(trace: &[Event]) -> QueueStats {
    let jobs = job_timings(trace);
    let workload_changes = trace
        .iter()
        .filter(|e| e.kind == EventKind::GroupStart)
        .count() as u64;
    let first = jobs.iter().map(|j| j.arrival_ns).min().unwrap_or(0);
    let last = jobs.iter().map(|j| j.end_ns).max().unwrap_or(0);
    let makespan_ns = last - first;

    let total_wait: Nanos = jobs.iter().map(|j| j.wait_ns).sum();
    let (integral, replay) = if makespan_ns == 0 {
        (0.0, 0.0)
    } else {
        (
            total_wait as f64 / makespan_ns as f64,
            replay_queue_integral(&jobs) as f64 / makespan_ns as f64,
        )
    };
    QueueStats {
        avg_queue_length: integral,
        avg_queue_length_replay: replay,
        avg_queue_time: mean(jobs.iter().map(|j| j.wait_ns as f64 / NS_PER_S)),
        avg_run_time: mean(jobs.iter().map(|j| j.run_ns as f64 / NS_PER_S)),
        avg_total_time: mean(jobs.iter().map(|j| j.total_ns as f64 / NS_PER_S)),
        workload_changes,
        makespan_ns,
        jobs,
    }
}

/// Steps through arrivals and starts in time order, accumulating
/// `waiting * dt`.
fn replay_queue_integral(jobs: &[JobTiming]) -> u128 {
    let mut steps: Vec<(Nanos, i64)> = Vec::with_capacity(jobs.len() * 2);
    for j in jobs {
        steps.push((j.arrival_ns, 1));
        steps.push((j.start_ns, -1));
    }
    steps.sort();
    let mut waiting: i64 = 0;
    let mut last = steps.first().map_or(0, |s| s.0);
    let mut area: u128 = 0;
    for (t, d) in steps {
        area += (waiting.max(0) as u128) * u128::from(t - last);
        waiting += d;
        last = t;
    }
    area
}

/// `F_2q^gates * F_meas^qubits` on one module.
pub fn local_fidelity(m: &ModuleProfile, two_qubit_gates: u64, measured: u32) -> f64 {
    (m.gate_fidelity_2q.ln() * two_qubit_gates as f64 + m.meas_fidelity.ln() * f64::from(measured))
        .exp()
}

/// Fidelity of the job run whole on its best module, ignoring capacity.
pub fn uncut_reference_fidelity(job: &JobSpec, platform: &Platform) -> f64 {
    platform
        .modules
        .iter()
        .map(|m| local_fidelity(m, job.two_qubit_gates(), job.qubits))
        .fold(0.0, f64::max)
}

/// Modeled end-to-end fidelity of one executed job: local gates and
/// measurements per fragment, one measurement plus one conditional gate per
/// charged cut, and `F^q` per remote operation (priced on the lower part's
/// module).
pub fn job_fidelity(job: &JobId, executed: &Schedule, platform: &Platform) -> Result<f64, MetricsError> {
    let placement = executed.placement();
    let times = executed.fragment_times();
    let frags: Vec<_> = executed.fragments.iter().filter(|f| &f.job_id() == job).collect();
    if frags.is_empty() {
        return Err(MetricsError::IncompleteJob(job.clone()));
    }
    let mut log_f = 0.0;
    for f in &frags {
        if !times.contains_key(&f.id) {
            return Err(MetricsError::IncompleteJob(job.clone()));
        }
        let m = placement
            .get(&f.id)
            .and_then(|id| platform.module(*id))
            .ok_or_else(|| MetricsError::IncompleteJob(job.clone()))?;
        if f.parent.is_none() {
            return Ok(local_fidelity(m, f.two_qubit_gates, f.data_qubits));
        }
        log_f += local_fidelity(m, f.two_qubit_gates, f.data_qubits).ln();
        log_f += f64::from(f.cut_penalties) * (m.meas_fidelity * m.gate_fidelity_2q).ln();
        if f.stage == Stage::Remote {
            let own = FragmentName::parse(f.id.as_str()).map_or(0, |n| n.index);
            for p in &f.partners {
                let other = FragmentName::parse(p.fragment.as_str()).map_or(0, |n| n.index);
                if own >= other {
                    continue;
                }
                let pm = placement
                    .get(&p.fragment)
                    .copied()
                    .ok_or_else(|| MetricsError::IncompleteJob(job.clone()))?;
                let link = platform
                    .quantum_link_between(m.id, pm)
                    .ok_or_else(|| MetricsError::IncompleteJob(job.clone()))?;
                let fq = remote_op_fidelity(link, m).map_err(|_| MetricsError::ZeroFidelity)?;
                log_f += f64::from(p.ops) * fq.ln();
            }
        }
    }
    Ok(log_f.exp())
}

/// Natural log of a fidelity.
pub fn lpst(fidelity: f64) -> Result<f64, MetricsError> {
    if fidelity > 0.0 {
        Ok(fidelity.ln())
    } else {
        Err(MetricsError::ZeroFidelity)
    }
}

/// `(trf, tirf, tiif)` of `run` against `baseline`.
pub fn comparative_factors(
    run: &MetricsReport,
    baseline: &MetricsReport,
) -> Result<(f64, f64, f64), MetricsError> {
    if run.makespan <= 0.0 || baseline.makespan <= 0.0 {
        return Err(MetricsError::ZeroMakespan);
    }
    let throughput = |r: &MetricsReport| r.jobs_completed as f64 / r.makespan;
    let trf = throughput(run) / throughput(baseline);
    let tirf = baseline.makespan / run.makespan;
    let tiif = if baseline.avg_tiif > 0.0 {
        run.avg_tiif / baseline.avg_tiif
    } else {
        0.0
    };
    Ok((trf, tirf, tiif))
}

impl MetricsReport {
    /// Fills `trf` and `tirf` against a baseline run.
    pub fn with_baseline(mut self, baseline: &MetricsReport) -> Result<Self, MetricsError> {
        let (trf, tirf, _) = comparative_factors(&self, baseline)?;
        self.trf = Some(trf);
        self.tirf = Some(tirf);
        Ok(self)
    }
}

/// Full report of one executed run.
pub fn report(
    workload: &[JobSpec],
    platform: &Platform,
    executed: &Schedule,
    trace: &[Event],
) -> Result<MetricsReport, MetricsError> {
    let q = queue_stats(trace);
    let jobs: BTreeMap<&JobId, &JobSpec> = workload.iter().map(|j| (&j.id, j)).collect();
    let mut tiif = Vec::with_capacity(q.jobs.len());
    let mut logs = Vec::with_capacity(q.jobs.len());
    for t in &q.jobs {
        let f = job_fidelity(&t.job, executed, platform)?;
        logs.push(lpst(f)?);
        if let Some(spec) = jobs.get(&t.job) {
            tiif.push(f / uncut_reference_fidelity(spec, platform));
        }
    }
    Ok(MetricsReport {
        avg_queue_length: q.avg_queue_length,
        avg_queue_time: q.avg_queue_time,
        avg_run_time: q.avg_run_time,
        avg_total_time: q.avg_total_time,
        workload_changes: q.workload_changes,
        trf: None,
        tirf: None,
        avg_tiif: mean(tiif.into_iter()),
        avg_lpst: mean(logs.into_iter()),
        makespan: q.makespan_ns as f64 / NS_PER_S,
        jobs_completed: q.jobs.len() as u64,
        jobs_omitted: executed.omitted.len() as u64,
    })
}
