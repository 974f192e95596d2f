//! Python bindings: platforms, jobs, scheduling, simulation and metrics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use interq_core::metrics::{comparative_factors, lpst as core_lpst, MetricsReport};
use interq_core::partition;
use interq_core::scheduler::{schedule_interq, schedule_serial_rr, Policy, SchedulerConfig};
use interq_core::sim::{run_simulation, trace_to_jsonl, QueueMode, SimConfig, SimOutcome};
use interq_core::workload::{self, RandomWorkload};
use interq_core::{CommMode, CostWeights, Edge, JobSpec, Platform, Schedule};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(s: &str) -> PyResult<CommMode> {
    match s.to_ascii_uppercase().as_str() {
        "LO" => Ok(CommMode::Lo),
        "LOCC" => Ok(CommMode::Locc),
        "QCOMM" => Ok(CommMode::Qcomm),
        _ => Err(PyValueError::new_err(format!("unknown mode: {s}"))),
    }
}

fn parse_policy(s: &str) -> PyResult<Policy> {
    match s {
        "interq" => Ok(Policy::Interq),
        "serial-rr" | "serial_rr" => Ok(Policy::SerialRr),
        _ => Err(PyValueError::new_err(format!("unknown policy: {s}"))),
    }
}

fn config(policy: &str, weights: (f64, f64, f64, f64)) -> PyResult<SchedulerConfig> {
    let (a, b, c, h) = weights;
    Ok(SchedulerConfig {
        weights: CostWeights::new(a, b, c, h).map_err(err)?,
        policy: parse_policy(policy)?,
        ..SchedulerConfig::default()
    })
}

/// Modules, links and budgets of a modular machine.
#[pyclass(name = "Platform", module = "interq")]
#[derive(Clone)]
struct PyPlatform {
    inner: Platform,
}

#[pymethods]
impl PyPlatform {
    /// One of `IBM_LOCC`, `IONQ_QCOMM`, `ATOMIC_QCOMM`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: workload::platform_preset(name).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let p: Platform = serde_json_text(text)?;
        Ok(Self {
            inner: p.validate().map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn capacities(&self) -> Vec<u32> {
        self.inner.modules.iter().map(|m| m.capacity).collect()
    }

    #[getter]
    fn comm_mode(&self) -> String {
        self.inner.comm_mode.to_string()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Platform({:?}, modules={})", self.inner.name, self.inner.modules.len())
    }
}

fn serde_json_text<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(err)
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(err)
}

/// A circuit job: width, depth, shots and weighted interaction edges.
#[pyclass(name = "Job", module = "interq")]
#[derive(Clone)]
struct PyJob {
    inner: JobSpec,
}

#[pymethods]
impl PyJob {
    #[new]
    #[pyo3(signature = (id, qubits, depth, shots, edges, modes=None, arrival_ns=0))]
    fn new(
        id: String,
        qubits: u32,
        depth: u32,
        shots: u64,
        edges: Vec<(u32, u32, u32)>,
        modes: Option<Vec<String>>,
        arrival_ns: u64,
    ) -> PyResult<Self> {
        let modes = match modes {
            Some(ms) => ms.iter().map(|m| parse_mode(m)).collect::<PyResult<_>>()?,
            None => CommMode::ALL.to_vec(),
        };
        let inner = JobSpec {
            id: id.into(),
            qubits,
            depth,
            shots,
            edges: edges.into_iter().map(|(a, b, w)| Edge::new(a, b, w)).collect(),
            modes,
            arrival_ns,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.to_string()
    }

    #[getter]
    fn qubits(&self) -> u32 {
        self.inner.qubits
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth
    }

    #[getter]
    fn shots(&self) -> u64 {
        self.inner.shots
    }

    #[getter]
    fn edges(&self) -> Vec<(u32, u32, u32)> {
        self.inner.edges.iter().map(|e| (e.a, e.b, e.weight)).collect()
    }

    #[getter]
    fn arrival_ns(&self) -> u64 {
        self.inner.arrival_ns
    }

    fn __repr__(&self) -> String {
        format!("Job({:?}, qubits={})", self.inner.id.as_str(), self.inner.qubits)
    }
}

fn specs(jobs: &[PyJob]) -> Vec<JobSpec> {
    jobs.iter().map(|j| j.inner.clone()).collect()
}

fn wrap(jobs: Vec<JobSpec>) -> Vec<PyJob> {
    jobs.into_iter().map(|inner| PyJob { inner }).collect()
}

/// Timed groups, link reservations and omissions.
#[pyclass(name = "Schedule", module = "interq")]
#[derive(Clone)]
struct PySchedule {
    inner: Schedule,
}

#[pymethods]
impl PySchedule {
    #[getter]
    fn makespan_ns(&self) -> u64 {
        self.inner.makespan_end()
    }

    /// `(module, start_ns, end_ns, fragment ids)` per group.
    #[getter]
    fn entries(&self) -> Vec<(u32, u64, u64, Vec<String>)> {
        self.inner
            .entries
            .iter()
            .map(|e| {
                (
                    e.group.module.0,
                    e.start_ns,
                    e.end_ns(),
                    e.group.fragments.iter().map(|f| f.to_string()).collect(),
                )
            })
            .collect()
    }

    #[getter]
    fn omitted(&self) -> Vec<String> {
        self.inner.omitted.iter().map(|o| o.job.to_string()).collect()
    }

    #[getter]
    fn jobs(&self) -> Vec<String> {
        self.inner.scheduled_jobs().into_iter().map(|j| j.to_string()).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

/// Queue, time, throughput and fidelity figures of one run.
#[pyclass(name = "Metrics", module = "interq")]
#[derive(Clone)]
struct PyMetrics {
    inner: MetricsReport,
}

#[pymethods]
impl PyMetrics {
    #[getter]
    fn jobs_completed(&self) -> u64 {
        self.inner.jobs_completed
    }

    #[getter]
    fn jobs_omitted(&self) -> u64 {
        self.inner.jobs_omitted
    }

    #[getter]
    fn makespan(&self) -> f64 {
        self.inner.makespan
    }

    #[getter]
    fn avg_queue_time(&self) -> f64 {
        self.inner.avg_queue_time
    }

    #[getter]
    fn avg_run_time(&self) -> f64 {
        self.inner.avg_run_time
    }

    #[getter]
    fn avg_total_time(&self) -> f64 {
        self.inner.avg_total_time
    }

    #[getter]
    fn avg_queue_length(&self) -> f64 {
        self.inner.avg_queue_length
    }

    #[getter]
    fn workload_changes(&self) -> u64 {
        self.inner.workload_changes
    }

    #[getter]
    fn avg_tiif(&self) -> f64 {
        self.inner.avg_tiif
    }

    #[getter]
    fn avg_lpst(&self) -> f64 {
        self.inner.avg_lpst
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = &self.inner;
        let d = PyDict::new_bound(py);
        d.set_item("avg_queue_length", m.avg_queue_length)?;
        d.set_item("avg_queue_time", m.avg_queue_time)?;
        d.set_item("avg_run_time", m.avg_run_time)?;
        d.set_item("avg_total_time", m.avg_total_time)?;
        d.set_item("workload_changes", m.workload_changes)?;
        d.set_item("trf", m.trf)?;
        d.set_item("tirf", m.tirf)?;
        d.set_item("avg_tiif", m.avg_tiif)?;
        d.set_item("avg_lpst", m.avg_lpst)?;
        d.set_item("makespan", m.makespan)?;
        d.set_item("jobs_completed", m.jobs_completed)?;
        d.set_item("jobs_omitted", m.jobs_omitted)?;
        Ok(d)
    }
}

/// Executed schedule, event trace, metrics and Bell-pair counters.
#[pyclass(name = "SimResult", module = "interq")]
struct PySimResult {
    inner: SimOutcome,
}

#[pymethods]
impl PySimResult {
    #[getter]
    fn schedule(&self) -> PySchedule {
        PySchedule {
            inner: self.inner.executed.clone(),
        }
    }

    #[getter]
    fn planned(&self) -> PySchedule {
        PySchedule {
            inner: self.inner.planned.clone(),
        }
    }

    #[getter]
    fn metrics(&self) -> PyMetrics {
        PyMetrics {
            inner: self.inner.metrics.clone(),
        }
    }

    /// `(generated, consumed, expired, live)`.
    #[getter]
    fn pairs(&self) -> (u64, u64, u64, u64) {
        let p = self.inner.pairs;
        (p.generated, p.consumed, p.expired, p.live)
    }

    fn trace_jsonl(&self) -> String {
        trace_to_jsonl(&self.inner.trace)
    }
}

#[pyfunction]
fn load_workload(path: &str) -> PyResult<Vec<PyJob>> {
    Ok(wrap(workload::load_workload(path).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (n, widths=(2, 160), depths=(1, 100), shots=1000, seed=0))]
fn random_workload(n: usize, widths: (u32, u32), depths: (u32, u32), shots: u64, seed: u64) -> Vec<PyJob> {
    let cfg = RandomWorkload::new(n, widths.0..=widths.1, depths.0..=depths.1, shots, seed);
    wrap(workload::generate_random_workload(&cfg))
}

/// Plans `jobs` without executing them.
#[pyfunction]
#[pyo3(signature = (jobs, platform, policy="interq", weights=(1.0, 1.0, 1.0, 1.0)))]
fn schedule(
    jobs: Vec<PyJob>,
    platform: &PyPlatform,
    policy: &str,
    weights: (f64, f64, f64, f64),
) -> PyResult<PySchedule> {
    let cfg = config(policy, weights)?;
    let jobs = specs(&jobs);
    let inner = match cfg.policy {
        Policy::Interq => schedule_interq(&jobs, &platform.inner, &cfg).map_err(err)?.schedule,
        Policy::SerialRr => schedule_serial_rr(&jobs, &platform.inner),
    };
    Ok(PySchedule { inner })
}

/// Plans and executes `jobs` in the discrete-event simulator.
#[pyfunction]
#[pyo3(signature = (jobs, platform, policy="interq", seed=0, event_driven=false, weights=(1.0, 1.0, 1.0, 1.0)))]
fn simulate(
    py: Python<'_>,
    jobs: Vec<PyJob>,
    platform: &PyPlatform,
    policy: &str,
    seed: u64,
    event_driven: bool,
    weights: (f64, f64, f64, f64),
) -> PyResult<PySimResult> {
    let cfg = SimConfig {
        scheduler: config(policy, weights)?,
        queue_mode: if event_driven {
            QueueMode::EventDriven
        } else {
            QueueMode::Batch
        },
        arrival_jitter_ns: 0,
    };
    let jobs = specs(&jobs);
    let p = platform.inner.clone();
    let inner = py
        .allow_threads(|| run_simulation(&jobs, &p, &cfg, seed))
        .map_err(err)?;
    Ok(PySimResult { inner })
}

/// `(trf, tirf, tiif)` of `run` against `baseline`.
#[pyfunction]
fn compare(run: &PyMetrics, baseline: &PyMetrics) -> PyResult<(f64, f64, f64)> {
    comparative_factors(&run.inner, &baseline.inner).map_err(err)
}

#[pyfunction]
fn lo_cut_overhead(k_wire: u32, k_gate: u32) -> PyResult<f64> {
    partition::lo_cut_overhead(k_wire, k_gate).map_err(err)
}

#[pyfunction]
fn locc_cut_overhead(k_wire: u32) -> PyResult<f64> {
    partition::locc_cut_overhead(k_wire).map_err(err)
}

#[pyfunction]
fn lpst(fidelity: f64) -> PyResult<f64> {
    core_lpst(fidelity).map_err(err)
}

#[pymodule]
fn interq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPlatform>()?;
    m.add_class::<PyJob>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PySimResult>()?;
    m.add_function(wrap_pyfunction!(load_workload, m)?)?;
    m.add_function(wrap_pyfunction!(random_workload, m)?)?;
    m.add_function(wrap_pyfunction!(schedule, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(lo_cut_overhead, m)?)?;
    m.add_function(wrap_pyfunction!(locc_cut_overhead, m)?)?;
    m.add_function(wrap_pyfunction!(lpst, m)?)?;
    Ok(())
}
