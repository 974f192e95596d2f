//! Feasibility predicates, remote-operation cost and fidelity, group cost and
//! the schedule objective.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CostWeights, Fragment, FragmentId, FragmentPool, Group, LinkId, LinkProfile, ModuleId,
    ModuleProfile, Nanos, Placement, Platform, Schedule, Stage,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("fragment {fragment} needs {qubits} qubits, module {module} has {capacity}")]
    CapacityExceeded {
        fragment: FragmentId,
        module: ModuleId,
        qubits: u32,
        capacity: u32,
    },
    #[error("link {0} is not a quantum link")]
    NotQuantumLink(LinkId),
    #[error("group on {module} is infeasible: {verdict:?}")]
    InfeasibleGroup { module: ModuleId, verdict: Verdict },
    #[error("unknown fragment {0}")]
    UnknownFragment(FragmentId),
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
}

/// Outcome of the three feasibility predicates; the first violation is named.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Capacity { demand: u64, capacity: u32 },
    StageConflict { a: FragmentId, b: FragmentId },
    /// `link` is `None` when a remote partner is unreachable from the module.
    LinkBudget {
        link: Option<LinkId>,
        demand: u64,
        budget: u64,
    },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupCostBreakdown {
    pub a: f64,
    /// Synchronization delay in ns.
    pub b: f64,
    /// Communication pressure in ns.
    pub c: f64,
    pub h: f64,
    /// `Σ(Ω_cut - 1)`: zero for a group of uncut fragments.
    pub h_shifted: f64,
    pub total: f64,
}

/// `T = depth * layer_time + shots_effective * shot_overhead`.
pub fn fragment_runtime(f: &Fragment, m: &ModuleProfile) -> Result<Nanos, CostError> {
    if f.qubits > m.capacity {
        return Err(CostError::CapacityExceeded {
            fragment: f.id.clone(),
            module: m.id,
            qubits: f.qubits,
            capacity: m.capacity,
        });
    }
    Ok(u64::from(f.depth) * m.layer_time + f.shots_effective * m.shot_overhead)
}

/// `c^q = T_pair / p_succ + T_bell + T_corr`.
pub fn remote_op_cost(link: &LinkProfile) -> Result<f64, CostError> {
    if !link.is_quantum() {
        return Err(CostError::NotQuantumLink(link.id));
    }
    Ok(link.pair_time as f64 / link.succ_prob + link.bell_op_time as f64 + link.corr_time as f64)
}

/// `F^q = F_pair * F_2q * F_meas`.
pub fn remote_op_fidelity(link: &LinkProfile, m: &ModuleProfile) -> Result<f64, CostError> {
    if !link.is_quantum() {
        return Err(CostError::NotQuantumLink(link.id));
    }
    Ok(link.pair_fidelity * m.gate_fidelity_2q * m.meas_fidelity)
}

/// Link carrying the traffic between a fragment on `m` and one partner.
///
/// A placed partner needs the direct link; an unplaced one is charged to the
/// cheapest quantum link at `m`.
fn partner_link<'a>(
    platform: &'a Platform,
    m: ModuleId,
    partner: Option<ModuleId>,
) -> Option<&'a LinkProfile> {
    match partner {
        Some(pm) => platform.quantum_link_between(m, pm),
        None => platform.cheapest_incident_quantum_link(m),
    }
}

/// Bell-pair demand per link of one fragment placed on `m`.
///
/// Returns `Err(())` when a partner is unreachable.
fn resolved_demand(
    f: &Fragment,
    m: ModuleId,
    placement: &Placement,
    platform: &Platform,
) -> Result<BTreeMap<LinkId, u64>, ()> {
    let mut out = BTreeMap::new();
    if f.partners.is_empty() {
        for (l, d) in &f.bell_demand {
            *out.entry(*l).or_default() += u64::from(*d);
        }
        return Ok(out);
    }
    for p in &f.partners {
        let link = partner_link(platform, m, placement.get(&p.fragment).copied()).ok_or(())?;
        *out.entry(link.id).or_default() += u64::from(p.ops);
    }
    Ok(out)
}

fn resolve<'a>(pool: &'a FragmentPool, id: &FragmentId) -> Result<&'a Fragment, CostError> {
    pool.get(id).ok_or_else(|| CostError::UnknownFragment(id.clone()))
}

/// Capacity, stage and link-budget predicates for `g` on its module.
///
/// Besides differing stages of one job, two REMOTE siblings sharing a group
/// or a module are a stage conflict: they must run concurrently on distinct
/// modules.
pub fn check_group_feasible(
    g: &Group,
    pool: &FragmentPool,
    placement: &Placement,
    platform: &Platform,
) -> Result<Verdict, CostError> {
    let m = platform
        .module(g.module)
        .ok_or(CostError::UnknownModule(g.module))?;
    let frags = g
        .fragments
        .iter()
        .map(|id| resolve(pool, id))
        .collect::<Result<Vec<_>, _>>()?;

    let demand: u64 = frags.iter().map(|f| u64::from(f.qubits)).sum();
    if demand > u64::from(m.capacity) {
        return Ok(Verdict::Capacity {
            demand,
            capacity: m.capacity,
        });
    }

    for (i, x) in frags.iter().enumerate() {
        for y in &frags[i + 1..] {
            if x.parent.is_some()
                && x.parent == y.parent
                && (x.stage != y.stage || x.stage == Stage::Remote)
            {
                return Ok(Verdict::StageConflict {
                    a: x.id.clone(),
                    b: y.id.clone(),
                });
            }
        }
        for p in &x.partners {
            if placement.get(&p.fragment) == Some(&g.module) && !g.fragments.contains(&p.fragment)
            {
                return Ok(Verdict::StageConflict {
                    a: x.id.clone(),
                    b: p.fragment.clone(),
                });
            }
        }
    }

    let mut per_link: BTreeMap<LinkId, u64> = BTreeMap::new();
    for f in &frags {
        match resolved_demand(f, g.module, placement, platform) {
            Ok(d) => {
                for (l, n) in d {
                    *per_link.entry(l).or_default() += n;
                }
            }
            Err(()) => {
                return Ok(Verdict::LinkBudget {
                    link: None,
                    demand: u64::from(f.remote_ops),
                    budget: 0,
                })
            }
        }
    }
    for (l, demand) in per_link {
        let budget = platform.link(l).map_or(0, LinkProfile::effective_budget);
        if demand > budget {
            return Ok(Verdict::LinkBudget {
                link: Some(l),
                demand,
                budget,
            });
        }
    }
    Ok(Verdict::Feasible)
}

/// Residual synchronization slack per DOWNSTREAM fragment, once start times
/// are known. Fragments absent from the map are charged their full delay.
pub type SyncSlack = BTreeMap<FragmentId, Nanos>;

/// Reference time that brings `b` and `c` to the scale of the dimensionless terms.
pub fn normalization_ns(platform: &Platform) -> f64 {
    (platform.max_layer_time().max(1) as f64) * 1000.0
}

/// Group cost `d = α a + β b' + γ c' + η h` on `g.module`.
pub fn group_cost(
    g: &Group,
    pool: &FragmentPool,
    placement: &Placement,
    platform: &Platform,
    w: &CostWeights,
    slack: Option<&SyncSlack>,
) -> Result<GroupCostBreakdown, CostError> {
    let verdict = check_group_feasible(g, pool, placement, platform)?;
    if !verdict.is_feasible() {
        return Err(CostError::InfeasibleGroup {
            module: g.module,
            verdict,
        });
    }
    let m = platform
        .module(g.module)
        .ok_or(CostError::UnknownModule(g.module))?;
    let frags = g
        .fragments
        .iter()
        .map(|id| resolve(pool, id))
        .collect::<Result<Vec<_>, _>>()?;
    if frags.is_empty() {
        return Ok(GroupCostBreakdown {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            h: 0.0,
            h_shifted: 0.0,
            total: 0.0,
        });
    }

    let runtimes = frags
        .iter()
        .map(|f| fragment_runtime(f, m))
        .collect::<Result<Vec<_>, _>>()?;
    let max_t = *runtimes.iter().max().expect("non-empty") as f64;
    let min_t = *runtimes.iter().min().expect("non-empty") as f64;
    let a = if min_t > 0.0 { max_t / min_t - 1.0 } else { 0.0 };

    let mut b = 0.0;
    for f in &frags {
        if f.precedence_in.is_empty() {
            continue;
        }
        b += match slack.and_then(|s| s.get(&f.id)) {
            Some(&s) => s as f64,
            None => f.precedence_in.iter().map(|p| p.delay_ns as f64).sum(),
        };
    }

    let fallback = platform.cheapest_quantum_link();
    let mut c = 0.0;
    for f in &frags {
        if f.partners.is_empty() {
            c += f.comm_cost;
            continue;
        }
        for p in &f.partners {
            let link = match placement.get(&p.fragment) {
                Some(&pm) => platform.quantum_link_between(g.module, pm),
                None => fallback,
            };
            if let Some(link) = link {
                c += f64::from(p.ops) * remote_op_cost(link)?;
            }
        }
    }

    let h: f64 = frags.iter().map(|f| f.cut_overhead).sum();
    let h_shifted: f64 = frags.iter().map(|f| f.cut_overhead - 1.0).sum();

    let norm = normalization_ns(platform);
    let total = w.alpha * a + w.beta * (b / norm) + w.gamma * (c / norm) + w.eta * h;
    Ok(GroupCostBreakdown {
        a,
        b,
        c,
        h,
        h_shifted,
        total,
    })
}

/// Residual slack of every gated fragment in `s`: `end(u) + Δ - release`,
/// clamped to `[0, Δ]`, summed over its predecessors.
pub fn realized_slack(s: &Schedule) -> SyncSlack {
    let times = s.fragment_times();
    let pool = s.pool();
    let mut out = SyncSlack::new();
    for e in &s.entries {
        for id in &e.group.fragments {
            let Some(f) = pool.get(id) else { continue };
            if f.precedence_in.is_empty() {
                continue;
            }
            let mut total = 0;
            for p in &f.precedence_in {
                let end_u = times.get(&p.from).map_or(0, |t| t.1);
                let ready = end_u + p.delay_ns;
                total += ready.saturating_sub(e.release_ns).min(p.delay_ns);
            }
            out.insert(id.clone(), total);
        }
    }
    out
}

/// Per-group cost totals of a timed schedule, in entry order.
pub fn group_costs(
    s: &Schedule,
    platform: &Platform,
    w: &CostWeights,
) -> Result<Vec<GroupCostBreakdown>, CostError> {
    let pool = s.pool();
    let placement = s.placement();
    let slack = realized_slack(s);
    s.entries
        .iter()
        .map(|e| group_cost(&e.group, &pool, &placement, platform, w, Some(&slack)))
        .collect()
}

/// `Z = Σ d(g, m)` over the groups of `s`.
pub fn schedule_objective(s: &Schedule, platform: &Platform, w: &CostWeights) -> Result<f64, CostError> {
    Ok(group_costs(s, platform, w)?.iter().map(|c| c.total).sum())
}

/// Modules hosting the REMOTE siblings of each job.
pub fn sibling_modules(pool: &FragmentPool, placement: &Placement) -> BTreeMap<String, BTreeSet<ModuleId>> {
    let mut out: BTreeMap<String, BTreeSet<ModuleId>> = BTreeMap::new();
    for (id, m) in placement {
        if let Some(f) = pool.get(id) {
            if f.stage == Stage::Remote {
                out.entry(f.job_id().0).or_default().insert(*m);
            }
        }
    }
    out
}
