#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use interq_core::{FragmentId, LinkId, ModuleId, Platform, Schedule, Stage};

/// Independent feasibility check of a timed schedule. Returns one line per
/// violation.
pub fn violations(s: &Schedule, platform: &Platform) -> Vec<String> {
    let mut out = Vec::new();
    let pool: BTreeMap<&FragmentId, _> = s.fragments.iter().map(|f| (&f.id, f)).collect();
    let mut module_of: BTreeMap<&FragmentId, ModuleId> = BTreeMap::new();
    let mut seen: BTreeSet<&FragmentId> = BTreeSet::new();

    for e in &s.entries {
        for id in &e.group.fragments {
            if !seen.insert(id) {
                out.push(format!("{id} scheduled twice"));
            }
            module_of.insert(id, e.group.module);
        }
    }
    for f in &s.fragments {
        if !seen.contains(&f.id) {
            out.push(format!("{} never scheduled", f.id));
        }
    }

    for (k, e) in s.entries.iter().enumerate() {
        let Some(m) = platform.modules.iter().find(|m| m.id == e.group.module) else {
            out.push(format!("group {k} on unknown module"));
            continue;
        };
        let frags: Vec<_> = e.group.fragments.iter().filter_map(|id| pool.get(id)).collect();
        let demand: u32 = frags.iter().map(|f| f.qubits).sum();
        if demand > m.capacity {
            out.push(format!("group {k}: {demand} qubits on {}", m.capacity));
        }
        for (i, a) in frags.iter().enumerate() {
            for b in &frags[i + 1..] {
                if a.parent.is_some() && a.parent == b.parent {
                    let remote_pair = a.stage == Stage::Remote && b.stage == Stage::Remote;
                    if a.stage != b.stage || remote_pair {
                        out.push(format!("group {k}: {} with {}", a.id, b.id));
                    }
                }
            }
        }
        let mut per_link: BTreeMap<LinkId, u64> = BTreeMap::new();
        for f in &frags {
            if f.partners.is_empty() {
                for (l, d) in &f.bell_demand {
                    *per_link.entry(*l).or_default() += u64::from(*d);
                }
            }
            for p in &f.partners {
                let Some(&pm) = module_of.get(&p.fragment) else {
                    out.push(format!("{}: partner {} unplaced", f.id, p.fragment));
                    continue;
                };
                match platform
                    .links
                    .iter()
                    .find(|l| l.is_quantum() && l.connects(m.id, pm))
                {
                    Some(l) => *per_link.entry(l.id).or_default() += u64::from(p.ops),
                    None => out.push(format!("{}: no quantum link to {}", f.id, p.fragment)),
                }
            }
        }
        for (l, d) in per_link {
            let budget = platform.links.iter().find(|x| x.id == l).map(|x| x.effective_budget());
            if Some(d) > budget {
                out.push(format!("group {k}: link {l} demand {d} over {budget:?}"));
            }
        }
        if e.fragment_ends.iter().any(|(_, t)| *t < e.start_ns) {
            out.push(format!("group {k} ends before it starts"));
        }
        for f in &frags {
            if e.start_ns < f.arrival_ns {
                out.push(format!("{} starts before arrival", f.id));
            }
        }
    }

    let mut by_module: BTreeMap<ModuleId, Vec<(u64, u64)>> = BTreeMap::new();
    for e in &s.entries {
        by_module
            .entry(e.group.module)
            .or_default()
            .push((e.start_ns, e.end_ns()));
    }
    for (m, mut spans) in by_module {
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                out.push(format!("module {m}: {:?} overlaps {:?}", w[0], w[1]));
            }
        }
    }

    let times = s.fragment_times();
    for f in &s.fragments {
        for p in &f.precedence_in {
            match (times.get(&p.from), times.get(&f.id)) {
                (Some(&(_, end_u)), Some(&(start_v, _))) => {
                    if start_v < end_u + p.delay_ns {
                        out.push(format!(
                            "{} starts at {start_v} before {} + {}",
                            f.id, end_u, p.delay_ns
                        ));
                    }
                }
                _ => out.push(format!("{}: predecessor {} missing", f.id, p.from)),
            }
        }
    }

    for (l, rs) in &s.link_reservations {
        let Some(link) = platform.links.iter().find(|x| x.id == *l) else {
            out.push(format!("reservation on unknown link {l}"));
            continue;
        };
        let mut points: Vec<(u64, i64)> = Vec::new();
        for r in rs {
            if r.end_ns > r.start_ns {
                points.push((r.start_ns, 1));
                points.push((r.end_ns, -1));
            }
        }
        points.sort_by_key(|&(t, d)| (t, d));
        let mut live = 0i64;
        for (t, d) in points {
            live += d;
            if live > i64::from(link.parallelism) {
                out.push(format!("link {l}: {live} slots at {t}"));
                break;
            }
        }
    }
    out
}

