//! Capacity-targeted recursive bisection with Kernighan-Lin refinement.
//!
//! Each split grows one side from the lowest-index vertex (always taking the
//! unassigned vertex most strongly connected to the grown side), then improves
//! the cut with size-preserving KL swaps. Every choice breaks ties by the lowest
//! qubit index, so the result is a pure function of the input.

use crate::model::Edge;

const MAX_KL_PASSES: usize = 16;

/// Dense symmetric weight matrix over the qubits of one job.
pub(crate) struct WeightMatrix {
    n: usize,
    w: Vec<u64>,
}

impl WeightMatrix {
    pub(crate) fn new(qubits: u32, edges: &[Edge]) -> Self {
        let n = qubits as usize;
        let mut w = vec![0u64; n * n];
        for e in edges {
            let (a, b) = (e.a as usize, e.b as usize);
            w[a * n + b] += u64::from(e.weight);
            w[b * n + a] += u64::from(e.weight);
        }
        Self { n, w }
    }

    #[inline]
    pub(crate) fn get(&self, a: u32, b: u32) -> u64 {
        self.w[a as usize * self.n + b as usize]
    }
}

/// Splits `nodes` into `targets.len()` parts, part `i` holding at most `targets[i]`
/// qubits. Returns `None` when the targets cannot hold the nodes.
pub(crate) fn split(w: &WeightMatrix, nodes: &[u32], targets: &[u32]) -> Option<Vec<Vec<u32>>> {
    let total: u64 = targets.iter().map(|&t| u64::from(t)).sum();
    if (nodes.len() as u64) > total || targets.is_empty() {
        return None;
    }
    if targets.len() == 1 {
        return Some(vec![nodes.to_vec()]);
    }

    let k = targets.len().div_ceil(2);
    let (left, right) = targets.split_at(k);
    let cap_l: u64 = left.iter().map(|&t| u64::from(t)).sum();
    let cap_r: u64 = right.iter().map(|&t| u64::from(t)).sum();
    let n = nodes.len() as u64;
    let proportional = (n as f64 * cap_l as f64 / (cap_l + cap_r) as f64).round() as u64;
    let size_l = proportional.clamp(n.saturating_sub(cap_r), cap_l.min(n)) as usize;

    let (a, b) = bisect(w, nodes, size_l);
    let mut parts = split(w, &a, left)?;
    parts.extend(split(w, &b, right)?);
    Some(parts)
}

/// Two-way split with `|A| = size_a`, minimizing crossing weight heuristically.
pub(crate) fn bisect(w: &WeightMatrix, nodes: &[u32], size_a: usize) -> (Vec<u32>, Vec<u32>) {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mut in_a = vec![false; n];

    // Graph growing.
    let mut conn = vec![0u64; n];
    for _ in 0..size_a {
        let pick = (0..n)
            .filter(|&i| !in_a[i])
            .max_by(|&x, &y| conn[x].cmp(&conn[y]).then(y.cmp(&x)))
            .expect("size_a never exceeds node count");
        in_a[pick] = true;
        for j in 0..n {
            conn[j] += w.get(sorted[pick], sorted[j]);
        }
    }

    kernighan_lin(w, &sorted, &mut in_a);

    let a = (0..n).filter(|&i| in_a[i]).map(|i| sorted[i]).collect();
    let b = (0..n).filter(|&i| !in_a[i]).map(|i| sorted[i]).collect();
    (a, b)
}

fn kernighan_lin(w: &WeightMatrix, nodes: &[u32], in_a: &mut [bool]) {
    let n = nodes.len();
    for _ in 0..MAX_KL_PASSES {
        // D(v) = external - internal connection weight.
        let mut d: Vec<i64> = (0..n)
            .map(|i| {
                (0..n).fold(0i64, |acc, j| {
                    let wij = w.get(nodes[i], nodes[j]) as i64;
                    if i == j {
                        acc
                    } else if in_a[i] == in_a[j] {
                        acc - wij
                    } else {
                        acc + wij
                    }
                })
            })
            .collect();
        let mut locked = vec![false; n];
        let steps = in_a.iter().filter(|&&x| x).count().min(n - in_a.iter().filter(|&&x| x).count());
        let mut swaps = Vec::with_capacity(steps);
        let mut cumulative = 0i64;
        let mut best = (0i64, 0usize);

        for _ in 0..steps {
            let mut choice: Option<(i64, usize, usize)> = None;
            for a in (0..n).filter(|&i| in_a[i] && !locked[i]) {
                for b in (0..n).filter(|&j| !in_a[j] && !locked[j]) {
                    let gain = d[a] + d[b] - 2 * w.get(nodes[a], nodes[b]) as i64;
                    if choice.map_or(true, |(g, _, _)| gain > g) {
                        choice = Some((gain, a, b));
                    }
                }
            }
            let Some((gain, a, b)) = choice else { break };
            locked[a] = true;
            locked[b] = true;
            for x in (0..n).filter(|&i| !locked[i]) {
                let wa = w.get(nodes[x], nodes[a]) as i64;
                let wb = w.get(nodes[x], nodes[b]) as i64;
                if in_a[x] {
                    d[x] += 2 * wa - 2 * wb;
                } else {
                    d[x] += 2 * wb - 2 * wa;
                }
            }
            swaps.push((a, b));
            cumulative += gain;
            if cumulative > best.0 {
                best = (cumulative, swaps.len());
            }
        }

        if best.0 <= 0 {
            break;
        }
        for &(a, b) in &swaps[..best.1] {
            in_a[a] = false;
            in_a[b] = true;
        }
    }
}

/// Total weight of edges whose endpoints fall in different parts.
#[cfg(test)]
pub(crate) fn crossing_weight(edges: &[Edge], part_of: &[usize]) -> u64 {
    edges
        .iter()
        .filter(|e| part_of[e.a as usize] != part_of[e.b as usize])
        .map(|e| u64::from(e.weight))
        .sum()
}
