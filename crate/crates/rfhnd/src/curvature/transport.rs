//! Exact 1-Wasserstein distance via the transportation simplex.

use crate::curvature::metric::MetricOracle;
use crate::{Error, Result};

/// Probability measure on a small set of nodes. Support indices are distinct
/// and sorted; masses are nonnegative and sum to 1 (within 1e-12).
#[derive(Debug, Clone)]
pub struct NodeMeasure {
    pub support: Vec<u32>,
    pub mass: Vec<f64>,
}

impl NodeMeasure {
    pub fn new(support: Vec<u32>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::DimensionMismatch {
                context: format!("support {} vs mass {}", support.len(), mass.len()),
            });
        }
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]), "support must be sorted distinct");
        let total: f64 = mass.iter().sum();
        if mass.iter().any(|&m| m < -1e-12) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig {
                message: format!("measure masses sum to {total}, expected 1"),
            });
        }
        Ok(NodeMeasure { support, mass })
    }

    pub fn dirac(node: u32) -> Self {
        NodeMeasure { support: vec![node], mass: vec![1.0] }
    }
}

/// Exact optimal transport cost between `a` and `b` under the hop metric.
pub fn wasserstein1(a: &NodeMeasure, b: &NodeMeasure, metric: &MetricOracle) -> Result<f64> {
    let mut cost = vec![0.0f64; a.support.len() * b.support.len()];
    let cols = b.support.len();
    for (p, &s) in a.support.iter().enumerate() {
        let row = metric.distances_from(s as usize);
        for (q, &t) in b.support.iter().enumerate() {
            let d = row[t as usize];
            if d == super::metric::UNREACHABLE {
                return Err(Error::UnreachablePair { a: s as usize, b: t as usize });
            }
            cost[p * cols + q] = f64::from(d);
        }
    }
    Ok(transport_cost(&a.mass, &b.mass, &cost))
}

/// Minimum cost of the balanced transportation problem with supplies `p`,
/// demands `q` (both summing to the same total) and a dense row-major cost
/// matrix. Solved exactly by the transportation simplex: northwest-corner
/// start, tree potentials, cycle pivots.
pub fn transport_cost(p: &[f64], q: &[f64], cost: &[f64]) -> f64 {
    let m = p.len();
    let n = q.len();
    assert_eq!(cost.len(), m * n);
    if m == 0 || n == 0 {
        return 0.0;
    }

    // Basic cells as (row, col, flow). Northwest corner yields m + n - 1 of
    // them, possibly with degenerate zero flows.
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    {
        let mut a = p.to_vec();
        let mut b = q.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        while basis.len() < m + n - 1 {
            let f = a[i].min(b[j]).max(0.0);
            basis.push((i, j, f));
            a[i] -= f;
            b[j] -= f;
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut in_basis = vec![false; m * n];
    for &(i, j, _) in &basis {
        in_basis[i * n + j] = true;
    }

    let max_pivots = 1000 * (m + n) * (m + n);
    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; n];
    let mut bland = false;
    for pivot in 0.. {
        if pivot >= max_pivots {
            debug_assert!(false, "transportation simplex exceeded pivot budget");
            break;
        }
        // Pivots near the budget switch to Bland's rule to rule out cycling.
        if pivot > 50 * (m + n) {
            bland = true;
        }
        compute_potentials(&basis, cost, m, n, &mut u, &mut v);

        // Entering cell: most negative reduced cost (Bland: first negative).
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -1e-12;
        'scan: for i in 0..m {
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                let r = cost[i * n + j] - u[i] - v[j];
                if r < best {
                    best = r;
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else { break };

        // The entering cell gains flow; walking the tree path back from its
        // row, even positions lose and odd positions gain.
        let cycle = find_cycle(&basis, m, n, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                let f = basis[cell].2;
                if f < theta - 1e-18 {
                    theta = f;
                    leave_pos = cell;
                }
            }
        }
        debug_assert!(leave_pos != usize::MAX);
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                basis[cell].2 -= theta;
            } else {
                basis[cell].2 += theta;
            }
        }
        let (li, lj, _) = basis[leave_pos];
        in_basis[li * n + lj] = false;
        in_basis[ei * n + ej] = true;
        basis[leave_pos] = (ei, ej, theta);
    }

    basis.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum()
}

/// Solve u_i + v_j = c_ij over the basis tree, anchored at u_0 = 0.
fn compute_potentials(
    basis: &[(usize, usize, f64)],
    cost: &[f64],
    m: usize,
    n: usize,
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut known_u = vec![false; m];
    let mut known_v = vec![false; n];
    known_u[0] = true;
    u[0] = 0.0;
    let mut remaining = m + n - 1;
    let mut progressed = true;
    // The basis is a spanning tree, so this closes in <= m + n sweeps.
    while progressed && remaining > 0 {
        progressed = false;
        for &(i, j, _) in basis {
            match (known_u[i], known_v[j]) {
                (true, false) => {
                    v[j] = cost[i * n + j] - u[i];
                    known_v[j] = true;
                    progressed = true;
                    remaining -= 1;
                }
                (false, true) => {
                    u[i] = cost[i * n + j] - v[j];
                    known_u[i] = true;
                    progressed = true;
                    remaining -= 1;
                }
                _ => {}
            }
        }
    }
    debug_assert_eq!(remaining, 0, "basis does not span all rows and columns");
}

/// Tree path closing the pivot cycle for entering cell (ei, ej), returned as
/// indices into `basis`. Position 0 shares row ei with the entering cell,
/// the last position shares column ej; the path alternates rows and columns
/// in between. The entering cell itself is not included.
fn find_cycle(basis: &[(usize, usize, f64)], m: usize, n: usize, ei: usize, ej: usize) -> Vec<usize> {
    // Tree adjacency: vertex ids 0..m are rows, m..m+n are columns.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for (idx, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push((m + j, idx));
        adj[m + j].push((i, idx));
    }
    // Path from row ei to column ej through the tree.
    let start = ei;
    let goal = m + ej;
    let mut parent_edge = vec![usize::MAX; m + n];
    let mut parent_vertex = vec![usize::MAX; m + n];
    let mut visited = vec![false; m + n];
    let mut stack = vec![start];
    visited[start] = true;
    while let Some(x) = stack.pop() {
        if x == goal {
            break;
        }
        for &(y, eidx) in &adj[x] {
            if !visited[y] {
                visited[y] = true;
                parent_edge[y] = eidx;
                parent_vertex[y] = x;
                stack.push(y);
            }
        }
    }
    debug_assert!(visited[goal], "basis must span the bipartite vertex set");
    let mut path = Vec::new();
    let mut x = goal;
    while x != start {
        path.push(parent_edge[x]);
        x = parent_vertex[x];
    }
    // path now lists basis cells from the column side back to the row side.
    // Walking the cycle entering -> (ei, j1) -> (i1, j1) -> ... alternates
    // signs; the cell adjacent to the entering row comes last in `path`.
    path.reverse();
    path
}
