//! Reference transportation solver by exhaustive enumeration.
//!
//! Enumerates every spanning tree of the bipartite supply/demand graph (the
//! basic solutions of the transportation polytope), solves each tree by leaf
//! elimination, and keeps the cheapest feasible one. Exponential, and
//! intentionally so: it shares no code with the simplex path and is the
//! ground truth for small instances (total support <= ~10).

/// Minimum transport cost, by complete enumeration of basic solutions.
///
/// `p` and `q` must balance; `cost` is dense row-major `p.len() x q.len()`.
pub fn transport_cost_exhaustive(p: &[f64], q: &[f64], cost: &[f64]) -> f64 {
    let m = p.len();
    let n = q.len();
    assert_eq!(cost.len(), m * n);
    if m == 0 || n == 0 {
        return 0.0;
    }
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    let mut uf = UnionFind::new(m + n);
    enumerate(0, k, m, n, p, q, cost, &mut chosen, &mut uf, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    from: usize,
    k: usize,
    m: usize,
    n: usize,
    p: &[f64],
    q: &[f64],
    cost: &[f64],
    chosen: &mut Vec<usize>,
    uf: &mut UnionFind,
    best: &mut f64,
) {
    if chosen.len() == k {
        if let Some(c) = solve_tree(chosen, m, n, p, q, cost) {
            if c < *best {
                *best = c;
            }
        }
        return;
    }
    let needed = k - chosen.len();
    for cell in from..=(m * n - needed) {
        let (i, j) = (cell / n, m + cell % n);
        // Acyclicity pruning: adding an edge inside one component closes a cycle.
        if uf.find(i) == uf.find(j) {
            continue;
        }
        let checkpoint = uf.undo_len();
        uf.union(i, j);
        chosen.push(cell);
        enumerate(cell + 1, k, m, n, p, q, cost, chosen, uf, best);
        chosen.pop();
        uf.undo_to(checkpoint);
    }
}

/// Flows on a spanning tree are forced; peel leaves. Returns the cost when
/// all flows are nonnegative, None otherwise.
fn solve_tree(cells: &[usize], m: usize, n: usize, p: &[f64], q: &[f64], cost: &[f64]) -> Option<f64> {
    let v = m + n;
    let mut degree = vec![0u32; v];
    let mut balance = vec![0.0f64; v];
    balance[..m].copy_from_slice(p);
    for j in 0..n {
        balance[m + j] = -q[j];
    }
    // Small incident-cell lists; supports here are tiny.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); v];
    for &cell in cells {
        let (i, j) = (cell / n, m + cell % n);
        degree[i] += 1;
        degree[j] += 1;
        incident[i].push(cell);
        incident[j].push(cell);
    }
    // `cells` is produced in ascending order, so index lookups can bisect.
    let slot = |cell: usize| cells.binary_search(&cell).expect("cell not in tree");
    let mut removed = vec![false; cells.len()];
    let mut stack: Vec<usize> = (0..v).filter(|&x| degree[x] == 1).collect();
    let mut total = 0.0f64;
    let mut peeled = 0usize;
    while let Some(x) = stack.pop() {
        if degree[x] != 1 {
            continue;
        }
        let &cell = incident[x].iter().find(|&&c| !removed[slot(c)])?;
        let (i, jc) = (cell / n, cell % n);
        let other = if x < m { m + jc } else { i };
        // Flow on a leaf edge equals the leaf's remaining balance
        // (positive at supply leaves, negative at demand leaves).
        let flow = if x < m { balance[x] } else { -balance[x] };
        if flow < -1e-12 {
            return None;
        }
        total += flow.max(0.0) * cost[i * n + jc];
        balance[x] = 0.0;
        if other < m {
            balance[other] -= flow;
        } else {
            balance[other] += flow;
        }
        removed[slot(cell)] = true;
        degree[x] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
        peeled += 1;
    }
    (peeled == cells.len()).then_some(total)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    undo: Vec<(usize, usize, u8)>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n], undo: Vec::new() }
    }

    // No path compression so unions can be undone during backtracking.
    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.undo.push((rb, self.parent[rb], self.rank[ra]));
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
    }

    fn undo_len(&self) -> usize {
        self.undo.len()
    }

    fn undo_to(&mut self, checkpoint: usize) {
        while self.undo.len() > checkpoint {
            let (child, parent, old_rank) = self.undo.pop().unwrap();
            let root = self.parent[child];
            self.rank[root] = old_rank;
            self.parent[child] = parent;
        }
    }
}
