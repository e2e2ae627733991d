//! Shortest-path metric on the clique expansion, unit edge lengths.

use std::collections::VecDeque;
use std::sync::{Arc, RwLock};

use crate::hypergraph::Hypergraph;
use crate::{Error, Result};

pub const UNREACHABLE: u32 = u32::MAX;

/// Hop-distance oracle between nodes. Distances are computed by BFS on the
/// clique expansion of the hypergraph and cached per source node.
pub struct MetricOracle {
    adj_ptr: Vec<usize>,
    adj: Vec<u32>,
    cache: RwLock<Vec<Option<Arc<Vec<u32>>>>>,
}

impl MetricOracle {
    pub fn new(h: &Hypergraph) -> Self {
        let n = h.num_nodes();
        // Clique expansion, deduplicated.
        let mut neigh: Vec<Vec<u32>> = vec![Vec::new(); n];
        for e in h.edges() {
            for (a_pos, &a) in e.iter().enumerate() {
                for &b in &e[a_pos + 1..] {
                    neigh[a as usize].push(b);
                    neigh[b as usize].push(a);
                }
            }
        }
        let mut adj_ptr = Vec::with_capacity(n + 1);
        let mut adj = Vec::new();
        adj_ptr.push(0);
        for list in &mut neigh {
            list.sort_unstable();
            list.dedup();
            adj.extend_from_slice(list);
            adj_ptr.push(adj.len());
        }
        MetricOracle { adj_ptr, adj, cache: RwLock::new(vec![None; n]) }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj_ptr.len() - 1
    }

    /// Full distance row from `source`, cached.
    pub fn distances_from(&self, source: usize) -> Arc<Vec<u32>> {
        if let Some(row) = &self.cache.read().unwrap()[source] {
            return Arc::clone(row);
        }
        let row = Arc::new(self.bfs(source));
        self.cache.write().unwrap()[source] = Some(Arc::clone(&row));
        row
    }

    /// Hop distance, or an error when the pair is disconnected.
    pub fn distance(&self, a: usize, b: usize) -> Result<u32> {
        if a == b {
            return Ok(0);
        }
        // Symmetric metric: key the cache on the smaller endpoint.
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let row = self.distances_from(s);
        match row[t] {
            UNREACHABLE => Err(Error::UnreachablePair { a, b }),
            d => Ok(d),
        }
    }

    fn bfs(&self, source: usize) -> Vec<u32> {
        let n = self.num_nodes();
        let mut dist = vec![UNREACHABLE; n];
        dist[source] = 0;
        let mut queue = VecDeque::with_capacity(64);
        queue.push_back(source as u32);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize];
            for &w in &self.adj[self.adj_ptr[v as usize]..self.adj_ptr[v as usize + 1]] {
                if dist[w as usize] == UNREACHABLE {
                    dist[w as usize] = dv + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}
