//! Compact undirected unit-weight graph used for every hop-count computation.

use std::collections::VecDeque;

/// Adjacency lists over dense node indices. Edges are undirected.
#[derive(Clone, Debug, Default)]
pub(crate) struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    pub(crate) fn with_nodes(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub(crate) fn add_node(&mut self) -> u32 {
        self.neighbors.push(Vec::new());
        (self.neighbors.len() - 1) as u32
    }

    pub(crate) fn add_edge(&mut self, a: u32, b: u32) {
        if a == b {
            return;
        }
        self.neighbors[a as usize].push(b);
        self.neighbors[b as usize].push(a);
    }

    /// Sorts and deduplicates every list. Call once after the last `add_edge`.
    pub(crate) fn finish(&mut self) {
        for list in &mut self.neighbors {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub(crate) fn neighbors(&self, node: u32) -> &[u32] {
        &self.neighbors[node as usize]
    }

    /// Hop counts from `source` to every node, `None` when unreachable or
    /// beyond `max_depth`.
    pub(crate) fn bfs(&self, source: u32, max_depth: Option<u32>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.neighbors.len()];
        dist[source as usize] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(node) = queue.pop_front() {
            let d = dist[node as usize].unwrap_or(0);
            if max_depth.is_some_and(|m| d >= m) {
                continue;
            }
            for &next in self.neighbors(node) {
                if dist[next as usize].is_none() {
                    dist[next as usize] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Shortest hop count between two nodes with early exit.
    pub(crate) fn hops(&self, a: u32, b: u32) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        let mut dist = vec![u32::MAX; self.neighbors.len()];
        dist[a as usize] = 0;
        let mut queue = VecDeque::from([a]);
        while let Some(node) = queue.pop_front() {
            let d = dist[node as usize];
            for &next in self.neighbors(node) {
                if dist[next as usize] == u32::MAX {
                    if next == b {
                        return Some(d + 1);
                    }
                    dist[next as usize] = d + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

/// Maps a hop count onto `[0, 1]` as `h / (h + 1)`; unreachable is `1.0`.
pub fn normalize_hops(hops: Option<u32>) -> f64 {
    match hops {
        Some(h) => f64::from(h) / (f64::from(h) + 1.0),
        None => 1.0,
    }
}
