use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::seq::SliceRandom;

use super::env::Action;
use super::world::{NavGraph, NodeId};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, NodeId);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Single-source Dijkstra; returns distances and predecessors.
fn dijkstra(graph: &NavGraph, source: NodeId) -> (Vec<f64>, Vec<Option<NodeId>>) {
    let n = graph.n_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Entry(0.0, source)));
    while let Some(Reverse(Entry(d, a))) = heap.pop() {
        if d > dist[a] {
            continue;
        }
        for b in graph.neighbors(a) {
            let nd = d + super::world::distance(graph.nodes[a].pos, graph.nodes[b].pos);
            if nd < dist[b] {
                dist[b] = nd;
                prev[b] = Some(a);
                heap.push(Reverse(Entry(nd, b)));
            }
        }
    }
    (dist, prev)
}

/// Shortest-path length in meters between two nodes.
pub fn geodesic(graph: &NavGraph, a: NodeId, b: NodeId) -> Result<f64> {
    graph.node(a)?;
    graph.node(b)?;
    Ok(dijkstra(graph, a).0[b])
}

/// All-pairs geodesics and shortest-path trees.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<f64>,
    prev: Vec<Option<NodeId>>,
}

impl DistanceTable {
    pub fn new(graph: &NavGraph) -> Self {
        let n = graph.n_nodes();
        let mut dist = Vec::with_capacity(n * n);
        let mut prev = Vec::with_capacity(n * n);
        for s in 0..n {
            let (d, p) = dijkstra(graph, s);
            dist.extend(d);
            prev.extend(p);
        }
        // summation order differs per source; make d(a, b) == d(b, a) exactly
        for a in 0..n {
            for b in a + 1..n {
                dist[b * n + a] = dist[a * n + b];
            }
        }
        DistanceTable { n, dist, prev }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Result<f64> {
        if a >= self.n || b >= self.n {
            return Err(Error::Lookup(format!("node pair ({a}, {b}) out of range")));
        }
        Ok(self.dist[a * self.n + b])
    }

    /// Node sequence of the shortest path from `a` to `b`.
    pub fn path(&self, a: NodeId, b: NodeId) -> Result<Vec<NodeId>> {
        self.get(a, b)?;
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = self.prev[a * self.n + cur]
                .ok_or_else(|| Error::Lookup(format!("no path from {a} to {b}")))?;
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    pub fn hops(&self, a: NodeId, b: NodeId) -> Result<usize> {
        Ok(self.path(a, b)?.len() - 1)
    }
}

/// Node and action sequence of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub nodes: Vec<NodeId>,
    pub actions: Vec<Action>,
    /// Sum of traversed edge lengths in meters.
    pub length: f64,
}

impl Trajectory {
    /// Builds the trajectory that walks `nodes` and, if `stop`, ends with STOP.
    pub fn from_path(graph: &NavGraph, nodes: Vec<NodeId>, stop: bool) -> Result<Self> {
        let first = *nodes
            .first()
            .ok_or_else(|| Error::Contract("empty node sequence".into()))?;
        graph.node(first)?;
        let mut actions = Vec::with_capacity(nodes.len());
        let mut length = 0.0;
        for w in nodes.windows(2) {
            let view = graph.view_towards(w[0], w[1]).ok_or_else(|| {
                Error::Contract(format!("nodes {} and {} are not adjacent", w[0], w[1]))
            })?;
            actions.push(Action::Move(view));
            length += graph.edge_length(w[0], w[1])?;
        }
        if stop {
            actions.push(Action::Stop);
        }
        Ok(Trajectory {
            nodes,
            actions,
            length,
        })
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("trajectories are non-empty")
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn stopped(&self) -> bool {
        self.actions.last() == Some(&Action::Stop)
    }
}

/// Ordered `(start, goal)` pairs whose shortest path has a hop count in
/// `[min_hops, max_hops]`.
pub fn eligible_pairs(
    table: &DistanceTable,
    min_hops: usize,
    max_hops: usize,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut out = Vec::new();
    for a in 0..table.n {
        for b in 0..table.n {
            if a != b {
                let h = table.hops(a, b)?;
                if (min_hops..=max_hops).contains(&h) {
                    out.push((a, b));
                }
            }
        }
    }
    Ok(out)
}

/// Draws `count` distinct shortest-path trajectories, in sampling order.
pub fn sample_expert_trajectories(
    graph: &NavGraph,
    table: &DistanceTable,
    seed: u64,
    count: usize,
    min_hops: usize,
    max_hops: usize,
) -> Result<Vec<Trajectory>> {
    if min_hops < 1 || max_hops < min_hops {
        return Err(Error::Sampling(format!(
            "invalid hop bounds [{min_hops}, {max_hops}]"
        )));
    }
    let mut pairs = eligible_pairs(table, min_hops, max_hops)?;
    if pairs.len() < count {
        return Err(Error::Sampling(format!(
            "graph {} has {} start/goal pairs with {min_hops}..={max_hops} hops, need {count}",
            graph.graph_id,
            pairs.len()
        )));
    }
    pairs.shuffle(&mut stream(seed, &[0x6578_7074]));
    pairs
        .into_iter()
        .take(count)
        .map(|(a, b)| Trajectory::from_path(graph, table.path(a, b)?, true))
        .collect()
}

pub fn sample_expert_trajectory(
    graph: &NavGraph,
    seed: u64,
    min_hops: usize,
    max_hops: usize,
) -> Result<Trajectory> {
    let table = DistanceTable::new(graph);
    let mut v = sample_expert_trajectories(graph, &table, seed, 1, min_hops, max_hops)?;
    Ok(v.remove(0))
}
