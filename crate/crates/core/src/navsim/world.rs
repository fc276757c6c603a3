use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::stream;

pub type NodeId = usize;

/// Upper bound on landmark categories; matches the landmark vocabulary.
pub const MAX_LANDMARKS: usize = 16;

const MIN_SEPARATION: f64 = 2.0;
const MAX_EDGE: f64 = 4.5;
const BOX_SCALE: f64 = 3.0;
const HEIGHT_JITTER: f64 = 0.3;
const FEATURE_NOISE: f64 = 0.1;
const MAX_ATTEMPTS: u64 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: [f64; 3],
    pub landmark: usize,
}

/// One slot of a node's panorama.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub heading: f64,
    pub elevation: f64,
    pub neighbor: Option<NodeId>,
    pub feature: Vec<f64>,
}

/// Undirected navigation graph with per-node panoramic views.
///
/// Node ids are dense indices `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NavGraph {
    pub graph_id: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<(NodeId, NodeId)>,
    pub views: Vec<Vec<View>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub n_nodes: usize,
    pub k_views: usize,
    pub feat_dim: usize,
    /// Probability of keeping each admissible non-tree edge.
    pub density: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_nodes: 30,
            k_views: 8,
            feat_dim: 25,
            density: 0.3,
        }
    }
}

impl WorldConfig {
    /// Landmark categories representable in the feature layout.
    pub fn n_landmarks(&self) -> usize {
        self.feat_dim
            .saturating_sub(self.k_views + 1)
            .min(MAX_LANDMARKS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 1 || self.k_views < 2 || self.feat_dim < 4 {
            return Err(Error::Config(format!(
                "need n_nodes >= 1, k_views >= 2, feat_dim >= 4 (got {}, {}, {})",
                self.n_nodes, self.k_views, self.feat_dim
            )));
        }
        if self.n_landmarks() == 0 {
            return Err(Error::Config(format!(
                "feat_dim {} leaves no room for landmarks with {} views",
                self.feat_dim, self.k_views
            )));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Config(format!("density {} outside [0, 1]", self.density)));
        }
        Ok(())
    }
}

/// Clockwise angle from +y in `[0, 2π)`.
pub fn heading_between(from: [f64; 3], to: [f64; 3]) -> f64 {
    let h = libm::atan2(to[0] - from[0], to[1] - from[1]);
    if h < 0.0 {
        h + TAU
    } else {
        h
    }
}

fn horizontal(a: [f64; 3], b: [f64; 3]) -> f64 {
    libm::hypot(b[0] - a[0], b[1] - a[1])
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (dx, dy, dz) = (b[0] - a[0], b[1] - a[1], b[2] - a[2]);
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

fn slot_of(heading: f64, k: usize) -> usize {
    let width = TAU / k as f64;
    (libm::round(heading / width) as usize) % k
}

/// Feature vector for a view: landmark one-hot, heading-bucket one-hot, wall
/// flag, then padding, all with additive Gaussian noise.
fn view_feature(
    cfg: &WorldConfig,
    landmark: Option<usize>,
    slot: usize,
    seed: u64,
    node: NodeId,
) -> Vec<f64> {
    let l = cfg.n_landmarks();
    let mut f = vec![0.0; cfg.feat_dim];
    match landmark {
        Some(m) => f[m] = 1.0,
        None => f[l + cfg.k_views] = 1.0,
    }
    f[l + slot] = 1.0;
    let normal = Normal::new(0.0, FEATURE_NOISE).expect("positive sigma");
    let mut rng = stream(seed, &[0x6665_6174, node as u64, slot as u64]);
    for x in f.iter_mut() {
        *x += normal.sample(&mut rng);
    }
    f
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Generates a connected world. Identical `(graph_id, seed, cfg)` give
/// identical graphs.
pub fn generate_world(graph_id: &str, seed: u64, cfg: &WorldConfig) -> Result<NavGraph> {
    cfg.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        if let Some(g) = try_generate(graph_id, seed, attempt, cfg) {
            return Ok(g);
        }
    }
    Err(Error::Config(format!(
        "could not generate a connected {}-node world in {MAX_ATTEMPTS} attempts; \
         raise density or lower k_views constraints",
        cfg.n_nodes
    )))
}

fn try_generate(graph_id: &str, seed: u64, attempt: u64, cfg: &WorldConfig) -> Option<NavGraph> {
    let n = cfg.n_nodes;
    let k = cfg.k_views;
    let mut rng = stream(seed, &[0x776f_726c, attempt]);
    let side = BOX_SCALE * libm::sqrt(n as f64);

    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    let mut tries = 0;
    while nodes.len() < n {
        tries += 1;
        if tries > 1000 * n {
            return None;
        }
        let pos = [
            rng.random_range(0.0..side),
            rng.random_range(0.0..side),
            rng.random_range(-HEIGHT_JITTER..HEIGHT_JITTER),
        ];
        if nodes.iter().all(|m| horizontal(m.pos, pos) >= MIN_SEPARATION) {
            let landmark = rng.random_range(0..cfg.n_landmarks());
            nodes.push(Node {
                id: nodes.len(),
                pos,
                landmark,
            });
        }
    }

    let mut candidates: Vec<(f64, NodeId, NodeId)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let d = horizontal(nodes[a].pos, nodes[b].pos);
            if d <= MAX_EDGE {
                candidates.push((distance(nodes[a].pos, nodes[b].pos), a, b));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut slots: Vec<Vec<Option<NodeId>>> = vec![vec![None; k]; n];
    let slot_pair = |a: NodeId, b: NodeId| {
        (
            slot_of(heading_between(nodes[a].pos, nodes[b].pos), k),
            slot_of(heading_between(nodes[b].pos, nodes[a].pos), k),
        )
    };
    let mut uf = UnionFind((0..n).collect());
    let mut chosen: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for &(_, a, b) in &candidates {
        let (sa, sb) = slot_pair(a, b);
        if slots[a][sa].is_none() && slots[b][sb].is_none() && uf.union(a, b) {
            slots[a][sa] = Some(b);
            slots[b][sb] = Some(a);
            chosen.insert((a, b));
        }
    }
    for &(_, a, b) in &candidates {
        // one draw per candidate keeps the stream aligned across outcomes
        let keep = rng.random_bool(cfg.density);
        if chosen.contains(&(a, b)) || !keep {
            continue;
        }
        let (sa, sb) = slot_pair(a, b);
        if slots[a][sa].is_none() && slots[b][sb].is_none() {
            slots[a][sa] = Some(b);
            slots[b][sb] = Some(a);
            chosen.insert((a, b));
        }
    }
    let root = uf.find(0);
    if (0..n).any(|i| uf.find(i) != root) {
        return None;
    }

    let width = TAU / k as f64;
    let views = (0..n)
        .map(|a| {
            (0..k)
                .map(|s| match slots[a][s] {
                    Some(b) => View {
                        heading: heading_between(nodes[a].pos, nodes[b].pos),
                        elevation: libm::atan2(
                            nodes[b].pos[2] - nodes[a].pos[2],
                            horizontal(nodes[a].pos, nodes[b].pos),
                        ),
                        neighbor: Some(b),
                        feature: view_feature(cfg, Some(nodes[b].landmark), s, seed, a),
                    },
                    None => View {
                        heading: width * s as f64,
                        elevation: 0.0,
                        neighbor: None,
                        feature: view_feature(cfg, None, s, seed, a),
                    },
                })
                .collect()
        })
        .collect();

    Some(NavGraph {
        graph_id: graph_id.into(),
        nodes,
        edges: chosen.into_iter().collect(),
        views,
    })
}

impl NavGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn k_views(&self) -> usize {
        self.views.first().map_or(0, Vec::len)
    }

    pub fn feat_dim(&self) -> usize {
        self.views
            .first()
            .and_then(|v| v.first())
            .map_or(0, |v| v.feature.len())
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::Lookup(format!("node {id} not in graph {}", self.graph_id)))
    }

    pub fn edge_length(&self, a: NodeId, b: NodeId) -> Result<f64> {
        Ok(distance(self.node(a)?.pos, self.node(b)?.pos))
    }

    /// View slot at `from` whose neighbor is `to`.
    pub fn view_towards(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.views
            .get(from)?
            .iter()
            .position(|v| v.neighbor == Some(to))
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.views[id].iter().filter_map(|v| v.neighbor)
    }

    /// Checks every structural invariant; used when loading external files.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let bad = |msg: String| Err(Error::Format(format!("graph {}: {msg}", self.graph_id)));
        if n == 0 {
            return bad("no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return bad(format!("node ids must be dense, found {} at {i}", node.id));
            }
            if node.pos.iter().any(|x| !x.is_finite()) {
                return bad(format!("node {i} has a non-finite position"));
            }
        }
        if self.views.len() != n {
            return bad(format!("{} view lists for {n} nodes", self.views.len()));
        }
        let k = self.k_views();
        let f = self.feat_dim();
        if k < 2 || f == 0 {
            return bad(format!("need at least 2 views with features (k={k}, F={f})"));
        }
        let mut edge_set = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return bad(format!("edge ({a}, {b}) has an invalid endpoint"));
            }
            if !edge_set.insert((a.min(b), a.max(b))) {
                return bad(format!("duplicate edge ({a}, {b})"));
            }
        }
        for (a, vs) in self.views.iter().enumerate() {
            if vs.len() != k {
                return bad(format!("node {a} has {} views, expected {k}", vs.len()));
            }
            let mut headings: Vec<f64> = Vec::with_capacity(k);
            for v in vs {
                if v.feature.len() != f || v.feature.iter().any(|x| !x.is_finite()) {
                    return bad(format!("node {a} has a malformed view feature"));
                }
                if !(0.0..TAU).contains(&v.heading) || !(-PI / 2.0..=PI / 2.0).contains(&v.elevation) {
                    return bad(format!("node {a} has a view angle out of range"));
                }
                if headings.contains(&v.heading) {
                    return bad(format!("node {a} has repeated view headings"));
                }
                headings.push(v.heading);
                if let Some(b) = v.neighbor {
                    if !edge_set.contains(&(a.min(b), a.max(b))) {
                        return bad(format!("view at {a} points to {b} without an edge"));
                    }
                }
            }
        }
        for &(a, b) in &edge_set {
            let ab = self.views[a].iter().filter(|v| v.neighbor == Some(b)).count();
            let ba = self.views[b].iter().filter(|v| v.neighbor == Some(a)).count();
            if ab != 1 || ba != 1 {
                return bad(format!("edge ({a}, {b}) must have exactly one view at each end"));
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in self.neighbors(a) {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("graph is not connected".into());
        }
        Ok(())
    }
}
