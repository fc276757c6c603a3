use std::collections::VecDeque;

use leo_core::navsim::{
    generate_world, navigable_actions, sample_expert_trajectories, step, Action, DistanceTable, EnvState, NavGraph,
    WorldConfig,
};
use proptest::prelude::*;

fn world(seed: u64, n: usize) -> NavGraph {
    let cfg = WorldConfig {
        n_nodes: n,
        ..WorldConfig::default()
    };
    generate_world(&format!("w{seed}"), seed, &cfg).unwrap()
}

/// Plain Bellman–Ford over the undirected edge list.
fn bellman_ford(g: &NavGraph, src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = g.n_nodes();
    let mut d = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    d[src] = 0.0;
    hops[src] = 0;
    for _ in 0..n {
        for &(a, b) in &g.edges {
            let w = g.edge_length(a, b).unwrap();
            for (u, v) in [(a, b), (b, a)] {
                if d[u] + w < d[v] {
                    d[v] = d[u] + w;
                }
                if hops[u] != usize::MAX && hops[u] + 1 < hops[v] {
                    hops[v] = hops[u] + 1;
                }
            }
        }
    }
    (d, hops)
}

#[test]
fn seeded_world_is_connected() {
    let g = world(7, 30);
    let mut seen = [false; 30];
    let mut q = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = q.pop_front() {
        for &(a, b) in &g.edges {
            let v = if a == u { b } else if b == u { a } else { continue };
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn worlds_are_reproducible() {
    assert_eq!(world(7, 30), world(7, 30));
    assert_ne!(world(7, 30), world(8, 30));
}

#[test]
fn geodesics_match_bellman_ford() {
    let g = world(7, 30);
    let t = DistanceTable::new(&g);
    let mut rng = leo_core::rng::stream(7, &[20]);
    use rand::Rng;
    for _ in 0..20 {
        let a = rng.random_range(0..30);
        let b = rng.random_range(0..30);
        let (d, _) = bellman_ford(&g, a);
        assert!((t.get(a, b).unwrap() - d[b]).abs() <= 1e-9);
        assert_eq!(t.get(a, b).unwrap(), t.get(b, a).unwrap());
    }
    assert_eq!(t.get(4, 4).unwrap(), 0.0);
}

#[test]
fn expert_paths_are_shortest() {
    let g = world(7, 30);
    let t = DistanceTable::new(&g);
    let trajs = sample_expert_trajectories(&g, &t, 3, 40, 2, 5).unwrap();
    for tr in &trajs {
        let (d, _) = bellman_ford(&g, tr.start());
        assert!((tr.length - d[tr.end()]).abs() <= 1e-9);
        let walked: f64 = tr.nodes.windows(2).map(|w| g.edge_length(w[0], w[1]).unwrap()).sum();
        assert_eq!(walked, tr.length);
        // shortest by length is never shorter in hops than the fewest-hop path
        let (_, hops) = bellman_ford(&g, tr.start());
        assert!(tr.hops() >= hops[tr.end()]);
        assert!((2..=5).contains(&tr.hops()));
        assert!(tr.stopped());
    }
    let one = sample_expert_trajectories(&g, &t, 3, 5, 1, 1).unwrap();
    assert!(one.iter().all(|tr| tr.nodes.len() == 2));
}

#[test]
fn single_node_world_only_offers_stop() {
    let g = world(1, 1);
    assert!(g.edges.is_empty());
    let s = EnvState::start(0, 0.0);
    let c = navigable_actions(&g, &s).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].action, Action::Stop);
    let after = step(&g, &s, Action::Stop).unwrap();
    assert!(after.stopped);
    assert_eq!(after.node, 0);
}

#[test]
fn candidates_follow_the_panorama() {
    let g = world(7, 30);
    for node in 0..g.n_nodes() {
        let s = EnvState::start(node, 0.0);
        let c = navigable_actions(&g, &s).unwrap();
        let linked = g.views[node].iter().filter(|v| v.neighbor.is_some()).count();
        assert_eq!(c.len(), linked + 1);
        assert_eq!(c.last().unwrap().action, Action::Stop);
        for cand in &c[..linked] {
            let Action::Move(k) = cand.action else { panic!("moves come first") };
            assert_eq!(cand.feature.unwrap(), &g.views[node][k].feature[..]);
            assert_eq!(cand.neighbor, g.views[node][k].neighbor);
        }
    }
}

#[test]
fn moves_are_reversible_and_counted() {
    let g = world(7, 30);
    let mut s = EnvState::start(0, 0.0);
    let mut t = 0;
    for _ in 0..6 {
        let c = navigable_actions(&g, &s).unwrap();
        let from = s.node;
        let next = step(&g, &s, c[0].action).unwrap();
        t += 1;
        assert_eq!(next.step_count, t);
        let back = g.view_towards(next.node, from).unwrap();
        assert_eq!(step(&g, &next, Action::Move(back)).unwrap().node, from);
        s = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn triangle_inequality(seed in 0u64..40, a in 0usize..20, b in 0usize..20, c in 0usize..20) {
        let g = world(seed, 20);
        let t = DistanceTable::new(&g);
        let ab = t.get(a, b).unwrap();
        let bc = t.get(b, c).unwrap();
        let ac = t.get(a, c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }
}
