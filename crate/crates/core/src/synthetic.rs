// SPDX-License-Identifier: Apache-2.0

//! Seeded random graph generators for tests, demos and desk-scale runs.

use rand::Rng;

use crate::graph::Graph;
use crate::rng;

/// G(n, p).
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Parameters for [`community_graph`].
#[derive(Clone, Debug)]
pub struct CommunityGraph {
    pub nodes: usize,
    pub communities: usize,
    /// Target mean degree.
    pub mean_degree: f64,
    /// Fraction of each node's expected degree spent outside its community.
    pub mixing: f64,
    /// Pareto shape of the per-node degree propensity; smaller is heavier.
    pub tail: f64,
}

impl Default for CommunityGraph {
    fn default() -> Self {
        CommunityGraph {
            nodes: 1000,
            communities: 25,
            mean_degree: 20.0,
            mixing: 0.1,
            tail: 2.5,
        }
    }
}

/// Degree-corrected planted-partition graph with heavy-tailed degrees.
///
/// Each node draws a Pareto propensity; pairs inside a community connect
/// with probability proportional to the product of propensities (Chung-Lu),
/// and a `mixing` share of the expected degree goes to uniformly random
/// cross-community pairs. The result resembles ego-network unions: dense
/// overlapping circles with a few hubs.
pub fn community_graph(params: &CommunityGraph, seed: u64) -> Graph {
    let mut rng = rng::stream(seed, 0);
    let n = params.nodes;
    let c = params.communities.max(1);
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            let r: f64 = rng.random::<f64>().max(1e-12);
            r.powf(-1.0 / params.tail)
        })
        .collect();
    let community: Vec<usize> = (0..n).map(|u| u * c / n).collect();
    let mut members = vec![Vec::new(); c];
    for u in 0..n {
        members[community[u]].push(u);
    }
    let mean_w = weights.iter().sum::<f64>() / n as f64;

    let mut edges = Vec::new();
    let inner = params.mean_degree * (1.0 - params.mixing);
    for group in &members {
        let total: f64 = group.iter().map(|&u| weights[u]).sum();
        for (a, &u) in group.iter().enumerate() {
            for &v in &group[a + 1..] {
                let p = (inner * weights[u] * weights[v] / (mean_w * total)).min(1.0);
                if rng.random::<f64>() < p {
                    edges.push((u as u32, v as u32));
                }
            }
        }
    }
    let cross = (params.mean_degree * params.mixing * n as f64 / 2.0).round() as usize;
    for _ in 0..cross {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if community[u] != community[v] {
            edges.push((u as u32, v as u32));
        }
    }
    Graph::from_edges(n, edges)
}

/// Parameters for [`ego_union`].
#[derive(Clone, Debug)]
pub struct EgoUnion {
    pub nodes: usize,
    pub egos: usize,
    /// Members per friend circle.
    pub circle_size: usize,
    /// Edge probability inside a circle.
    pub p_circle: f64,
    /// Edge probability between circles of the same ego.
    pub p_ego: f64,
    /// Extra uniformly random edges, as a share of the node count.
    pub random_edges: f64,
}

impl Default for EgoUnion {
    fn default() -> Self {
        EgoUnion {
            nodes: 2000,
            egos: 64,
            circle_size: 50,
            p_circle: 0.7,
            p_ego: 0.03,
            random_edges: 1.0,
        }
    }
}

/// Union of ego networks: a few hubs, each adjacent to every member of its
/// friend circles, with dense circles and sparse ties between them.
///
/// Ego `i` (nodes `0..egos`) owns a share of the circles proportional to
/// `1 / (i + 1)`, so hub degrees fall off like a harmonic series.
pub fn ego_union(params: &EgoUnion, seed: u64) -> Graph {
    let mut rng = rng::stream(seed, 0);
    let n = params.nodes;
    let egos = params.egos.clamp(1, n);
    let friends: Vec<u32> = (egos as u32..n as u32).collect();
    let circles: Vec<&[u32]> = friends.chunks(params.circle_size.max(1)).collect();

    let harmonic: f64 = (1..=egos).map(|i| 1.0 / i as f64).sum();
    let mut owner = Vec::with_capacity(circles.len());
    let mut next = 0usize;
    for i in 0..egos {
        let share = ((circles.len() as f64) / ((i + 1) as f64 * harmonic)).round() as usize;
        let end = if i + 1 == egos { circles.len() } else { (next + share.max(1)).min(circles.len()) };
        owner.extend(std::iter::repeat_n(i, end - next));
        next = end;
    }

    let mut edges = Vec::new();
    for (c, members) in circles.iter().enumerate() {
        for (a, &u) in members.iter().enumerate() {
            edges.push((owner[c] as u32, u));
            for &v in &members[a + 1..] {
                if rng.random::<f64>() < params.p_circle {
                    edges.push((u, v));
                }
            }
        }
        for (d, other) in circles.iter().enumerate().skip(c + 1) {
            if owner[d] != owner[c] {
                continue;
            }
            for &u in *members {
                for &v in *other {
                    if rng.random::<f64>() < params.p_ego {
                        edges.push((u, v));
                    }
                }
            }
        }
    }
    for a in 1..egos as u32 {
        edges.push((a - 1, a));
    }
    for _ in 0..(params.random_edges * n as f64).round() as usize {
        let u = rng.random_range(0..n as u32);
        let v = rng.random_range(0..n as u32);
        edges.push((u, v));
    }
    Graph::from_edges(n, edges)
}
