// SPDX-License-Identifier: Apache-2.0

//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use graphrecov::Graph;

/// Minimum cost over every cut of the descending sequence into contiguous
/// parts of at least `k` elements.
pub fn exhaustive_kda_cost(degrees: &[usize], k: usize) -> usize {
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    fn go(s: &[usize], k: usize) -> Option<usize> {
        if s.is_empty() {
            return Some(0);
        }
        (k..=s.len())
            .filter_map(|len| {
                let cost: usize = s[..len].iter().map(|&d| s[0] - d).sum();
                go(&s[len..], k).map(|rest| rest + cost)
            })
            .min()
    }
    go(&sorted, k).expect("k <= n")
}

/// Per-edge enumeration of the joint degree counts.
pub fn brute_dk2(g: &Graph) -> BTreeMap<(u32, u32), u64> {
    let mut out = BTreeMap::new();
    for e in g.edges() {
        let a = g.degree(e.u()) as u32;
        let b = g.degree(e.v()) as u32;
        *out.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }
    out
}

/// Triangles through each node, by checking every triple.
pub fn brute_triangles(g: &Graph) -> Vec<u64> {
    let n = g.node_count() as u32;
    let mut counts = vec![0u64; n as usize];
    for a in 0..n {
        for b in a + 1..n {
            if !g.has_edge(a, b) {
                continue;
            }
            for c in b + 1..n {
                if g.has_edge(b, c) && g.has_edge(a, c) {
                    for x in [a, b, c] {
                        counts[x as usize] += 1;
                    }
                }
            }
        }
    }
    counts
}

/// Top eigenvector of the dense adjacency matrix, signed to sum positive.
pub fn dense_eigencentrality(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        a[(e.u() as usize, e.v() as usize)] = 1.0;
        a[(e.v() as usize, e.u() as usize)] = 1.0;
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let top = eig.eigenvalues.imax();
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// A random graph with a Hamiltonian path added, so it is connected.
pub fn connected_random(n: usize, p: f64, seed: u64) -> Graph {
    let random = graphrecov::synthetic::erdos_renyi(n, p, seed);
    let edges = random
        .edges()
        .iter()
        .map(|e| e.endpoints())
        .chain((1..n as u32).map(|v| (v - 1, v)));
    Graph::from_edges(n, edges)
}
