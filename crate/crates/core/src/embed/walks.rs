// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::WalkConfig;
use crate::error::Result;
use crate::graph::Graph;
use crate::rng;

/// Flat storage for walk traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCorpus {
    node_count: usize,
    tokens: Vec<u32>,
    /// `offsets[i]..offsets[i + 1]` is trace `i`.
    offsets: Vec<usize>,
}

impl WalkCorpus {
    pub fn from_traces(node_count: usize, traces: impl IntoIterator<Item = Vec<u32>>) -> Self {
        let mut tokens = Vec::new();
        let mut offsets = vec![0];
        for trace in traces {
            tokens.extend_from_slice(&trace);
            offsets.push(tokens.len());
        }
        WalkCorpus {
            node_count,
            tokens,
            offsets,
        }
    }

    /// Size of the node universe the traces were drawn from.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn trace(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn traces(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.offsets.windows(2).map(|w| &self.tokens[w[0]..w[1]])
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Occurrences of each node across all traces.
    pub fn frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.node_count];
        for &t in &self.tokens {
            freq[t as usize] += 1;
        }
        freq
    }
}

/// One truncated walk of `length` uniform-neighbor steps from `start`.
/// An isolated start yields the singleton trace.
pub fn random_walk<R: Rng + ?Sized>(g: &Graph, start: u32, length: usize, rng: &mut R) -> Vec<u32> {
    let mut trace = Vec::with_capacity(length + 1);
    trace.push(start);
    let mut at = start;
    for _ in 0..length {
        let nbrs = g.neighbors(at);
        if nbrs.is_empty() {
            break;
        }
        at = nbrs[rng.random_range(0..nbrs.len())];
        trace.push(at);
    }
    trace
}

/// `walk_times` rounds; each round starts one walk at every node with at
/// least one neighbor, in a per-round shuffled order. Walk `(round, node)`
/// uses its own generator, so the corpus does not depend on thread count.
pub fn generate_walks(g: &Graph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    let starts: Vec<u32> = (0..g.node_count() as u32)
        .filter(|&u| g.degree(u) > 0)
        .collect();
    let mut traces = Vec::with_capacity(starts.len() * cfg.walk_times);
    for round in 0..cfg.walk_times {
        let mut order = starts.clone();
        order.shuffle(&mut rng::keyed(cfg.seed, u64::MAX, round as u64));
        let batch: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&u| {
                let mut rng = rng::keyed(cfg.seed, u as u64, round as u64);
                random_walk(g, u, cfg.walk_length, &mut rng)
            })
            .collect();
        traces.extend(batch);
    }
    Ok(WalkCorpus::from_traces(g.node_count(), traces))
}

/// Every ordered `(trace[p], trace[q])` with `0 < |p - q| <= window`.
pub fn neighborhood_pairs(corpus: &WalkCorpus, window: usize) -> NeighborhoodPairs<'_> {
    NeighborhoodPairs {
        traces: Box::new(corpus.traces()),
        current: &[],
        window,
        p: 0,
        q: 0,
    }
}

pub struct NeighborhoodPairs<'a> {
    traces: Box<dyn Iterator<Item = &'a [u32]> + 'a>,
    current: &'a [u32],
    window: usize,
    p: usize,
    q: usize,
}

impl Iterator for NeighborhoodPairs<'_> {
    type Item = (u32, u32);

    fn next(&mut self) -> Option<(u32, u32)> {
        loop {
            if self.p >= self.current.len() {
                self.current = self.traces.next()?;
                self.p = 0;
                self.q = 0;
                continue;
            }
            let hi = (self.p + self.window).min(self.current.len() - 1);
            let lo = self.p.saturating_sub(self.window);
            if self.q < lo {
                self.q = lo;
            }
            if self.q > hi {
                self.p += 1;
                self.q = 0;
                continue;
            }
            let q = self.q;
            self.q += 1;
            if q != self.p {
                return Some((self.current[self.p], self.current[q]));
            }
        }
    }
}

/// Number of pairs a trace of `len` tokens yields under `window`.
pub fn pair_count(len: usize, window: usize) -> usize {
    (0..len)
        .map(|p| p.min(window) + (len - 1 - p).min(window))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_walk_alternates() {
        let g = Graph::from_edges(2, [(0, 1)]);
        let mut rng = rng::stream(0, 0);
        assert_eq!(random_walk(&g, 0, 4, &mut rng), vec![0, 1, 0, 1, 0]);
    }

    #[test]
    fn isolated_start_gives_singleton() {
        let g = Graph::from_edges(3, [(0, 1)]);
        let mut rng = rng::stream(0, 0);
        assert_eq!(random_walk(&g, 2, 50, &mut rng), vec![2]);
    }

    #[test]
    fn corpus_shape_and_validity() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4)]);
        let cfg = WalkConfig {
            walk_length: 7,
            walk_times: 3,
            window: 2,
            seed: 1,
        };
        let corpus = generate_walks(&g, &cfg).unwrap();
        // Node 5 is isolated and starts no walks.
        assert_eq!(corpus.len(), 3 * 5);
        for trace in corpus.traces() {
            assert!(trace.len() <= cfg.walk_length + 1);
            for w in trace.windows(2) {
                assert!(g.has_edge(w[0], w[1]));
            }
        }
        assert_eq!(corpus, generate_walks(&g, &cfg).unwrap());
    }

    #[test]
    fn star_transitions_are_uniform() {
        // Chi-square on 4 leaves, 100k steps from the center; 3 dof, p = 0.001
        // critical value 16.27. Also every frequency within 2% of 1/4.
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v)));
        let mut rng = rng::stream(42, 0);
        let steps = 100_000;
        let mut counts = [0u64; 5];
        for _ in 0..steps {
            let w = random_walk(&g, 0, 1, &mut rng);
            counts[w[1] as usize] += 1;
        }
        let expected = steps as f64 / 4.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        for &c in &counts[1..] {
            assert!((c as f64 / steps as f64 - 0.25).abs() < 0.02 * 0.25);
        }
    }

    #[test]
    fn window_one_pairs() {
        let corpus = WalkCorpus::from_traces(3, [vec![0, 1, 2]]);
        let pairs: Vec<_> = neighborhood_pairs(&corpus, 1).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn wide_window_gives_all_ordered_pairs() {
        let corpus = WalkCorpus::from_traces(3, [vec![0, 1, 2]]);
        assert_eq!(neighborhood_pairs(&corpus, 10).count(), 6);
    }

    #[test]
    fn singleton_trace_has_no_pairs() {
        let corpus = WalkCorpus::from_traces(3, [vec![2], vec![], vec![0, 1]]);
        assert_eq!(neighborhood_pairs(&corpus, 3).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }
}
