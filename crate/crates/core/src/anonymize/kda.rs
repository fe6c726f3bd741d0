// SPDX-License-Identifier: Apache-2.0

//! k-degree anonymization.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::Rng;

use super::{AnonymizationMeta, KdaConfig, Mechanism};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, GraphBuilder};
use crate::rng::{self, StageRng};

/// Minimum-cost k-anonymous target degrees, indexed by node.
///
/// Nodes are sorted by `(degree desc, id asc)` and cut into consecutive runs
/// of `k..=2k-1` nodes; every node in a run is raised to the run's largest
/// degree. The dynamic program minimizes the total increase over all such
/// cuts. Runs longer than `2k-1` never help: splitting one in two never costs
/// more.
pub fn kda_degree_sequence(degrees: &[usize], k: usize) -> Result<Vec<usize>> {
    let groups = optimal_groups(degrees, k)?;
    let mut targets = vec![0; degrees.len()];
    for group in &groups {
        for &u in &group.members {
            targets[u as usize] = group.value;
        }
    }
    Ok(targets)
}

#[derive(Clone, Debug)]
struct Group {
    value: usize,
    members: Vec<u32>,
}

fn optimal_groups(degrees: &[usize], k: usize) -> Result<Vec<Group>> {
    let n = degrees.len();
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds the number of nodes ({n})")));
    }

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&u| (Reverse(degrees[u as usize]), u));
    let sorted: Vec<u64> = order.iter().map(|&u| degrees[u as usize] as u64).collect();
    let mut prefix = vec![0u64; n + 1];
    for (i, &d) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + d;
    }
    // Cost of raising sorted[start..end] to sorted[start].
    let run_cost = |start: usize, end: usize| -> u64 {
        (end - start) as u64 * sorted[start] - (prefix[end] - prefix[start])
    };

    // best[j]: cheapest anonymization of the first j sorted nodes.
    let mut best = vec![u64::MAX; n + 1];
    let mut cut = vec![0usize; n + 1];
    best[0] = 0;
    for end in k..=n {
        let max_len = (2 * k - 1).min(end);
        for len in k..=max_len {
            let start = end - len;
            if best[start] == u64::MAX {
                continue;
            }
            let cost = best[start] + run_cost(start, end);
            if cost < best[end] {
                best[end] = cost;
                cut[end] = start;
            }
        }
    }
    debug_assert!(best[n] != u64::MAX);

    let mut groups = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = cut[end];
        groups.push(Group {
            value: sorted[start] as usize,
            members: order[start..end].to_vec(),
        });
        end = start;
    }
    groups.reverse();
    Ok(groups)
}

/// Raises an odd target-degree sum by one unit per member of an odd-sized
/// group, lowest value first. Whole groups move together so every degree
/// value keeps at least `k` holders.
fn fix_parity(groups: &mut [Group], node_count: usize) -> Result<()> {
    let sum: usize = groups.iter().map(|g| g.value * g.members.len()).sum();
    if sum % 2 == 0 {
        return Ok(());
    }
    let candidate = groups
        .iter_mut()
        .rev()
        .find(|g| g.members.len() % 2 == 1 && g.value + 1 < node_count)
        .ok_or_else(|| {
            Error::Config("no odd-sized degree group can absorb the parity fix".into())
        })?;
    candidate.value += 1;
    Ok(())
}

/// Output of [`kda_anonymize`] and its enhanced variant.
#[derive(Clone, Debug)]
pub struct KdaOutput {
    pub graph: Graph,
    pub meta: AnonymizationMeta,
}

/// Picks partners for a node during realization.
pub(crate) trait PartnerChooser {
    /// Returns up to `m` distinct nodes from `candidates`. Candidates are the
    /// positive-residual non-neighbors of `u`, ordered by residual descending
    /// then id ascending.
    fn choose(&mut self, u: u32, candidates: &[u32], m: usize) -> Vec<u32>;

    /// Deletable edges drawn per relaxation step. The freed endpoints become
    /// `u`'s next partners, so this is partner choice too.
    fn relax_batch(&self) -> usize {
        1
    }

    /// Index into `edges` of the edge to delete for stuck node `u`.
    fn choose_victim(&mut self, _u: u32, _edges: &[Edge]) -> usize {
        0
    }
}

/// k-DA's own rule: highest residual first.
pub(crate) struct HighestResidual;

impl PartnerChooser for HighestResidual {
    fn choose(&mut self, _u: u32, candidates: &[u32], m: usize) -> Vec<u32> {
        candidates.iter().take(m).copied().collect()
    }
}

pub fn kda_anonymize(g: &Graph, cfg: &KdaConfig) -> Result<KdaOutput> {
    realize_kda(g, cfg, &mut HighestResidual)
}

/// Probing rounds tried after the first realization attempt gets stuck.
const PROBE_ROUNDS: usize = 8;

pub(crate) fn realize_kda(
    g: &Graph,
    cfg: &KdaConfig,
    chooser: &mut dyn PartnerChooser,
) -> Result<KdaOutput> {
    cfg.validate(g.node_count())?;
    let degrees = g.degrees();
    let mut by_degree: Vec<u32> = (0..g.node_count() as u32).collect();
    by_degree.sort_by_key(|&u| (degrees[u as usize], u));

    // Some k-anonymous targets are not graphical (a star with k = 2 asks
    // for two nodes adjacent to everything). When realization gets stuck,
    // probe: pretend the lowest-degree nodes have one more edge and rerun
    // the dynamic program, bumping more nodes each round.
    let mut last_err = None;
    for round in 0..=PROBE_ROUNDS {
        let mut probed = degrees.clone();
        let bumped = (round * cfg.k * (1 << round.saturating_sub(1))).min(g.node_count());
        for &u in &by_degree[..bumped] {
            probed[u as usize] = (probed[u as usize] + 1).min(g.node_count() - 1);
        }
        let mut groups = optimal_groups(&probed, cfg.k)?;
        fix_parity(&mut groups, g.node_count())?;
        match realize_groups(g, &degrees, &groups, cfg, round, chooser) {
            Ok((graph, deletions)) => {
                if round > 0 {
                    log::warn!("k-DA realization needed {round} probing round(s)");
                }
                let added = graph.edges().iter().filter(|&&e| !g.contains(e)).count();
                let deleted = g.edges().iter().filter(|&&e| !graph.contains(e)).count();
                debug_assert!(super::graph_is_k_anonymous(&graph, cfg.k));
                return Ok(KdaOutput {
                    meta: AnonymizationMeta {
                        mechanism: Mechanism::Kda { k: cfg.k },
                        seed: cfg.seed,
                        enhanced: false,
                        nodes: graph.node_count(),
                        original_edges: g.edge_count(),
                        anonymized_edges: graph.edge_count(),
                        added,
                        deleted,
                        relaxation_deletions: Some(deletions),
                        probing_rounds: Some(round),
                        unmet_deltas: None,
                    },
                    graph,
                });
            }
            Err(e @ Error::Realization { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn realize_groups(
    g: &Graph,
    degrees: &[usize],
    groups: &[Group],
    cfg: &KdaConfig,
    round: usize,
    chooser: &mut dyn PartnerChooser,
) -> Result<(Graph, usize)> {
    let mut residual = vec![0i64; g.node_count()];
    for group in groups {
        for &u in &group.members {
            residual[u as usize] = group.value as i64 - degrees[u as usize] as i64;
        }
    }

    let rng = match round {
        0 => rng::stream(cfg.seed, rng::STREAM_REALIZE),
        r => rng::keyed(cfg.seed, rng::STREAM_REALIZE, r as u64),
    };
    let mut state = Realization {
        builder: g.to_builder(),
        active: BTreeSet::new(),
        edge_pool: g.edges().to_vec(),
        rng,
        residual,
        steps: 0,
        budget: 10 * g.edge_count().max(1),
        deletions: 0,
    };
    for u in 0..g.node_count() as u32 {
        if state.residual[u as usize] > 0 {
            state.active.insert((Reverse(state.residual[u as usize]), u));
        }
    }

    while let Some(&(_, u)) = state.active.first() {
        loop {
            let need = state.residual[u as usize];
            if need <= 0 {
                break;
            }
            let candidates: Vec<u32> = state
                .active
                .iter()
                .map(|&(_, v)| v)
                .filter(|&v| v != u && !state.builder.has_edge(u, v))
                .collect();
            let picked = chooser.choose(u, &candidates, need as usize);
            for v in picked {
                state.connect(u, v)?;
            }
            if state.residual[u as usize] > 0 {
                state.relax(u, chooser)?;
            }
        }
    }
    Ok((state.builder.build(), state.deletions))
}

struct Realization {
    builder: GraphBuilder,
    /// Positive-residual nodes ordered by residual descending, id ascending.
    active: BTreeSet<(Reverse<i64>, u32)>,
    /// Superset of the live edges; stale entries are dropped when sampled.
    edge_pool: Vec<Edge>,
    rng: StageRng,
    residual: Vec<i64>,
    steps: usize,
    budget: usize,
    deletions: usize,
}

impl Realization {
    fn set_residual(&mut self, u: u32, value: i64) {
        let old = self.residual[u as usize];
        if old > 0 {
            self.active.remove(&(Reverse(old), u));
        }
        self.residual[u as usize] = value;
        if value > 0 {
            self.active.insert((Reverse(value), u));
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::Realization {
                steps: self.steps,
                unmet_residual: self.residual.iter().filter(|&&r| r > 0).sum::<i64>() as u64,
                stuck_nodes: self.active.len(),
            });
        }
        Ok(())
    }

    fn connect(&mut self, u: u32, v: u32) -> Result<()> {
        debug_assert!(self.residual[v as usize] > 0);
        if !self.builder.add_edge(u, v) {
            return Ok(());
        }
        self.edge_pool.push(Edge::new(u, v).expect("u != v"));
        self.set_residual(u, self.residual[u as usize] - 1);
        self.set_residual(v, self.residual[v as usize] - 1);
        self.tick()
    }

    /// Deletes a random edge between two zero-residual nodes, preferring
    /// edges whose endpoints are both non-neighbors of `u`, so that `u` can
    /// take over the freed degree.
    fn relax(&mut self, u: u32, chooser: &mut dyn PartnerChooser) -> Result<()> {
        let mut batch = Vec::new();
        for _ in 0..chooser.relax_batch() {
            match self.sample_edge(|s, e| s.deletable(e) && s.free_for(u, e)) {
                Some(e) => batch.push(e),
                None => break,
            }
        }
        let victim = if batch.is_empty() {
            self.sample_edge(|s, e| s.deletable(e) && e.u() != u && e.v() != u)
        } else {
            Some(batch[chooser.choose_victim(u, &batch)])
        };
        let Some(e) = victim else {
            return Err(Error::Realization {
                steps: self.steps,
                unmet_residual: self.residual.iter().filter(|&&r| r > 0).sum::<i64>() as u64,
                stuck_nodes: self.active.len(),
            });
        };
        self.builder.remove_edge(e.u(), e.v());
        self.deletions += 1;
        self.set_residual(e.u(), self.residual[e.u() as usize] + 1);
        self.set_residual(e.v(), self.residual[e.v() as usize] + 1);
        self.tick()
    }

    fn deletable(&self, e: Edge) -> bool {
        self.residual[e.u() as usize] == 0 && self.residual[e.v() as usize] == 0
    }

    fn free_for(&self, u: u32, e: Edge) -> bool {
        e.u() != u
            && e.v() != u
            && !self.builder.has_edge(u, e.u())
            && !self.builder.has_edge(u, e.v())
    }

    /// Uniform sample among live edges satisfying `accept`: rejection
    /// sampling first, then an exhaustive pass.
    fn sample_edge(&mut self, accept: impl Fn(&Self, Edge) -> bool) -> Option<Edge> {
        const TRIES: usize = 256;
        for _ in 0..TRIES {
            if self.edge_pool.is_empty() {
                return None;
            }
            let i = self.rng.random_range(0..self.edge_pool.len());
            let e = self.edge_pool[i];
            if !self.builder.has_edge(e.u(), e.v()) {
                self.edge_pool.swap_remove(i);
                continue;
            }
            if accept(self, e) {
                return Some(e);
            }
        }
        self.edge_pool.sort_unstable();
        self.edge_pool.dedup();
        let builder = &self.builder;
        self.edge_pool.retain(|e| builder.has_edge(e.u(), e.v()));
        let eligible: Vec<Edge> = self
            .edge_pool
            .iter()
            .copied()
            .filter(|&e| accept(self, e))
            .collect();
        if eligible.is_empty() {
            None
        } else {
            Some(eligible[self.rng.random_range(0..eligible.len())])
        }
    }
}
