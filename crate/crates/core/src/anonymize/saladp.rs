// SPDX-License-Identifier: Apache-2.0

//! dK-2 differential privacy (Laplace noise on the joint degree counts).

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnonymizationMeta, Mechanism, SaladpConfig};
use crate::error::Result;
use crate::graph::{dk2_key, dk2_series, DK2Series, Edge, Graph, GraphBuilder};
use crate::rng::{self, StageRng};

/// Additions per needed edge before a cell is given up on.
const ATTEMPTS_PER_EDGE: usize = 50;

/// Laplace scale for cell `(i, j)`: `(4 max(i, j) + 1) / epsilon`.
pub fn laplace_scale(i: u32, j: u32, epsilon: f64) -> f64 {
    (4.0 * i.max(j) as f64 + 1.0) / epsilon
}

/// One draw from Laplace(0, scale) by inverting the CDF.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let mut r: f64 = rng.random();
    while r == 0.0 {
        r = rng.random();
    }
    let u = r - 0.5;
    let magnitude = -(1.0 - 2.0 * u.abs()).ln();
    if scale == 0.0 {
        0.0
    } else {
        scale * magnitude * u.signum()
    }
}

/// Noised copy of `series`. Cells are visited in key order, each gets an
/// independent Laplace draw, and the result is rounded half away from zero
/// and clamped at zero. Zero-valued cells stay in the output.
pub fn saladp_noise_dk2(series: &DK2Series, epsilon: f64, seed: u64) -> DK2Series {
    let mut rng = rng::stream(seed, rng::STREAM_NOISE);
    noise_with(series, epsilon, &mut rng)
}

fn noise_with(series: &DK2Series, epsilon: f64, rng: &mut StageRng) -> DK2Series {
    let mut noised = DK2Series::default();
    for ((i, j), count) in series.iter() {
        let noise = sample_laplace(rng, laplace_scale(i, j, epsilon));
        let value = (count as f64 + noise).round().max(0.0);
        noised.set((i, j), value as u64);
    }
    noised
}

/// A dK-2 cell whose noised count could not be reached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnmetDelta {
    pub i: u32,
    pub j: u32,
    /// Signed change the noise asked for.
    pub wanted: i64,
    /// Signed change actually made.
    pub realized: i64,
}

#[derive(Clone, Debug)]
pub struct SaladpOutput {
    pub graph: Graph,
    pub noised: DK2Series,
    pub meta: AnonymizationMeta,
}

/// Proposes a new edge inside a dK-2 cell.
pub(crate) trait PairProposer {
    /// One attempt at a non-adjacent pair with original degrees `(i, j)`.
    /// `side_i` and `side_j` list the nodes of each degree.
    fn propose(
        &mut self,
        rng: &mut StageRng,
        builder: &GraphBuilder,
        side_i: &[u32],
        side_j: &[u32],
    ) -> Option<(u32, u32)>;
}

/// Uniformly random pair.
pub(crate) struct UniformPairs;

impl PairProposer for UniformPairs {
    fn propose(
        &mut self,
        rng: &mut StageRng,
        builder: &GraphBuilder,
        side_i: &[u32],
        side_j: &[u32],
    ) -> Option<(u32, u32)> {
        let u = side_i[rng.random_range(0..side_i.len())];
        let v = side_j[rng.random_range(0..side_j.len())];
        (u != v && !builder.has_edge(u, v)).then_some((u, v))
    }
}

pub fn saladp_anonymize(g: &Graph, cfg: &SaladpConfig) -> Result<SaladpOutput> {
    realize_saladp(g, cfg, &mut UniformPairs)
}

/// Shared realization. Cells are keyed by the ORIGINAL degrees, so adding an
/// edge never moves other edges between cells.
pub(crate) fn realize_saladp(
    g: &Graph,
    cfg: &SaladpConfig,
    proposer: &mut dyn PairProposer,
) -> Result<SaladpOutput> {
    cfg.validate()?;
    let original = dk2_series(g);
    let noised = saladp_noise_dk2(&original, cfg.epsilon, cfg.seed);
    let degrees = g.degrees();

    let mut by_degree: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (u, &d) in degrees.iter().enumerate() {
        by_degree.entry(d as u32).or_default().push(u as u32);
    }
    let mut cell_edges: BTreeMap<(u32, u32), Vec<Edge>> = BTreeMap::new();
    for &e in g.edges() {
        cell_edges.entry(dk2_key(&degrees, e)).or_default().push(e);
    }

    let mut rng = rng::stream(cfg.seed, rng::STREAM_REALIZE);
    let mut builder = g.to_builder();
    let mut unmet = Vec::new();

    for ((i, j), target) in noised.iter() {
        let current = original.get(i, j);
        let wanted = target as i64 - current as i64;
        let realized = match wanted.signum() {
            0 => 0,
            -1 => {
                let edges = &cell_edges[&(i, j)];
                let remove = (-wanted) as usize;
                for idx in index::sample(&mut rng, edges.len(), remove.min(edges.len())) {
                    let e = edges[idx];
                    builder.remove_edge(e.u(), e.v());
                }
                -(remove.min(edges.len()) as i64)
            }
            _ => {
                let need = wanted as usize;
                let side_i = &by_degree[&i];
                let side_j = &by_degree[&j];
                let mut added = 0usize;
                let mut attempts = 0usize;
                while added < need && attempts < need * ATTEMPTS_PER_EDGE {
                    attempts += 1;
                    if let Some((u, v)) = proposer.propose(&mut rng, &builder, side_i, side_j) {
                        if builder.add_edge(u, v) {
                            added += 1;
                        }
                    }
                }
                added as i64
            }
        };
        if realized != wanted {
            unmet.push(UnmetDelta {
                i,
                j,
                wanted,
                realized,
            });
        }
    }

    let graph = builder.build();
    let added = graph.edges().iter().filter(|&&e| !g.contains(e)).count();
    let deleted = g.edges().iter().filter(|&&e| !graph.contains(e)).count();
    Ok(SaladpOutput {
        meta: AnonymizationMeta {
            mechanism: Mechanism::Saladp {
                epsilon: cfg.epsilon,
            },
            seed: cfg.seed,
            enhanced: false,
            nodes: graph.node_count(),
            original_edges: g.edge_count(),
            anonymized_edges: graph.edge_count(),
            added,
            deleted,
            relaxation_deletions: None,
            probing_rounds: None,
            unmet_deltas: Some(unmet),
        },
        graph,
        noised,
    })
}
