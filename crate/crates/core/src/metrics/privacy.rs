// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_same_universe, dk2_series, dk2_series_under, Graph};

/// Privacy loss of the anonymized (`_a`) and recovered (`_r`) graphs.
/// k-DA runs fill the degree differences, SalaDP runs the dK-2 statistics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_r: Option<f64>,
    /// Graphs behind the dK-2 statistics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// Mean absolute per-node degree difference.
pub fn degree_difference(g: &Graph, other: &Graph) -> Result<f64> {
    check_same_universe(g, other)?;
    if g.node_count() == 0 {
        return Ok(0.0);
    }
    let total: usize = (0..g.node_count() as u32)
        .map(|u| g.degree(u).abs_diff(other.degree(u)))
        .sum();
    Ok(total as f64 / g.node_count() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    /// Mean over cells of the mean absolute noise.
    pub zeta: f64,
    /// Mean over cells of the entropy (bits) of the observed noise values.
    pub entropy: f64,
    pub cells: usize,
}

/// dK-2 noise of `samples` relative to `g`.
///
/// Every sample is bucketed by the degrees of `g`, the same cells SalaDP
/// perturbs, so removing an edge only touches its own cell. A cell seen in
/// a sample but not in `g` is compared against a count of zero.
pub fn dk2_noise_stats(g: &Graph, samples: &[Graph]) -> Result<NoiseStats> {
    if samples.is_empty() {
        return Err(Error::Config("noise statistics need at least one sample".into()));
    }
    for s in samples {
        check_same_universe(g, s)?;
    }
    let original = dk2_series(g);
    let degrees = g.degrees();
    let series: Vec<_> = samples.iter().map(|s| dk2_series_under(s, &degrees)).collect();
    let keys: BTreeSet<(u32, u32)> = original
        .keys()
        .chain(series.iter().flat_map(|s| s.keys()))
        .collect();
    let cells: Vec<Vec<i64>> = keys
        .iter()
        .map(|&(i, j)| {
            let base = original.get(i, j) as i64;
            series.iter().map(|s| s.get(i, j) as i64 - base).collect()
        })
        .collect();
    Ok(noise_stats(&cells))
}

/// Statistics over per-cell noise samples.
pub fn noise_stats(cells: &[Vec<i64>]) -> NoiseStats {
    if cells.is_empty() {
        return NoiseStats {
            zeta: 0.0,
            entropy: 0.0,
            cells: 0,
        };
    }
    let mut zeta = 0.0;
    let mut entropy = 0.0;
    for noise in cells {
        let n = noise.len() as f64;
        zeta += noise.iter().map(|x| x.unsigned_abs() as f64).sum::<f64>() / n;
        let mut freq: BTreeMap<i64, usize> = BTreeMap::new();
        for &x in noise {
            *freq.entry(x).or_insert(0) += 1;
        }
        entropy -= freq
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                p * p.log2()
            })
            .sum::<f64>();
    }
    NoiseStats {
        zeta: zeta / cells.len() as f64,
        entropy: entropy / cells.len() as f64,
        cells: cells.len(),
    }
}
