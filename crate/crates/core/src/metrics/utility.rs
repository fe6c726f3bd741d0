// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::cosine_similarity;
use crate::error::{Error, Result};
use crate::graph::{check_same_universe, Graph};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityVectors {
    /// Fraction of nodes with each degree, indexed `0..=max degree`.
    pub degree_distribution: Vec<f64>,
    pub eigencentrality: Vec<f64>,
    pub triangle_count: Vec<f64>,
}

pub fn utility_vectors(g: &Graph) -> Result<UtilityVectors> {
    let n = g.node_count().max(1) as f64;
    let mut degree_distribution = vec![0.0; g.max_degree() + 1];
    for d in g.degrees() {
        degree_distribution[d] += 1.0 / n;
    }
    Ok(UtilityVectors {
        degree_distribution,
        eigencentrality: eigencentrality(g)?,
        triangle_count: triangle_counts(g).into_iter().map(|t| t as f64).collect(),
    })
}

/// Principal adjacency eigenvector, unit L2 norm, nonnegative.
///
/// Iterates on `A + I`, which has the same eigenvectors as `A` but no
/// `-lambda` partner for bipartite graphs, so the iteration cannot oscillate.
pub fn eigencentrality(g: &Graph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITER {
        for (u, out) in next.iter_mut().enumerate() {
            *out = x[u] + g.neighbors(u as u32).iter().map(|&v| x[v as usize]).sum::<f64>();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut next {
            *v /= norm;
        }
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut x, &mut next);
        if delta < POWER_TOL {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(POWER_MAX_ITER))
}

/// Triangles through each node.
pub fn triangle_counts(g: &Graph) -> Vec<u64> {
    let mut counts = vec![0u64; g.node_count()];
    for e in g.edges() {
        let (u, v) = e.endpoints();
        // Count each triangle once, from its two smallest nodes.
        for w in g.common_neighbors(u, v).filter(|&w| w > v) {
            counts[u as usize] += 1;
            counts[v as usize] += 1;
            counts[w as usize] += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilitySimilarity {
    pub degree_distribution: f64,
    pub eigencentrality: f64,
    pub triangle_count: f64,
}

pub fn utility_similarity(a: &UtilityVectors, b: &UtilityVectors) -> Result<UtilitySimilarity> {
    if a.eigencentrality.len() != b.eigencentrality.len() {
        return Err(Error::UniverseMismatch {
            left: a.eigencentrality.len(),
            right: b.eigencentrality.len(),
        });
    }
    let len = a.degree_distribution.len().max(b.degree_distribution.len());
    let pad = |v: &[f64]| {
        let mut out = v.to_vec();
        out.resize(len, 0.0);
        out
    };
    Ok(UtilitySimilarity {
        degree_distribution: cosine_similarity(
            &pad(&a.degree_distribution),
            &pad(&b.degree_distribution),
        )?,
        eigencentrality: cosine_similarity(&a.eigencentrality, &b.eigencentrality)?,
        triangle_count: cosine_similarity(&a.triangle_count, &b.triangle_count)?,
    })
}

/// Similarity of the original graph to its anonymized and, when available,
/// enhanced anonymized versions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub anonymized: UtilitySimilarity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enhanced: Option<UtilitySimilarity>,
}

impl UtilityReport {
    pub fn compute(g: &Graph, ga: &Graph, gf: Option<&Graph>) -> Result<Self> {
        check_same_universe(g, ga)?;
        let base = utility_vectors(g)?;
        let anonymized = utility_similarity(&base, &utility_vectors(ga)?)?;
        let enhanced = match gf {
            Some(gf) => {
                check_same_universe(g, gf)?;
                Some(utility_similarity(&base, &utility_vectors(gf)?)?)
            }
            None => None,
        };
        Ok(UtilityReport {
            anonymized,
            enhanced,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_graph() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let u = utility_vectors(&g).unwrap();
        assert_eq!(u.degree_distribution, vec![0.0, 0.0, 1.0]);
        assert_eq!(u.triangle_count, vec![1.0, 1.0, 1.0]);
        for c in u.eigencentrality {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn path_has_no_triangles() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(triangle_counts(&g), vec![0, 0, 0]);
    }

    #[test]
    fn bipartite_graph_converges() {
        // Star: bipartite, so plain power iteration on A would oscillate.
        let g = Graph::from_edges(5, (1..5).map(|v| (0, v)));
        let c = eigencentrality(&g).unwrap();
        assert!((c[0] - 1.0 / 2f64.sqrt()).abs() < 1e-8);
        assert!((c[1] - 0.5 / 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn identical_graphs_are_fully_similar() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]);
        let r = UtilityReport::compute(&g, &g, None).unwrap();
        for s in [r.anonymized.degree_distribution, r.anonymized.eigencentrality, r.anonymized.triangle_count] {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_free_similarity_is_an_error() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert!(matches!(UtilityReport::compute(&g, &g, None), Err(Error::ZeroVector)));
    }
}
