// SPDX-License-Identifier: Apache-2.0

//! Anonymizers that choose plausible-looking fake edges.
//!
//! A Gaussian is fitted to the plausibility of the original graph's edges.
//! Wherever k-DA or SalaDP would pick a partner for a new edge, the enhanced
//! variant instead samples candidates with probability proportional to the
//! Gaussian density of their plausibility, computed on an embedding of the
//! original graph. The privacy mechanics (target degrees, noised dK-2
//! counts) are untouched.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anonymize::kda::{realize_kda, KdaOutput, PartnerChooser};
use crate::anonymize::saladp::{realize_saladp, PairProposer, SaladpOutput};
use crate::anonymize::{KdaConfig, SaladpConfig};
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, GraphBuilder};
use crate::plausibility::{cosine, EdgeScores};
use crate::rng::{self, StageRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityPrior {
    pub mu: f64,
    pub sigma: f64,
}

impl PlausibilityPrior {
    pub fn density(&self, s: f64) -> f64 {
        let z = (s - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Maximum-likelihood Gaussian over the scores (variance divisor `n`).
pub fn fit_prior(scores: &EdgeScores) -> Result<PlausibilityPrior> {
    let values = scores.values();
    if values.len() < 2 {
        return Err(Error::Degenerate("prior needs at least two edges".into()));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let sigma = (values.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / n).sqrt();
    if values.iter().all(|&s| s == values[0]) || !(sigma > 0.0) {
        return Err(Error::Degenerate("plausibility scores have zero variance".into()));
    }
    Ok(PlausibilityPrior { mu, sigma })
}

/// Draws up to `m` candidates without replacement, each draw proportional
/// to the prior density of its plausibility with `u`. Falls back to uniform
/// draws once every remaining density has underflowed to zero.
pub fn weighted_pick<R: Rng + ?Sized>(
    u: u32,
    candidates: &[u32],
    m: usize,
    prior: &PlausibilityPrior,
    emb: &Embedding,
    rng: &mut R,
) -> Vec<u32> {
    if candidates.len() <= m {
        return candidates.to_vec();
    }
    let mut pool: Vec<(u32, f64)> = candidates
        .iter()
        .map(|&v| (v, plausibility_weight(u, v, prior, emb)))
        .collect();
    let mut picked = Vec::with_capacity(m);
    for _ in 0..m {
        let idx = weighted_index(pool.iter().map(|&(_, w)| w), rng);
        // `remove` keeps the candidate order and hence the draw stream stable.
        picked.push(pool.remove(idx).0);
    }
    picked
}

/// One draw proportional to `weights`, uniform if they are all zero.
fn weighted_index<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let len = weights.clone().count();
    if !(total > 0.0 && total.is_finite()) {
        return rng.random_range(0..len);
    }
    let mut r = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        if r < w {
            return i;
        }
        r -= w;
    }
    // Rounding walked past the end.
    last_positive
}

fn plausibility_weight(u: u32, v: u32, prior: &PlausibilityPrior, emb: &Embedding) -> f64 {
    emb.vector(u)
        .zip(emb.vector(v))
        .and_then(|(a, b)| cosine(a, b).ok())
        .map_or(0.0, |s| prior.density(s))
}

fn check_coverage(g: &Graph, emb: &Embedding) -> Result<()> {
    if emb.node_count() < g.node_count() {
        return Err(Error::MissingVector(emb.node_count() as u32));
    }
    Ok(())
}

struct WeightedPartners<'a> {
    prior: &'a PlausibilityPrior,
    emb: &'a Embedding,
    rng: StageRng,
}

/// Deletable edges compared per relaxation step.
const RELAX_BATCH: usize = 16;

impl PartnerChooser for WeightedPartners<'_> {
    fn choose(&mut self, u: u32, candidates: &[u32], m: usize) -> Vec<u32> {
        weighted_pick(u, candidates, m, self.prior, self.emb, &mut self.rng)
    }

    fn relax_batch(&self) -> usize {
        RELAX_BATCH
    }

    // Both endpoints of the deleted edge end up adjacent to `u`.
    fn choose_victim(&mut self, u: u32, edges: &[Edge]) -> usize {
        let weights = edges.iter().map(|e| {
            plausibility_weight(u, e.u(), self.prior, self.emb)
                * plausibility_weight(u, e.v(), self.prior, self.emb)
        });
        weighted_index(weights, &mut self.rng)
    }
}

/// k-DA with plausibility-weighted partner choice.
pub fn enhanced_kda(
    g: &Graph,
    cfg: &KdaConfig,
    prior: &PlausibilityPrior,
    emb_g: &Embedding,
) -> Result<KdaOutput> {
    check_coverage(g, emb_g)?;
    let mut chooser = WeightedPartners {
        prior,
        emb: emb_g,
        rng: rng::stream(cfg.seed, rng::STREAM_ENHANCE),
    };
    let mut out = realize_kda(g, cfg, &mut chooser)?;
    out.meta.enhanced = true;
    Ok(out)
}

struct WeightedPairs<'a> {
    prior: &'a PlausibilityPrior,
    emb: &'a Embedding,
}

impl PairProposer for WeightedPairs<'_> {
    fn propose(
        &mut self,
        rng: &mut StageRng,
        builder: &GraphBuilder,
        side_i: &[u32],
        side_j: &[u32],
    ) -> Option<(u32, u32)> {
        let u = side_i[rng.random_range(0..side_i.len())];
        let candidates: Vec<u32> = side_j
            .iter()
            .copied()
            .filter(|&v| v != u && !builder.has_edge(u, v))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let v = weighted_pick(u, &candidates, 1, self.prior, self.emb, rng)[0];
        Some((u, v))
    }
}

/// SalaDP with plausibility-weighted pair choice inside each deficit cell.
pub fn enhanced_saladp(
    g: &Graph,
    cfg: &SaladpConfig,
    prior: &PlausibilityPrior,
    emb_g: &Embedding,
) -> Result<SaladpOutput> {
    check_coverage(g, emb_g)?;
    let mut out = realize_saladp(g, cfg, &mut WeightedPairs { prior, emb: emb_g })?;
    out.meta.enhanced = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plausibility::{Metric, ScoreRecord};

    fn scores(values: &[f64]) -> EdgeScores {
        EdgeScores {
            metric: Metric::Cosine,
            records: values
                .iter()
                .enumerate()
                .map(|(i, &score)| ScoreRecord {
                    u: 0,
                    v: i as u32 + 1,
                    score,
                })
                .collect(),
        }
    }

    #[test]
    fn prior_is_mle() {
        let p = fit_prior(&scores(&[0.5, 0.7])).unwrap();
        assert!((p.mu - 0.6).abs() < 1e-12);
        assert!((p.sigma - 0.1).abs() < 1e-12);
        assert!(fit_prior(&scores(&[0.4, 0.4, 0.4])).is_err());
        assert!(fit_prior(&scores(&[0.4])).is_err());
    }

    #[test]
    fn small_candidate_set_is_returned_whole() {
        let emb = Embedding::from_rows(2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let prior = PlausibilityPrior { mu: 0.5, sigma: 0.1 };
        let mut rng = rng::stream(0, 0);
        assert_eq!(weighted_pick(0, &[1, 2], 2, &prior, &emb, &mut rng), vec![1, 2]);
        assert!(weighted_pick(0, &[], 1, &prior, &emb, &mut rng).is_empty());
    }

    #[test]
    fn underflowing_weights_fall_back_to_uniform() {
        // Both candidates sit hundreds of sigmas from the prior mean.
        let emb = Embedding::from_rows(2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let prior = PlausibilityPrior { mu: -1.0, sigma: 1e-3 };
        let mut rng = rng::stream(1, 0);
        let mut seen = [0usize; 3];
        for _ in 0..200 {
            seen[weighted_pick(0, &[1, 2], 1, &prior, &emb, &mut rng)[0] as usize] += 1;
        }
        assert!(seen[1] > 50 && seen[2] > 50, "{seen:?}");
    }
}
