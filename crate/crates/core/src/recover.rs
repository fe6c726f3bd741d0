// SPDX-License-Identifier: Apache-2.0

//! Unsupervised fake-edge recovery.
//!
//! A two-component Gaussian mixture is fitted to the plausibility scores by
//! EM. Component 0 models original edges and component 1 fake edges; after
//! fitting, the component with the smaller mean is always relabeled as the
//! fake one. Each edge then takes the label with the larger posterior and
//! predicted-fake edges are removed.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::plausibility::EdgeScores;
use crate::rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub w0: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub w1: f64,
    pub mu1: f64,
    pub sigma1: f64,
}

fn log_normal(s: f64, mu: f64, sigma: f64) -> f64 {
    let z = (s - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

/// `ln(e^a + e^b)` without overflow.
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl GmmParams {
    /// Weighted log-densities `(ln w0 N0(s), ln w1 N1(s))`.
    fn joint_logs(&self, s: f64) -> (f64, f64) {
        (
            self.w0.ln() + log_normal(s, self.mu0, self.sigma0),
            self.w1.ln() + log_normal(s, self.mu1, self.sigma1),
        )
    }

    pub fn log_likelihood(&self, scores: &[f64]) -> f64 {
        scores
            .iter()
            .map(|&s| {
                let (a, b) = self.joint_logs(s);
                log_add(a, b)
            })
            .sum()
    }

    /// `(P(original | s), P(fake | s))`.
    pub fn posterior(&self, s: f64) -> (f64, f64) {
        let (a, b) = self.joint_logs(s);
        let total = log_add(a, b);
        if total == f64::NEG_INFINITY {
            return (1.0, 0.0);
        }
        let p_fake = (b - total).exp();
        (1.0 - p_fake, p_fake)
    }

    /// Swaps components so that component 1 has the smaller mean.
    fn oriented(self) -> Self {
        if self.mu1 <= self.mu0 {
            return self;
        }
        GmmParams {
            w0: self.w1,
            mu0: self.mu1,
            sigma0: self.sigma1,
            w1: self.w0,
            mu1: self.mu0,
            sigma1: self.sigma0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmConfig {
    /// Stop once the log-likelihood gains less than this in one iteration.
    pub tol: f64,
    pub max_iterations: usize,
    /// Jittered restarts on top of the percentile start.
    pub restarts: usize,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            tol: 1e-3,
            max_iterations: 500,
            restarts: 5,
            sigma_floor: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    #[serde(flatten)]
    pub params: GmmParams,
    pub loglik: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit first.
    pub converged: bool,
    /// Log-likelihood at the start of every iteration of the winning run.
    #[serde(skip)]
    pub history: Vec<f64>,
}

pub fn fit_gmm(scores: &EdgeScores, cfg: &GmmConfig) -> Result<GmmFit> {
    fit_gmm_values(&scores.values(), cfg)
}

pub fn fit_gmm_values(values: &[f64], cfg: &GmmConfig) -> Result<GmmFit> {
    if values.iter().any(|s| !s.is_finite()) {
        return Err(Error::Degenerate("non-finite plausibility score".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate(
            "mixture fitting needs at least two distinct scores".into(),
        ));
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(cfg.sigma_floor);
    let pct = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    let base = GmmParams {
        w0: 0.5,
        mu0: pct(0.9),
        sigma0: std,
        w1: 0.5,
        mu1: pct(0.1),
        sigma1: std,
    };

    let mut rng = rng::stream(cfg.seed, rng::STREAM_GMM);
    let mut starts = vec![base];
    for _ in 0..cfg.restarts {
        starts.push(GmmParams {
            mu0: base.mu0 + rng.random_range(-0.5..0.5) * std,
            mu1: base.mu1 + rng.random_range(-0.5..0.5) * std,
            ..base
        });
    }

    let mut best: Option<GmmFit> = None;
    for start in starts {
        let fit = run_em(values, start, cfg);
        if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("at least one start");
    if !best.converged {
        log::warn!(
            "EM stopped at the {}-iteration cap without converging",
            cfg.max_iterations
        );
    }
    best.params = best.params.oriented();
    Ok(best)
}

fn run_em(values: &[f64], start: GmmParams, cfg: &GmmConfig) -> GmmFit {
    let n = values.len() as f64;
    let mut params = start;
    let mut history = Vec::new();
    for iteration in 0..=cfg.max_iterations {
        // E-step, accumulating the M-step sufficient statistics as we go.
        let mut ll = 0.0;
        let (mut r0, mut s0, mut q0) = (0.0, 0.0, 0.0);
        let (mut r1, mut s1, mut q1) = (0.0, 0.0, 0.0);
        for &s in values {
            let (a, b) = params.joint_logs(s);
            let total = log_add(a, b);
            ll += total;
            let g1 = (b - total).exp();
            let g0 = 1.0 - g1;
            r0 += g0;
            s0 += g0 * s;
            q0 += g0 * s * s;
            r1 += g1;
            s1 += g1 * s;
            q1 += g1 * s * s;
        }
        let converged = history.last().is_some_and(|&prev: &f64| ll - prev < cfg.tol);
        history.push(ll);
        if converged || iteration == cfg.max_iterations {
            return GmmFit {
                params,
                loglik: ll,
                iterations: iteration,
                converged,
                history,
            };
        }

        // M-step. A component that lost all responsibility keeps its
        // mean and spread with zero weight.
        let update = |r: f64, s: f64, q: f64, mu: f64, sigma: f64| {
            if r <= 0.0 {
                return (mu, sigma);
            }
            let m = s / r;
            let var = (q / r - m * m).max(0.0);
            (m, var.sqrt().max(cfg.sigma_floor))
        };
        let (mu0, sigma0) = update(r0, s0, q0, params.mu0, params.sigma0);
        let (mu1, sigma1) = update(r1, s1, q1, params.mu1, params.sigma1);
        params = GmmParams {
            w0: r0 / n,
            mu0,
            sigma0,
            w1: r1 / n,
            mu1,
            sigma1,
        };
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Original,
    Fake,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub u: u32,
    pub v: u32,
    pub score: f64,
    pub p_original: f64,
    pub p_fake: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PosteriorTable {
    pub rows: Vec<PosteriorRow>,
}

impl PosteriorTable {
    pub fn predicted_fake(&self) -> BTreeSet<Edge> {
        self.rows
            .iter()
            .filter(|r| r.label == Label::Fake)
            .filter_map(|r| Edge::new(r.u, r.v))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Labels each edge fake iff its fake posterior is strictly larger.
pub fn map_classify(scores: &EdgeScores, params: &GmmParams) -> PosteriorTable {
    let rows = scores
        .records
        .iter()
        .map(|r| {
            let (p_original, p_fake) = params.posterior(r.score);
            PosteriorRow {
                u: r.u,
                v: r.v,
                score: r.score,
                p_original,
                p_fake,
                label: if p_fake > p_original {
                    Label::Fake
                } else {
                    Label::Original
                },
            }
        })
        .collect();
    PosteriorTable { rows }
}

/// `ga` minus the predicted-fake edges. The table must cover exactly `E(ga)`.
pub fn recover_graph(ga: &Graph, table: &PosteriorTable) -> Result<Graph> {
    let covered: Vec<Edge> = table.rows.iter().filter_map(|r| Edge::new(r.u, r.v)).collect();
    let covered_set: BTreeSet<Edge> = covered.iter().copied().collect();
    if covered.len() != table.rows.len()
        || covered_set.len() != ga.edge_count()
        || !ga.edges().iter().all(|e| covered_set.contains(e))
    {
        return Err(Error::Config(format!(
            "posterior table covers {} pairs but the graph has {} edges",
            covered_set.len(),
            ga.edge_count()
        )));
    }
    Ok(ga.without_edges(&table.predicted_fake()))
}

/// `n_fake` edges of `ga` drawn uniformly without replacement.
pub fn baseline_random(ga: &Graph, n_fake: usize, seed: u64) -> Result<BTreeSet<Edge>> {
    if n_fake > ga.edge_count() {
        return Err(Error::Config(format!(
            "cannot pick {n_fake} of {} edges",
            ga.edge_count()
        )));
    }
    let mut rng = rng::stream(seed, rng::STREAM_BASELINE);
    Ok(index::sample(&mut rng, ga.edge_count(), n_fake)
        .into_iter()
        .map(|i| ga.edges()[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plausibility::{Metric, ScoreRecord};

    fn scores_of(values: &[f64]) -> EdgeScores {
        EdgeScores {
            metric: Metric::Cosine,
            records: values
                .iter()
                .enumerate()
                .map(|(i, &score)| ScoreRecord {
                    u: i as u32,
                    v: i as u32 + 1,
                    score,
                })
                .collect(),
        }
    }

    #[test]
    fn separable_point_clusters() {
        let mut values = vec![0.0; 500];
        values.extend(std::iter::repeat_n(1.0, 500));
        let fit = fit_gmm_values(&values, &GmmConfig::default()).unwrap();
        let p = fit.params;
        assert!((p.mu0 - 1.0).abs() < 1e-6 && p.mu1.abs() < 1e-6, "{p:?}");
        assert!((p.w0 - 0.5).abs() < 1e-6 && (p.w1 - 0.5).abs() < 1e-6);
        assert!(p.sigma0 >= 1e-4 && p.sigma1 >= 1e-4);
    }

    #[test]
    fn identical_scores_are_degenerate() {
        assert!(matches!(
            fit_gmm_values(&[0.3; 10], &GmmConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn equal_variance_boundary_is_midpoint() {
        let p = GmmParams {
            w0: 0.5,
            mu0: 0.6,
            sigma0: 0.1,
            w1: 0.5,
            mu1: 0.05,
            sigma1: 0.1,
        };
        let (o, f) = p.posterior(0.325);
        assert!((o - f).abs() < 1e-12);
        let table = map_classify(&scores_of(&[0.5, 0.2, 0.325]), &p);
        let labels: Vec<_> = table.rows.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![Label::Original, Label::Fake, Label::Original]);
    }

    #[test]
    fn zero_fake_weight_labels_everything_original() {
        let p = GmmParams {
            w0: 1.0,
            mu0: 0.6,
            sigma0: 0.1,
            w1: 0.0,
            mu1: 0.05,
            sigma1: 0.1,
        };
        let table = map_classify(&scores_of(&[-1.0, 0.05, 0.9]), &p);
        assert!(table.rows.iter().all(|r| r.label == Label::Original));
    }

    #[test]
    fn far_tail_posteriors_stay_finite() {
        let p = GmmParams {
            w0: 0.5,
            mu0: 0.6,
            sigma0: 1e-4,
            w1: 0.5,
            mu1: 0.05,
            sigma1: 1e-4,
        };
        let (o, f) = p.posterior(-5.0);
        assert!(o.is_finite() && f.is_finite());
        assert!((o + f - 1.0).abs() < 1e-12);
        assert!(f > o);
    }

    #[test]
    fn recover_graph_cases() {
        let ga = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let mk = |labels: [Label; 3]| PosteriorTable {
            rows: ga
                .edges()
                .iter()
                .zip(labels)
                .map(|(e, label)| PosteriorRow {
                    u: e.u(),
                    v: e.v(),
                    score: 0.0,
                    p_original: 0.5,
                    p_fake: 0.5,
                    label,
                })
                .collect(),
        };
        use Label::*;
        assert_eq!(recover_graph(&ga, &mk([Original; 3])).unwrap(), ga);
        assert_eq!(recover_graph(&ga, &mk([Fake; 3])).unwrap(), Graph::empty(4));
        let gr = recover_graph(&ga, &mk([Fake, Original, Original])).unwrap();
        assert_eq!(gr.edge_count(), 2);

        let mut partial = mk([Original; 3]);
        partial.rows.pop();
        assert!(recover_graph(&ga, &partial).is_err());
    }

    #[test]
    fn baseline_random_extremes() {
        let ga = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(baseline_random(&ga, 3, 1).unwrap().len(), 3);
        assert!(baseline_random(&ga, 0, 1).unwrap().is_empty());
        assert!(baseline_random(&ga, 4, 1).is_err());
    }

    #[test]
    fn params_json_shape() {
        let fit = fit_gmm_values(&[0.1, 0.2, 0.8, 0.9, 0.85], &GmmConfig::default()).unwrap();
        let json: serde_json::Value = serde_json::to_value(&fit).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["converged", "iterations", "loglik", "mu0", "mu1", "sigma0", "sigma1", "w0", "w1"]
        );
    }

    #[test]
    fn posterior_csv_header() {
        let table = PosteriorTable {
            rows: vec![PosteriorRow {
                u: 0,
                v: 1,
                score: 0.5,
                p_original: 0.75,
                p_fake: 0.25,
                label: Label::Original,
            }],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "u,v,score,p_original,p_fake,label\n0,1,0.5,0.75,0.25,original\n"
        );
    }
}
