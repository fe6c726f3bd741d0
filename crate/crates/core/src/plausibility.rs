// SPDX-License-Identifier: Apache-2.0

//! Edge plausibility: vector similarity of an edge's endpoint embeddings,
//! plus the classical neighborhood-overlap baselines.
//!
//! Every [`Metric`] produces a score where higher means more plausible.
//! Distances are negated to fit that contract.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn bray_curtis(a: &[f32], b: &[f32]) -> Result<f64> {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        num += (x as f64 - y as f64).abs();
        den += (x as f64 + y as f64).abs();
    }
    if den == 0.0 {
        return Err(Error::Undefined("Bray-Curtis distance with zero denominator"));
    }
    Ok(num / den)
}

/// Neighborhood-overlap scores of one node pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralScores {
    pub embeddedness: usize,
    pub jaccard: f64,
    pub adamic_adar: f64,
}

pub fn structural_baselines(g: &Graph, u: u32, v: u32) -> StructuralScores {
    let mut common = 0usize;
    let mut adamic_adar = 0.0;
    for w in g.common_neighbors(u, v) {
        common += 1;
        let dw = g.degree(w);
        // A common neighbor of two distinct nodes has degree at least 2.
        debug_assert!(dw >= 2);
        if dw > 1 {
            adamic_adar += 1.0 / (dw as f64).ln();
        }
    }
    let union = g.degree(u) + g.degree(v) - common;
    let jaccard = if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    };
    StructuralScores {
        embeddedness: common,
        jaccard,
        adamic_adar,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    Euclidean,
    BrayCurtis,
    Embeddedness,
    Jaccard,
    AdamicAdar,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Cosine,
        Metric::Euclidean,
        Metric::BrayCurtis,
        Metric::Embeddedness,
        Metric::Jaccard,
        Metric::AdamicAdar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::BrayCurtis => "bray_curtis",
            Metric::Embeddedness => "embeddedness",
            Metric::Jaccard => "jaccard",
            Metric::AdamicAdar => "adamic_adar",
        }
    }

    /// Whether the metric reads the embedding (as opposed to graph structure).
    pub fn uses_embedding(self) -> bool {
        matches!(self, Metric::Cosine | Metric::Euclidean | Metric::BrayCurtis)
    }

    /// Plausibility of the pair `(u, v)` in `g`.
    pub fn score(self, g: &Graph, emb: Option<&Embedding>, u: u32, v: u32) -> Result<f64> {
        if self.uses_embedding() {
            let emb = emb.ok_or_else(|| {
                Error::Config(format!("metric {} needs an embedding", self.name()))
            })?;
            let fu = emb.vector(u).ok_or(Error::MissingVector(u))?;
            let fv = emb.vector(v).ok_or(Error::MissingVector(v))?;
            return match self {
                Metric::Cosine => cosine(fu, fv),
                Metric::Euclidean => Ok(-euclidean(fu, fv)),
                _ => bray_curtis(fu, fv).map(|d| -d),
            };
        }
        let s = structural_baselines(g, u, v);
        Ok(match self {
            Metric::Embeddedness => s.embeddedness as f64,
            Metric::Jaccard => s.jaccard,
            _ => s.adamic_adar,
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s || (s == "bray-curtis" && *m == Metric::BrayCurtis))
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub u: u32,
    pub v: u32,
    pub score: f64,
}

impl ScoreRecord {
    pub fn edge(&self) -> Edge {
        Edge::new(self.u, self.v).expect("score record on a self-loop")
    }
}

/// One score per edge, sorted by `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeScores {
    pub metric: Metric,
    pub records: Vec<ScoreRecord>,
}

impl EdgeScores {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "v", "score", "metric"])?;
        for r in &self.records {
            w.write_record([
                r.u.to_string(),
                r.v.to_string(),
                format!("{:?}", r.score),
                self.metric.name().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            u: u32,
            v: u32,
            score: f64,
            metric: String,
        }
        let mut metric = None;
        let mut records = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row?;
            let m: Metric = row.metric.parse()?;
            if *metric.get_or_insert(m) != m {
                return Err(Error::Config("scores file mixes several metrics".into()));
            }
            let e = Edge::new(row.u, row.v)
                .ok_or_else(|| Error::Config(format!("self-loop {} in scores file", row.u)))?;
            records.push(ScoreRecord {
                u: e.u(),
                v: e.v(),
                score: row.score,
            });
        }
        let metric = metric.ok_or_else(|| Error::Config("scores file has no rows".into()))?;
        records.sort_by_key(|r| (r.u, r.v));
        Ok(EdgeScores { metric, records })
    }
}

/// Scores every edge of `g`. `emb` may be `None` for structural metrics.
pub fn score_edges(g: &Graph, emb: Option<&Embedding>, metric: Metric) -> Result<EdgeScores> {
    score_pairs(g, emb, metric, g.edges())
}

/// Scores arbitrary node pairs against `g` and `emb`.
pub fn score_pairs(
    g: &Graph,
    emb: Option<&Embedding>,
    metric: Metric,
    pairs: &[Edge],
) -> Result<EdgeScores> {
    let records = pairs
        .par_iter()
        .map(|e| {
            metric.score(g, emb, e.u(), e.v()).map(|score| ScoreRecord {
                u: e.u(),
                v: e.v(),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EdgeScores { metric, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-8;

    #[test]
    fn cosine_examples() {
        let v = [0.3f32, -1.2, 2.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-7);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.70710678).abs() < TOL);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn distance_examples() {
        let v = [0.5f32, 0.25];
        assert_eq!(euclidean(&v, &v), 0.0);
        assert_eq!(bray_curtis(&v, &v).unwrap(), 0.0);
        assert!((euclidean(&[1.0, 0.0], &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-5);
        assert_eq!(bray_curtis(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(bray_curtis(&[1.0, 0.0], &[-1.0, 0.0]).is_err());
    }

    #[test]
    fn structural_examples() {
        // 0 - 1, 2 - 3: no overlap.
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]);
        let s = structural_baselines(&g, 0, 2);
        assert_eq!((s.embeddedness, s.jaccard, s.adamic_adar), (0, 0.0, 0.0));

        // k(u) = {a, b}, k(u') = {b, c} with u = 0, u' = 1, a = 2, b = 3, c = 4.
        let g = Graph::from_edges(5, [(0, 2), (0, 3), (1, 3), (1, 4)]);
        let s = structural_baselines(&g, 0, 1);
        assert!((s.jaccard - 1.0 / 3.0).abs() < TOL);
        // b has degree 2.
        assert!((s.adamic_adar - 1.0 / 2f64.ln()).abs() < TOL);
        assert!((s.adamic_adar - 1.4427).abs() < 1e-4);

        let isolated = Graph::empty(2);
        assert_eq!(structural_baselines(&isolated, 0, 1).jaccard, 0.0);
    }

    #[test]
    fn distances_are_negated_as_scores() {
        let g = Graph::from_edges(2, [(0, 1)]);
        let emb = Embedding::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]);
        let s = Metric::Euclidean.score(&g, Some(&emb), 0, 1).unwrap();
        assert!((s + 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(Metric::BrayCurtis.score(&g, Some(&emb), 0, 1).unwrap(), -1.0);
    }

    #[test]
    fn score_edges_cardinality_and_order() {
        let g = Graph::from_edges(3, [(2, 1), (0, 1)]);
        let emb = Embedding::from_rows(2, vec![1.0, 0.0, 0.6, 0.8, 0.0, 1.0]);
        let scores = score_edges(&g, Some(&emb), Metric::Cosine).unwrap();
        assert_eq!(scores.len(), 2);
        assert_eq!((scores.records[0].u, scores.records[0].v), (0, 1));
        // Unit vectors: cosine is the dot product.
        assert!((scores.records[0].score - 0.6).abs() < 1e-6);
        assert!((scores.records[1].score - 0.8).abs() < 1e-6);
    }

    #[test]
    fn missing_vector_names_node() {
        let g = Graph::from_edges(3, [(0, 2)]);
        let emb = Embedding::from_rows(2, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            score_edges(&g, Some(&emb), Metric::Cosine),
            Err(Error::MissingVector(2))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let scores = EdgeScores {
            metric: Metric::Jaccard,
            records: vec![
                ScoreRecord { u: 0, v: 1, score: 0.25 },
                ScoreRecord { u: 1, v: 2, score: 1.0 / 3.0 },
            ],
        };
        let mut buf = Vec::new();
        scores.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("u,v,score,metric\n0,1,0.25,jaccard\n"));
        assert_eq!(EdgeScores::read_csv(buf.as_slice()).unwrap(), scores);
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("katz".parse::<Metric>().is_err());
    }
}
