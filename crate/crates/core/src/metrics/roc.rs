// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeDiff};
use crate::plausibility::EdgeScores;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
    /// Trapezoidal area under `points`.
    pub auc: f64,
    /// Mann-Whitney estimate of the same area, ties counted one half.
    pub rank_auc: f64,
}

impl RocResult {
    pub fn write_points_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fpr", "tpr"])?;
        for &(fpr, tpr) in &self.points {
            w.write_record([format!("{fpr:?}"), format!("{tpr:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// ROC of fake-edge detection. Fake edges (`truth.added`) are the positive
/// class and lower plausibility ranks as more fake.
pub fn roc_auc(scores: &EdgeScores, truth: &EdgeDiff) -> Result<RocResult> {
    let ranking: Vec<f64> = scores.records.iter().map(|r| -r.score).collect();
    let labels: Vec<bool> = scores
        .records
        .iter()
        .map(|r| truth.added.contains(&r.edge()))
        .collect();
    roc_from_labels(&ranking, &labels)
}

/// ROC for `ranking` where larger values predict the positive class.
pub fn roc_from_labels(ranking: &[f64], labels: &[bool]) -> Result<RocResult> {
    assert_eq!(ranking.len(), labels.len());
    if ranking.iter().any(|s| s.is_nan()) {
        return Err(Error::Undefined("ROC over NaN scores"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("ROC needs both positive and negative examples"));
    }

    let mut order: Vec<usize> = (0..ranking.len()).collect();
    order.sort_by(|&a, &b| ranking[b].total_cmp(&ranking[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    // Sum of ascending midranks over positives, for the rank statistic.
    let mut pos_rank_sum = 0.0;
    let n = ranking.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        let (mut tie_pos, mut tie_neg) = (0usize, 0usize);
        while j < n && ranking[order[j]] == ranking[order[i]] {
            if labels[order[j]] {
                tie_pos += 1;
            } else {
                tie_neg += 1;
            }
            j += 1;
        }
        // Descending positions i..j map to ascending ranks n-j+1 ..= n-i.
        let midrank = ((n - j + 1) + (n - i)) as f64 / 2.0;
        pos_rank_sum += midrank * tie_pos as f64;

        let (prev_fpr, prev_tpr) = *points.last().unwrap();
        tp += tie_pos;
        fp += tie_neg;
        let point = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (point.0 - prev_fpr) * (point.1 + prev_tpr) / 2.0;
        points.push(point);
        i = j;
    }

    let u = pos_rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    let rank_auc = u / (pos as f64 * neg as f64);
    Ok(RocResult {
        points,
        auc,
        rank_auc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub predicted: usize,
    pub true_positives: usize,
}

pub fn precision_recall(predicted: &BTreeSet<Edge>, truth: &EdgeDiff) -> Result<PrecisionRecall> {
    if predicted.is_empty() {
        return Err(Error::Undefined("precision of an empty prediction"));
    }
    if truth.added.is_empty() {
        return Err(Error::Undefined("recall without any fake edges"));
    }
    let hits = predicted.intersection(&truth.added).count();
    Ok(PrecisionRecall {
        precision: hits as f64 / predicted.len() as f64,
        recall: hits as f64 / truth.added.len() as f64,
        predicted: predicted.len(),
        true_positives: hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plausibility::{Metric, ScoreRecord};

    fn labeled(fake: &[f64], original: &[f64]) -> (EdgeScores, EdgeDiff) {
        let mut records = Vec::new();
        let mut added = BTreeSet::new();
        for (i, &score) in fake.iter().chain(original).enumerate() {
            let (u, v) = (0, i as u32 + 1);
            records.push(ScoreRecord { u, v, score });
            if i < fake.len() {
                added.insert(Edge::new(u, v).unwrap());
            }
        }
        let truth = EdgeDiff {
            added,
            deleted: BTreeSet::new(),
        };
        (EdgeScores { metric: Metric::Cosine, records }, truth)
    }

    #[test]
    fn perfect_separation() {
        let (s, t) = labeled(&[0.1, 0.2], &[0.8, 0.9]);
        let roc = roc_auc(&s, &t).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.rank_auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn all_tied_is_one_half() {
        let (s, t) = labeled(&[0.5, 0.5], &[0.5, 0.5, 0.5]);
        let roc = roc_auc(&s, &t).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc.auc, 0.5);
        assert_eq!(roc.rank_auc, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        let (s, t) = labeled(&[0.1, 0.2], &[]);
        assert!(roc_auc(&s, &t).is_err());
        let (s, t) = labeled(&[], &[0.1]);
        assert!(roc_auc(&s, &t).is_err());
    }

    #[test]
    fn precision_recall_cases() {
        let added: BTreeSet<Edge> = [(0, 1), (1, 2)].iter().map(|&(a, b)| Edge::new(a, b).unwrap()).collect();
        let truth = EdgeDiff {
            added: added.clone(),
            deleted: BTreeSet::new(),
        };
        let pr = precision_recall(&added, &truth).unwrap();
        assert_eq!((pr.precision, pr.recall), (1.0, 1.0));
        let other: BTreeSet<Edge> = [Edge::new(5, 6).unwrap()].into();
        let pr = precision_recall(&other, &truth).unwrap();
        assert_eq!((pr.precision, pr.recall), (0.0, 0.0));
        assert!(precision_recall(&BTreeSet::new(), &truth).is_err());
    }

    #[test]
    fn points_csv() {
        let (s, t) = labeled(&[0.1], &[0.9]);
        let mut buf = Vec::new();
        roc_auc(&s, &t).unwrap().write_points_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "fpr,tpr\n0.0,0.0\n0.0,1.0\n1.0,1.0\n");
    }
}
