// SPDX-License-Identifier: Apache-2.0

//! The two target anonymization mechanisms.
//!
//! * [`kda`]: k-degree anonymity. A dynamic program picks the cheapest
//!   k-anonymous target degree sequence, then edges are added greedily toward
//!   the highest residual degree, deleting a few edges when stuck.
//! * [`saladp`]: Laplace noise on the dK-2 series, then random edge additions
//!   and deletions inside each cell until the noised counts are met.
//!
//! Both keep the node universe fixed and only touch edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub mod kda;
pub mod saladp;

pub use kda::{kda_anonymize, kda_degree_sequence, KdaOutput};
pub use saladp::{laplace_scale, saladp_anonymize, saladp_noise_dk2, SaladpOutput, UnmetDelta};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdaConfig {
    pub k: usize,
    pub seed: u64,
}

impl KdaConfig {
    pub fn validate(&self, node_count: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.k > node_count {
            return Err(Error::Config(format!(
                "k = {} exceeds the number of nodes ({node_count})",
                self.k
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaladpConfig {
    pub epsilon: f64,
    pub seed: u64,
}

impl SaladpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Mechanism selector with its privacy parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "lowercase")]
pub enum Mechanism {
    Kda { k: usize },
    Saladp { epsilon: f64 },
}

impl Mechanism {
    /// Embedding dimension used for this mechanism's inputs.
    pub fn default_dimension(&self) -> usize {
        match self {
            Mechanism::Kda { .. } => 128,
            Mechanism::Saladp { .. } => 512,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mechanism::Kda { k } => format!("kda-k{k}"),
            Mechanism::Saladp { epsilon } => format!("saladp-eps{epsilon}"),
        }
    }
}

/// Summary written next to every anonymized graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnonymizationMeta {
    pub mechanism: Mechanism,
    pub seed: u64,
    pub enhanced: bool,
    pub nodes: usize,
    pub original_edges: usize,
    pub anonymized_edges: usize,
    pub added: usize,
    pub deleted: usize,
    /// k-DA: edges removed by the relaxation step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation_deletions: Option<usize>,
    /// k-DA: degree-sequence probing rounds needed before realization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probing_rounds: Option<usize>,
    /// SalaDP: cells whose noised target could not be met.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unmet_deltas: Option<Vec<UnmetDelta>>,
}

/// True iff every degree value present occurs at least `k` times.
pub fn is_k_anonymous(degrees: &[usize], k: usize) -> bool {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in degrees {
        *counts.entry(d).or_insert(0) += 1;
    }
    counts.values().all(|&c| c >= k)
}

pub fn graph_is_k_anonymous(g: &Graph, k: usize) -> bool {
    is_k_anonymous(&g.degrees(), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_anonymity_check() {
        assert!(is_k_anonymous(&[3, 3, 3], 3));
        assert!(!is_k_anonymous(&[3, 3, 2], 2));
        assert!(is_k_anonymous(&[], 5));
    }

    #[test]
    fn config_validation() {
        assert!(KdaConfig { k: 1, seed: 0 }.validate(10).is_err());
        assert!(KdaConfig { k: 11, seed: 0 }.validate(10).is_err());
        assert!(KdaConfig { k: 10, seed: 0 }.validate(10).is_ok());
        assert!(SaladpConfig { epsilon: 0.0, seed: 0 }.validate().is_err());
        assert!(SaladpConfig { epsilon: -1.0, seed: 0 }.validate().is_err());
        assert!(SaladpConfig { epsilon: f64::INFINITY, seed: 0 }.validate().is_ok());
    }

    #[test]
    fn mechanism_json_shape() {
        let m = Mechanism::Kda { k: 50 };
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"mechanism":"kda","k":50}"#);
        assert_eq!(Mechanism::Saladp { epsilon: 10.0 }.default_dimension(), 512);
    }
}
