// SPDX-License-Identifier: Apache-2.0

//! Attack evaluation, privacy loss, and graph utility.

mod privacy;
mod roc;
mod utility;

pub use privacy::{degree_difference, dk2_noise_stats, noise_stats, NoiseStats, PrivacyReport};
pub use roc::{precision_recall, roc_auc, roc_from_labels, PrecisionRecall, RocResult};
pub use utility::{
    eigencentrality, triangle_counts, utility_similarity, utility_vectors, UtilityReport,
    UtilitySimilarity, UtilityVectors,
};

use crate::error::{Error, Result};

/// Cosine similarity of two equal-length vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
