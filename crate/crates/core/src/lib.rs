// SPDX-License-Identifier: Apache-2.0

//! Fake-edge detection on anonymized social graphs.
//!
//! The crate covers the whole loop: anonymize a graph with k-degree
//! anonymization or dK-2 differential privacy, learn random-walk node
//! embeddings on the anonymized graph, score every edge by the similarity of
//! its endpoints, separate fake from original edges with a two-component
//! Gaussian mixture, and measure how much privacy the recovery takes back.
//! The [`enhance`] module closes the loop by choosing fake edges that look
//! plausible under the original graph's embedding.

pub mod anonymize;
pub mod embed;
pub mod enhance;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod plausibility;
pub mod recover;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
pub use graph::{DK2Series, Edge, EdgeDiff, Graph, GraphBuilder};
