// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("edge list {0} contains no edges")]
    EmptyGraph(PathBuf),

    #[error("node universe mismatch: {left} vs {right} nodes")]
    UniverseMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("k-DA realization failed after {steps} steps: {unmet_residual} residual degree left over {stuck_nodes} nodes")]
    Realization {
        steps: usize,
        unmet_residual: u64,
        stuck_nodes: usize,
    },

    #[error("NaN detected in embedding parameters after {pairs} training pairs")]
    NotFinite { pairs: u64 },

    #[error("no embedding vector for node {0}")]
    MissingVector(u32),

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("undefined value: {0}")]
    Undefined(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
