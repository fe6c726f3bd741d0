// SPDX-License-Identifier: Apache-2.0

//! Random-walk node embeddings.
//!
//! Truncated uniform random walks are turned into `(center, context)` pairs
//! by a sliding window and fed to skip-gram with negative sampling. Only the
//! center table is exported; it is what edge plausibility is computed from.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod skipgram;
mod walks;

pub use skipgram::{train_skipgram, train_skipgram_with_stats, TrainStats};
pub use walks::{generate_walks, neighborhood_pairs, pair_count, random_walk, NeighborhoodPairs, WalkCorpus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Steps per walk (`l`).
    pub walk_length: usize,
    /// Walks started per node (`t`).
    pub walk_times: usize,
    /// Context radius inside a trace.
    pub window: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 100,
            walk_times: 80,
            window: 10,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 || self.walk_times == 0 || self.window == 0 {
            return Err(Error::Config(
                "walk length, walk times and window must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimension: usize,
    pub negative_samples: usize,
    pub initial_lr: f32,
    /// Learning rate reached after the last pair.
    pub min_lr: f32,
    pub epochs: usize,
    pub seed: u64,
    /// 1 trains deterministically; more workers update the shared tables
    /// without locking and give up bit-reproducibility.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimension: 128,
            negative_samples: 5,
            initial_lr: 0.025,
            min_lr: 2.5e-4,
            epochs: 1,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.negative_samples == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "dimension, negative samples and epochs must all be at least 1".into(),
            ));
        }
        if !(self.initial_lr > 0.0) || !(self.min_lr >= 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Dense `node_count x dimension` matrix of node vectors, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    dim: usize,
    data: Vec<f32>,
}

impl Embedding {
    pub fn from_rows(dim: usize, data: Vec<f32>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "ragged embedding matrix");
        Embedding { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn vector(&self, u: u32) -> Option<&[f32]> {
        let start = u as usize * self.dim;
        self.data.get(start..start + self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Little-endian bytes of the binary format.
    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 4);
        out.extend_from_slice(&(self.node_count() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingFormat {
    /// Header `n d`, then `node v1 .. vd` rows.
    Text,
    /// Two little-endian u64 counts, then row-major little-endian f32.
    Binary,
}

impl EmbeddingFormat {
    /// `.bin` files are binary, everything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Text,
        }
    }
}

pub fn write_embedding(emb: &Embedding, path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        EmbeddingFormat::Text => write_text(emb, &mut out)?,
        EmbeddingFormat::Binary => out.write_all(&emb.to_binary_bytes())?,
    }
    out.flush()?;
    Ok(())
}

fn write_text<W: Write>(emb: &Embedding, out: &mut W) -> Result<()> {
    writeln!(out, "{} {}", emb.node_count(), emb.dim)?;
    for (u, row) in emb.data.chunks(emb.dim).enumerate() {
        write!(out, "{u}")?;
        for x in row {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_embedding(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Embedding> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    match format {
        EmbeddingFormat::Text => read_text(reader, path),
        EmbeddingFormat::Binary => read_binary(reader, path),
    }
}

fn read_text<R: BufRead>(reader: R, path: &Path) -> Result<Embedding> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let header = header?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(1, format!("bad header: {e}")))?;
    let [n, d] = dims[..] else {
        return Err(err(1, "header must be `n d`".into()));
    };
    if d == 0 {
        return Err(err(1, "dimension must be positive".into()));
    }
    let mut data = vec![f32::NAN; n * d];
    let mut seen = vec![false; n];
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let node: usize = tokens
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|_| err(lineno, "bad node id".into()))?;
        if node >= n {
            return Err(err(lineno, format!("node {node} outside 0..{n}")));
        }
        let row = &mut data[node * d..(node + 1) * d];
        let mut count = 0;
        for (slot, tok) in row.iter_mut().zip(tokens.by_ref()) {
            *slot = tok
                .parse()
                .map_err(|_| err(lineno, format!("bad value {tok:?}")))?;
            count += 1;
        }
        if count != d || tokens.next().is_some() {
            return Err(err(lineno, format!("expected {d} values")));
        }
        seen[node] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::MissingVector(missing as u32));
    }
    Ok(Embedding { dim: d, data })
}

fn read_binary<R: Read>(mut reader: R, path: &Path) -> Result<Embedding> {
    let mut word = [0u8; 8];
    reader.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    reader.read_exact(&mut word)?;
    let d = u64::from_le_bytes(word) as usize;
    if d == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "dimension must be positive".into(),
        });
    }
    let mut bytes = vec![0u8; n * d * 4];
    reader.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Embedding { dim: d, data })
}
