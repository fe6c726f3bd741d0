// SPDX-License-Identifier: Apache-2.0

//! Skip-gram with negative sampling.
//!
//! For every `(center u, context c)` pair the step ascends
//! `log s(ctx(c) . f(u)) + sum_n log s(-ctx(n) . f(u))` where `s` is the
//! logistic function and the `n` are drawn from the unigram distribution of
//! the corpus raised to 3/4. Center vectors start uniform in
//! `[-0.5/d, 0.5/d]`, context vectors at zero. The learning rate decays
//! linearly from `initial_lr` to `min_lr` over all pairs.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::walks::{pair_count, WalkCorpus};
use super::{Embedding, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::{self, StageRng};

/// Loss bookkeeping from one training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub pairs: u64,
    /// Mean negative-sampling loss over each quarter of the pairs.
    pub quarter_loss: [f64; 4],
}

pub fn train_skipgram(corpus: &WalkCorpus, window: usize, cfg: &TrainConfig) -> Result<Embedding> {
    train_skipgram_with_stats(corpus, window, cfg).map(|(e, _)| e)
}

pub fn train_skipgram_with_stats(
    corpus: &WalkCorpus,
    window: usize,
    cfg: &TrainConfig,
) -> Result<(Embedding, TrainStats)> {
    cfg.validate()?;
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let n = corpus.node_count();
    let dim = cfg.dimension;

    let mut init_rng = rng::stream(cfg.seed, rng::STREAM_TRAIN);
    let half = 0.5 / dim as f32;
    let center: Vec<f32> = (0..n * dim)
        .map(|_| init_rng.random_range(-half..half))
        .collect();
    let context = vec![0.0f32; n * dim];

    let noise = NoiseTable::new(&corpus.frequencies())?;
    let per_epoch: u64 = corpus
        .traces()
        .map(|t| pair_count(t.len(), window) as u64)
        .sum();
    let schedule = Schedule {
        initial: cfg.initial_lr,
        min: cfg.min_lr,
        total: per_epoch * cfg.epochs as u64,
    };

    let (center, stats) = if cfg.workers <= 1 {
        train_serial(corpus, window, cfg, center, context, &noise, &schedule)?
    } else {
        train_parallel(corpus, window, cfg, center, context, &noise, &schedule)?
    };
    let emb = Embedding::from_rows(dim, center);
    if !emb.is_finite() {
        return Err(Error::NotFinite { pairs: stats.pairs });
    }
    Ok((emb, stats))
}

struct NoiseTable {
    dist: Option<WeightedIndex<f64>>,
}

impl NoiseTable {
    fn new(freq: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(0.75)).collect();
        if weights.iter().all(|&w| w == 0.0) {
            return Ok(NoiseTable { dist: None });
        }
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::Degenerate(format!("noise distribution: {e}")))?;
        Ok(NoiseTable { dist: Some(dist) })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        self.dist.as_ref().map_or(0, |d| d.sample(rng) as u32)
    }
}

struct Schedule {
    initial: f32,
    min: f32,
    total: u64,
}

impl Schedule {
    fn lr(&self, done: u64) -> f32 {
        if self.total == 0 {
            return self.initial;
        }
        let progress = (done as f64 / self.total as f64).min(1.0) as f32;
        self.initial - (self.initial - self.min) * progress
    }

    fn quarter(&self, done: u64) -> usize {
        if self.total == 0 {
            return 0;
        }
        ((done * 4) / self.total).min(3) as usize
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    // Eight independent lanes so the loop vectorizes without reassociation.
    let mut lanes = [0.0f32; 8];
    let chunks = a.len() / 8 * 8;
    for (ca, cb) in a[..chunks].chunks_exact(8).zip(b[..chunks].chunks_exact(8)) {
        for i in 0..8 {
            lanes[i] += ca[i] * cb[i];
        }
    }
    let mut sum: f32 = lanes.iter().sum();
    for i in chunks..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

#[inline]
fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One logistic-regression step of `center` against `ctx`. Updates `ctx`,
/// accumulates the center gradient into `grad`, returns the loss.
#[inline]
fn target_step(center: &[f32], ctx: &mut [f32], label: f32, lr: f32, grad: &mut [f32]) -> Result<f32, ()> {
    let f = dot(center, ctx);
    if !f.is_finite() {
        return Err(());
    }
    let p = sigmoid(f);
    let g = (label - p) * lr;
    axpy(g, ctx, grad);
    axpy(g, center, ctx);
    let likelihood = if label > 0.5 { p } else { 1.0 - p };
    Ok(-(likelihood.max(1e-7)).ln())
}

fn train_serial(
    corpus: &WalkCorpus,
    window: usize,
    cfg: &TrainConfig,
    mut center: Vec<f32>,
    mut context: Vec<f32>,
    noise: &NoiseTable,
    schedule: &Schedule,
) -> Result<(Vec<f32>, TrainStats)> {
    let dim = cfg.dimension;
    let mut rng = rng::stream(cfg.seed, rng::STREAM_NEGATIVES);
    let mut grad = vec![0.0f32; dim];
    let mut done = 0u64;
    let mut loss = [0.0f64; 4];
    let mut count = [0u64; 4];

    for _ in 0..cfg.epochs {
        for trace in corpus.traces() {
            for p in 0..trace.len() {
                let lr = schedule.lr(done);
                let u = trace[p] as usize;
                let lo = p.saturating_sub(window);
                let hi = (p + window).min(trace.len() - 1);
                for q in lo..=hi {
                    if q == p {
                        continue;
                    }
                    let c = trace[q];
                    let quarter = schedule.quarter(done);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_row = &center[u * dim..(u + 1) * dim];
                    let mut pair_loss = 0.0f32;
                    for s in 0..=cfg.negative_samples {
                        let (target, label) = if s == 0 {
                            (c, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == c {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let t = target as usize;
                        let ctx_row = &mut context[t * dim..(t + 1) * dim];
                        pair_loss += target_step(center_row, ctx_row, label, lr, &mut grad)
                            .map_err(|_| Error::NotFinite { pairs: done })?;
                    }
                    axpy(1.0, &grad, &mut center[u * dim..(u + 1) * dim]);
                    loss[quarter] += pair_loss as f64;
                    count[quarter] += 1;
                    done += 1;
                }
            }
        }
    }
    Ok((center, stats(done, loss, count)))
}

fn stats(pairs: u64, loss: [f64; 4], count: [u64; 4]) -> TrainStats {
    let mut quarter_loss = [0.0; 4];
    for i in 0..4 {
        quarter_loss[i] = if count[i] > 0 { loss[i] / count[i] as f64 } else { f64::NAN };
    }
    TrainStats { pairs, quarter_loss }
}

/// Parameter table shared between workers. Rows are copied out, updated and
/// written back with relaxed atomics, so concurrent updates may overwrite
/// each other but never tear a float.
struct SharedTable {
    dim: usize,
    cells: Vec<AtomicU32>,
}

impl SharedTable {
    fn new(dim: usize, values: Vec<f32>) -> Self {
        SharedTable {
            dim,
            cells: values.into_iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
        }
    }

    fn load(&self, row: usize, out: &mut [f32]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f32::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn store(&self, row: usize, values: &[f32]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (v, c) in values.iter().zip(cells) {
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vec(self) -> Vec<f32> {
        self.cells
            .into_iter()
            .map(|c| f32::from_bits(c.into_inner()))
            .collect()
    }
}

fn train_parallel(
    corpus: &WalkCorpus,
    window: usize,
    cfg: &TrainConfig,
    center: Vec<f32>,
    context: Vec<f32>,
    noise: &NoiseTable,
    schedule: &Schedule,
) -> Result<(Vec<f32>, TrainStats)> {
    let dim = cfg.dimension;
    let workers = cfg.workers.min(corpus.len().max(1));
    let center = SharedTable::new(dim, center);
    let context = SharedTable::new(dim, context);
    let done = AtomicU64::new(0);
    let failed = AtomicBool::new(false);
    let traces: Vec<usize> = (0..corpus.len()).collect();
    let chunk = traces.len().div_ceil(workers).max(1);

    let partials: Vec<([f64; 4], [u64; 4])> = std::thread::scope(|scope| {
        let handles: Vec<_> = traces
            .chunks(chunk)
            .enumerate()
            .map(|(w, ids)| {
                let (center, context, done, failed) = (&center, &context, &done, &failed);
                scope.spawn(move || {
                    let mut rng: StageRng = rng::keyed(cfg.seed, rng::STREAM_TRAIN, w as u64);
                    let mut u_row = vec![0.0f32; dim];
                    let mut t_row = vec![0.0f32; dim];
                    let mut grad = vec![0.0f32; dim];
                    let mut loss = [0.0f64; 4];
                    let mut count = [0u64; 4];
                    for _ in 0..cfg.epochs {
                        for &i in ids {
                            let trace = corpus.trace(i);
                            for p in 0..trace.len() {
                                let seen = done.load(Ordering::Relaxed);
                                let lr = schedule.lr(seen);
                                let quarter = schedule.quarter(seen);
                                let u = trace[p] as usize;
                                let lo = p.saturating_sub(window);
                                let hi = (p + window).min(trace.len() - 1);
                                let mut local = 0u64;
                                for q in (lo..=hi).filter(|&q| q != p) {
                                    let c = trace[q];
                                    center.load(u, &mut u_row);
                                    grad.iter_mut().for_each(|g| *g = 0.0);
                                    let mut pair_loss = 0.0f32;
                                    for s in 0..=cfg.negative_samples {
                                        let (target, label) = if s == 0 {
                                            (c, 1.0)
                                        } else {
                                            let t = noise.sample(&mut rng);
                                            if t == c {
                                                continue;
                                            }
                                            (t, 0.0)
                                        };
                                        context.load(target as usize, &mut t_row);
                                        match target_step(&u_row, &mut t_row, label, lr, &mut grad) {
                                            Ok(l) => pair_loss += l,
                                            Err(()) => {
                                                failed.store(true, Ordering::Relaxed);
                                                return (loss, count);
                                            }
                                        }
                                        context.store(target as usize, &t_row);
                                    }
                                    axpy(1.0, &grad, &mut u_row);
                                    center.store(u, &u_row);
                                    loss[quarter] += pair_loss as f64;
                                    count[quarter] += 1;
                                    local += 1;
                                }
                                done.fetch_add(local, Ordering::Relaxed);
                            }
                        }
                    }
                    (loss, count)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
    });

    let pairs = done.into_inner();
    if failed.into_inner() {
        return Err(Error::NotFinite { pairs });
    }
    let mut loss = [0.0; 4];
    let mut count = [0u64; 4];
    for (l, c) in partials {
        for i in 0..4 {
            loss[i] += l[i];
            count[i] += c[i];
        }
    }
    Ok((center.into_vec(), stats(pairs, loss, count)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f32> = (0..13).map(|i| i as f32 * 0.5).collect();
        let b: Vec<f32> = (0..13).map(|i| 1.0 - i as f32 * 0.1).collect();
        let naive: f32 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-4);
    }

    #[test]
    fn schedule_decays_linearly() {
        let s = Schedule {
            initial: 0.025,
            min: 2.5e-4,
            total: 100,
        };
        assert_eq!(s.lr(0), 0.025);
        assert!((s.lr(100) - 2.5e-4).abs() < 1e-9);
        assert!((s.lr(50) - 0.012625).abs() < 1e-7);
        assert_eq!(s.quarter(99), 3);
    }

    #[test]
    fn target_step_moves_toward_label() {
        let center = [0.5f32, 0.5];
        let mut ctx = [0.1f32, 0.1];
        let mut grad = [0.0f32; 2];
        let before = dot(&center, &ctx);
        target_step(&center, &mut ctx, 1.0, 0.1, &mut grad).unwrap();
        assert!(dot(&center, &ctx) > before);
        assert!(grad.iter().all(|&g| g > 0.0));
    }
}
