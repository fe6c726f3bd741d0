// SPDX-License-Identifier: Apache-2.0

//! End-to-end attack runs.
//!
//! A run anonymizes the input graph, hands ONLY the anonymized graph to the
//! attack stage ([`attack`]), and then evaluates the attack against the
//! original. The attack stage's signature has no way to reach the original
//! graph.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anonymize::{
    kda_anonymize, saladp_anonymize, AnonymizationMeta, KdaConfig, Mechanism, SaladpConfig,
};
use crate::embed::{
    generate_walks, read_embedding, train_skipgram, write_embedding, Embedding, EmbeddingFormat,
    TrainConfig, WalkConfig,
};
use crate::enhance::{enhanced_kda, enhanced_saladp, fit_prior, PlausibilityPrior};
use crate::error::{Error, Result};
use crate::graph::{edge_diff, load_edge_list, write_edge_list, EdgeDiff, Graph};
use crate::metrics::{
    degree_difference, dk2_noise_stats, precision_recall, roc_auc, PrecisionRecall,
    PrivacyReport, RocResult, UtilityReport,
};
use crate::plausibility::{score_edges, EdgeScores, Metric};
use crate::recover::{
    baseline_random, fit_gmm, map_classify, recover_graph, GmmConfig, GmmFit, PosteriorTable,
};

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    #[serde(flatten)]
    pub mechanism: Mechanism,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    /// Metric the mixture is fitted on.
    pub metric: Metric,
    /// Metrics an AUC is reported for.
    pub compare_metrics: Vec<Metric>,
    pub gmm: GmmConfig,
    pub seed: u64,
    /// Anonymized graphs behind the SalaDP noise statistics. 0 skips them.
    pub samples: usize,
    /// Also build and attack the plausibility-aware anonymization.
    pub enhanced: bool,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(mechanism: Mechanism, seed: u64) -> Self {
        PipelineConfig {
            input: None,
            mechanism,
            walk: WalkConfig {
                seed,
                ..WalkConfig::default()
            },
            train: TrainConfig {
                dimension: mechanism.default_dimension(),
                seed,
                ..TrainConfig::default()
            },
            metric: Metric::Cosine,
            compare_metrics: Metric::ALL.to_vec(),
            gmm: GmmConfig {
                seed,
                ..GmmConfig::default()
            },
            seed,
            samples: 100,
            enhanced: false,
            output_dir: None,
            cache_dir: None,
        }
    }

    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            walk: self.walk,
            train: self.train,
            metric: self.metric,
            compare_metrics: self.compare_metrics.clone(),
            gmm: self.gmm,
            cache_dir: self.cache_dir.clone(),
        }
    }
}

/// Everything the attacker controls. Deliberately holds no graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub metric: Metric,
    pub compare_metrics: Vec<Metric>,
    pub gmm: GmmConfig,
    pub cache_dir: Option<PathBuf>,
}

/// Output of the attack on one anonymized graph.
#[derive(Clone, Debug)]
pub struct AttackArtifacts {
    pub embedding: Embedding,
    /// Primary-metric scores of every anonymized edge.
    pub scores: EdgeScores,
    /// Scores under each comparison metric.
    pub compare: Vec<EdgeScores>,
    pub gmm: GmmFit,
    pub posteriors: PosteriorTable,
    pub recovered: Graph,
}

/// The attack: embed `ga`, score its edges, fit the mixture, drop the edges
/// classified fake.
pub fn attack(ga: &Graph, cfg: &AttackConfig) -> Result<AttackArtifacts> {
    let embedding = embed_graph(ga, &cfg.walk, &cfg.train, cfg.cache_dir.as_deref())
        .map_err(|e| e.in_stage("embed"))?;
    let scores = score_edges(ga, Some(&embedding), cfg.metric).map_err(|e| e.in_stage("score"))?;
    let compare = cfg
        .compare_metrics
        .iter()
        .map(|&m| {
            if m == cfg.metric {
                Ok(scores.clone())
            } else {
                score_edges(ga, Some(&embedding), m)
            }
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("score"))?;
    let gmm = fit_gmm(&scores, &cfg.gmm).map_err(|e| e.in_stage("fit-gmm"))?;
    let posteriors = map_classify(&scores, &gmm.params);
    let recovered = recover_graph(ga, &posteriors).map_err(|e| e.in_stage("recover"))?;
    Ok(AttackArtifacts {
        embedding,
        scores,
        compare,
        gmm,
        posteriors,
        recovered,
    })
}

/// Walks plus skip-gram, optionally cached on disk by content hash.
pub fn embed_graph(
    g: &Graph,
    walk: &WalkConfig,
    train: &TrainConfig,
    cache_dir: Option<&Path>,
) -> Result<Embedding> {
    let cached = cache_dir.map(|dir| dir.join(format!("{}.bin", cache_key(g, walk, train))));
    if let Some(path) = &cached {
        if path.exists() {
            match read_embedding(path, EmbeddingFormat::Binary) {
                Ok(emb) if emb.node_count() == g.node_count() && emb.dim() == train.dimension => {
                    log::info!("embedding cache hit {}", path.display());
                    return Ok(emb);
                }
                _ => log::warn!("ignoring unreadable cache entry {}", path.display()),
            }
        }
    }
    let corpus = generate_walks(g, walk)?;
    let emb = train_skipgram(&corpus, walk.window, train)?;
    if let Some(path) = &cached {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        write_embedding(&emb, path, EmbeddingFormat::Binary)?;
    }
    Ok(emb)
}

fn cache_key(g: &Graph, walk: &WalkConfig, train: &TrainConfig) -> String {
    let mut h = Sha256::new();
    h.update(g.canonical_bytes());
    h.update(serde_json::to_vec(walk).expect("config serializes"));
    h.update(serde_json::to_vec(train).expect("config serializes"));
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of a graph, recorded in reports.
pub fn graph_digest(g: &Graph) -> String {
    hex(&Sha256::digest(g.canonical_bytes()))
}

/// Runs the standard mechanism.
pub fn anonymize(g: &Graph, mechanism: Mechanism, seed: u64) -> Result<(Graph, AnonymizationMeta)> {
    match mechanism {
        Mechanism::Kda { k } => kda_anonymize(g, &KdaConfig { k, seed }).map(|o| (o.graph, o.meta)),
        Mechanism::Saladp { epsilon } => {
            saladp_anonymize(g, &SaladpConfig { epsilon, seed }).map(|o| (o.graph, o.meta))
        }
    }
}

/// Runs the plausibility-aware mechanism.
pub fn anonymize_enhanced(
    g: &Graph,
    mechanism: Mechanism,
    seed: u64,
    prior: &PlausibilityPrior,
    emb_g: &Embedding,
) -> Result<(Graph, AnonymizationMeta)> {
    match mechanism {
        Mechanism::Kda { k } => {
            enhanced_kda(g, &KdaConfig { k, seed }, prior, emb_g).map(|o| (o.graph, o.meta))
        }
        Mechanism::Saladp { epsilon } => enhanced_saladp(g, &SaladpConfig { epsilon, seed }, prior, emb_g)
            .map(|o| (o.graph, o.meta)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub sha256: String,
}

impl GraphSummary {
    fn of(g: &Graph) -> Self {
        GraphSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
            sha256: graph_digest(g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancedReport {
    pub anonymization: AnonymizationMeta,
    pub prior: PlausibilityPrior,
    /// AUC of the same attack against the enhanced graph.
    pub auc: f64,
    pub utility: UtilityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub version: String,
    pub config: PipelineConfig,
    pub seed: u64,
    pub input: GraphSummary,
    pub anonymization: AnonymizationMeta,
    pub auc: BTreeMap<Metric, f64>,
    pub gmm: GmmFit,
    pub predicted_fake: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<PrecisionRecall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PrecisionRecall>,
    pub privacy: PrivacyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enhanced: Option<EnhancedReport>,
}

/// Wall-clock seconds per stage. Kept out of the report so reports stay
/// reproducible.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        *self.seconds.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }
}

pub struct AttackRun {
    pub report: AttackReport,
    pub timings: Timings,
    pub anonymized: Graph,
    pub truth: EdgeDiff,
    pub artifacts: AttackArtifacts,
    pub roc: RocResult,
    pub enhanced_graph: Option<Graph>,
}

/// Loads `cfg.input` and runs [`run_attack_on`].
pub fn run_attack(cfg: &PipelineConfig) -> Result<AttackRun> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input graph given".into()))?;
    let g = load_edge_list(input).map_err(|e| e.in_stage("load"))?.graph;
    run_attack_on(&g, cfg)
}

pub fn run_attack_on(g: &Graph, cfg: &PipelineConfig) -> Result<AttackRun> {
    let mut timings = Timings::default();
    let attack_cfg = cfg.attack_config();

    let (ga, meta) = timings
        .time("anonymize", || anonymize(g, cfg.mechanism, cfg.seed))
        .map_err(|e| e.in_stage("anonymize"))?;
    let artifacts = timings.time("attack", || attack(&ga, &attack_cfg))?;

    // Evaluation: the only place the original graph meets attack output.
    let truth = edge_diff(g, &ga).map_err(|e| e.in_stage("eval"))?;
    let mut auc = BTreeMap::new();
    for scores in &artifacts.compare {
        let r = roc_auc(scores, &truth).map_err(|e| e.in_stage("eval"))?;
        auc.insert(scores.metric, r.auc);
    }
    let primary = roc_auc(&artifacts.scores, &truth).map_err(|e| e.in_stage("eval"))?;
    auc.insert(cfg.metric, primary.auc);

    let predicted = artifacts.posteriors.predicted_fake();
    let map = precision_recall(&predicted, &truth).ok();
    let baseline = if predicted.is_empty() {
        None
    } else {
        let picks = baseline_random(&ga, predicted.len(), cfg.seed).map_err(|e| e.in_stage("eval"))?;
        precision_recall(&picks, &truth).ok()
    };

    let privacy = timings
        .time("privacy", || privacy_report(g, &ga, &artifacts.recovered, cfg, &attack_cfg))
        .map_err(|e| e.in_stage("privacy"))?;

    let (enhanced, enhanced_graph) = if cfg.enhanced {
        let (report, gf) = timings
            .time("enhance", || run_enhanced(g, &ga, cfg, &attack_cfg))
            .map_err(|e| e.in_stage("enhance"))?;
        (Some(report), Some(gf))
    } else {
        (None, None)
    };

    let report = AttackReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed: cfg.seed,
        input: GraphSummary::of(g),
        anonymization: meta,
        auc,
        predicted_fake: predicted.len(),
        gmm: artifacts.gmm.clone(),
        map,
        baseline,
        privacy,
        enhanced,
    };
    let run = AttackRun {
        report,
        timings,
        anonymized: ga,
        truth,
        artifacts,
        roc: primary,
        enhanced_graph,
    };
    if let Some(dir) = &cfg.output_dir {
        write_run(&run, dir)?;
    }
    Ok(run)
}

fn privacy_report(
    g: &Graph,
    ga: &Graph,
    gr: &Graph,
    cfg: &PipelineConfig,
    attack_cfg: &AttackConfig,
) -> Result<PrivacyReport> {
    match cfg.mechanism {
        Mechanism::Kda { .. } => Ok(PrivacyReport {
            delta_a: Some(degree_difference(g, ga)?),
            delta_r: Some(degree_difference(g, gr)?),
            ..PrivacyReport::default()
        }),
        Mechanism::Saladp { .. } if cfg.samples > 0 => {
            let mut anonymized = vec![ga.clone()];
            let mut recovered = vec![gr.clone()];
            for s in 1..cfg.samples {
                let (sample, _) = anonymize(g, cfg.mechanism, cfg.seed.wrapping_add(s as u64))?;
                recovered.push(attack(&sample, attack_cfg)?.recovered);
                anonymized.push(sample);
            }
            let a = dk2_noise_stats(g, &anonymized)?;
            let r = dk2_noise_stats(g, &recovered)?;
            Ok(PrivacyReport {
                zeta_a: Some(a.zeta),
                zeta_r: Some(r.zeta),
                entropy_a: Some(a.entropy),
                entropy_r: Some(r.entropy),
                samples: Some(cfg.samples),
                ..PrivacyReport::default()
            })
        }
        Mechanism::Saladp { .. } => Ok(PrivacyReport::default()),
    }
}

/// Fits the prior on the ORIGINAL graph's embedding (the defender has it),
/// builds the enhanced graph, and attacks it the same way.
fn run_enhanced(
    g: &Graph,
    ga: &Graph,
    cfg: &PipelineConfig,
    attack_cfg: &AttackConfig,
) -> Result<(EnhancedReport, Graph)> {
    let emb_g = embed_graph(g, &cfg.walk, &cfg.train, cfg.cache_dir.as_deref())?;
    let prior = fit_prior(&score_edges(g, Some(&emb_g), Metric::Cosine)?)?;
    let (gf, meta) = anonymize_enhanced(g, cfg.mechanism, cfg.seed, &prior, &emb_g)?;
    let artifacts = attack(&gf, attack_cfg)?;
    let truth = edge_diff(g, &gf)?;
    let auc = roc_auc(&artifacts.scores, &truth)?.auc;
    let utility = UtilityReport::compute(g, ga, Some(&gf))?;
    Ok((
        EnhancedReport {
            anonymization: meta,
            prior,
            auc,
            utility,
        },
        gf,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub fake: u64,
    pub original: u64,
}

/// Score histogram over `[-1, 1]` split by ground truth. Out-of-range scores
/// land in the end bins.
pub fn score_histogram(scores: &EdgeScores, truth: &EdgeDiff) -> Vec<HistogramBin> {
    let width = 2.0 / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            bin_lo: -1.0 + i as f64 * width,
            bin_hi: -1.0 + (i + 1) as f64 * width,
            fake: 0,
            original: 0,
        })
        .collect();
    for r in &scores.records {
        let idx = (((r.score + 1.0) / width).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        if truth.added.contains(&r.edge()) {
            bins[idx].fake += 1;
        } else {
            bins[idx].original += 1;
        }
    }
    bins
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_run(run: &AttackRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_edge_list(&run.anonymized, dir.join("anonymized.edges"))?;
    write_json(&run.report.anonymization, dir.join("anonymized.meta.json"))?;
    write_embedding(&run.artifacts.embedding, dir.join("embedding.bin"), EmbeddingFormat::Binary)?;
    run.artifacts
        .scores
        .write_csv(BufWriter::new(File::create(dir.join("scores.csv"))?))?;
    write_json(&run.artifacts.gmm, dir.join("gmm.json"))?;
    run.artifacts
        .posteriors
        .write_csv(BufWriter::new(File::create(dir.join("posteriors.csv"))?))?;
    write_edge_list(&run.artifacts.recovered, dir.join("recovered.edges"))?;
    run.roc
        .write_points_csv(BufWriter::new(File::create(dir.join("roc.csv"))?))?;
    write_csv_rows(
        &score_histogram(&run.artifacts.scores, &run.truth),
        dir.join("histogram.csv"),
    )?;
    if let Some(gf) = &run.enhanced_graph {
        write_edge_list(gf, dir.join("enhanced.edges"))?;
    }
    write_json(&run.report, dir.join("report.json"))?;
    write_json(&run.timings, dir.join("timings.json"))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub l: usize,
    pub t: usize,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l: usize,
    pub t: usize,
    pub d: usize,
    pub auc: f64,
}

/// Attacks one shared anonymized graph once per grid point and reports the
/// primary-metric AUC of each.
pub fn hyperparam_sweep(g: &Graph, cfg: &PipelineConfig, grid: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let (ga, _) = anonymize(g, cfg.mechanism, cfg.seed).map_err(|e| e.in_stage("anonymize"))?;
    let truth = edge_diff(g, &ga)?;
    grid.iter()
        .map(|p| {
            let mut ac = cfg.attack_config();
            ac.walk.walk_length = p.l;
            ac.walk.walk_times = p.t;
            ac.train.dimension = p.d;
            ac.compare_metrics.clear();
            let embedding = embed_graph(&ga, &ac.walk, &ac.train, ac.cache_dir.as_deref())
                .map_err(|e| e.in_stage("embed"))?;
            let scores = score_edges(&ga, Some(&embedding), ac.metric)?;
            let auc = roc_auc(&scores, &truth)?.auc;
            Ok(SweepRow {
                l: p.l,
                t: p.t,
                d: p.d,
                auc,
            })
        })
        .collect()
}
