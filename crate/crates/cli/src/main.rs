// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use graphrecov::anonymize::Mechanism;
use graphrecov::embed::{read_embedding, write_embedding, EmbeddingFormat, TrainConfig, WalkConfig};
use graphrecov::enhance::{fit_prior, PlausibilityPrior};
use graphrecov::graph::{edge_diff, load_edge_list, write_edge_list, Graph};
use graphrecov::metrics::{degree_difference, precision_recall, roc_auc, PrecisionRecall};
use graphrecov::pipeline::{
    self, anonymize, anonymize_enhanced, embed_graph, hyperparam_sweep, score_histogram,
    write_csv_rows, write_json, PipelineConfig, SweepPoint,
};
use graphrecov::plausibility::{score_edges, EdgeScores, Metric};
use graphrecov::recover::{
    baseline_random, fit_gmm, map_classify, recover_graph, GmmConfig, GmmFit,
};

#[derive(Parser)]
#[command(name = "graphrecov", version, about = "Detect fake edges in anonymized social graphs")]
struct Cli {
    /// Worker threads for walks, scoring and training.
    #[arg(long, global = true, env = "GRAPHRECOV_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize an edge list with k-DA or SalaDP.
    Anonymize(AnonymizeArgs),
    /// Train random-walk node embeddings.
    Embed(EmbedArgs),
    /// Score every edge of a graph.
    Score(ScoreArgs),
    /// Fit the two-component mixture to edge scores.
    FitGmm(FitGmmArgs),
    /// Remove edges classified as fake.
    Recover(RecoverArgs),
    /// Evaluate scores and a recovery against the original graph.
    Eval(EvalArgs),
    /// Fit the plausibility prior used by enhanced anonymization.
    Enhance(EnhanceArgs),
    /// AUC over a grid of walk length, walk times and dimension.
    Sweep(SweepArgs),
    /// Run the whole pipeline end to end.
    Attack(AttackArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismKind {
    Kda,
    Saladp,
}

#[derive(Args, Clone)]
struct MechanismArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismKind,
    /// Anonymity parameter for k-DA.
    #[arg(long)]
    k: Option<usize>,
    /// Privacy budget for SalaDP.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl MechanismArgs {
    fn mechanism(&self) -> Result<Mechanism> {
        Ok(match self.mechanism {
            MechanismKind::Kda => Mechanism::Kda {
                k: self.k.context("--mechanism kda needs --k")?,
            },
            MechanismKind::Saladp => Mechanism::Saladp {
                epsilon: self.epsilon.context("--mechanism saladp needs --epsilon")?,
            },
        })
    }
}

#[derive(Args, Clone)]
struct EmbedOptions {
    #[arg(long, default_value_t = 100)]
    walk_length: usize,
    #[arg(long, default_value_t = 80)]
    walk_times: usize,
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Defaults to 128 for k-DA inputs and 512 for SalaDP inputs.
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long, default_value_t = 5)]
    negative: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Single training worker; output is bit-reproducible.
    #[arg(long)]
    deterministic: bool,
}

impl EmbedOptions {
    fn configs(&self, seed: u64, default_dim: usize, threads: usize) -> (WalkConfig, TrainConfig) {
        let walk = WalkConfig {
            walk_length: self.walk_length,
            walk_times: self.walk_times,
            window: self.window,
            seed,
        };
        let train = TrainConfig {
            dimension: self.dimension.unwrap_or(default_dim),
            negative_samples: self.negative,
            epochs: self.epochs,
            seed,
            workers: if self.deterministic { 1 } else { threads },
            ..TrainConfig::default()
        };
        (walk, train)
    }
}

#[derive(Args)]
struct AnonymizeArgs {
    #[command(flatten)]
    mechanism: MechanismArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Pick fake edges by plausibility under the original graph's embedding.
    #[arg(long, requires_all = ["embedding", "prior"])]
    enhanced: bool,
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long)]
    prior: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `.bin` writes the binary format, anything else text.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    options: EmbedOptions,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Required for cosine, euclidean and bray_curtis.
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long, default_value = "cosine")]
    metric: Metric,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitGmmArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RecoverArgs {
    /// Anonymized graph.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    posteriors: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    anonymized: PathBuf,
    /// Scores of the anonymized graph's edges.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    recovered: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    roc: Option<PathBuf>,
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// Seed of the random baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EnhanceArgs {
    /// Original graph.
    #[arg(long = "in")]
    input: PathBuf,
    /// Embedding of the original graph.
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    mechanism: MechanismArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    l: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "80")]
    t: Vec<usize>,
    /// Defaults to the mechanism's dimension.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    mechanism: MechanismArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    options: EmbedOptions,
    #[arg(long, default_value = "cosine")]
    metric: Metric,
    /// Anonymized samples for the SalaDP noise statistics.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    enhanced: bool,
    #[arg(long)]
    out_dir: PathBuf,
    /// Embedding cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Anonymize(a) => cmd_anonymize(a),
        Command::Embed(a) => cmd_embed(a, threads),
        Command::Score(a) => cmd_score(a),
        Command::FitGmm(a) => cmd_fit_gmm(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Enhance(a) => cmd_enhance(a),
        Command::Sweep(a) => cmd_sweep(a, threads),
        Command::Attack(a) => cmd_attack(a, threads),
    }
}

fn load(path: &Path) -> Result<Graph> {
    let loaded = load_edge_list(path).with_context(|| format!("loading {}", path.display()))?;
    if loaded.self_loops_dropped > 0 || loaded.duplicates_dropped > 0 {
        log::info!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            loaded.self_loops_dropped,
            loaded.duplicates_dropped
        );
    }
    Ok(loaded.graph)
}

fn load_scores(path: &Path) -> Result<EdgeScores> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(EdgeScores::read_csv(BufReader::new(file))?)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn cmd_anonymize(a: AnonymizeArgs) -> Result<()> {
    let mechanism = a.mechanism.mechanism()?;
    let g = load(&a.input)?;
    let (ga, meta) = if a.enhanced {
        let (Some(emb_path), Some(prior_path)) = (&a.embedding, &a.prior) else {
            bail!("--enhanced needs --embedding and --prior");
        };
        let emb = read_embedding(emb_path, EmbeddingFormat::from_path(emb_path))?;
        let prior: PlausibilityPrior = load_json(prior_path)?;
        anonymize_enhanced(&g, mechanism, a.seed, &prior, &emb)?
    } else {
        anonymize(&g, mechanism, a.seed)?
    };
    write_edge_list(&ga, &a.out)?;
    if let Some(meta_path) = &a.meta {
        write_json(&meta, meta_path)?;
    }
    log::info!("{} edges added, {} deleted", meta.added, meta.deleted);
    Ok(())
}

fn cmd_embed(a: EmbedArgs, threads: usize) -> Result<()> {
    let g = load(&a.input)?;
    let (walk, train) = a.options.configs(a.seed, 128, threads);
    let emb = embed_graph(&g, &walk, &train, None)?;
    write_embedding(&emb, &a.out, EmbeddingFormat::from_path(&a.out))?;
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let g = load(&a.input)?;
    let emb = match &a.embedding {
        Some(p) => Some(read_embedding(p, EmbeddingFormat::from_path(p))?),
        None if a.metric.uses_embedding() => bail!("metric {} needs --embedding", a.metric),
        None => None,
    };
    let scores = score_edges(&g, emb.as_ref(), a.metric)?;
    scores.write_csv(BufWriter::new(File::create(&a.out)?))?;
    Ok(())
}

fn cmd_fit_gmm(a: FitGmmArgs) -> Result<()> {
    let scores = load_scores(&a.scores)?;
    let cfg = GmmConfig {
        tol: a.tol,
        restarts: a.restarts,
        seed: a.seed,
        ..GmmConfig::default()
    };
    let fit = fit_gmm(&scores, &cfg)?;
    write_json(&fit, &a.out)?;
    Ok(())
}

fn cmd_recover(a: RecoverArgs) -> Result<()> {
    let ga = load(&a.input)?;
    let scores = load_scores(&a.scores)?;
    let fit: GmmFit = load_json(&a.params)?;
    let table = map_classify(&scores, &fit.params);
    let gr = recover_graph(&ga, &table)?;
    write_edge_list(&gr, &a.out)?;
    if let Some(p) = &a.posteriors {
        table.write_csv(BufWriter::new(File::create(p)?))?;
    }
    log::info!("removed {} predicted fake edges", ga.edge_count() - gr.edge_count());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    metric: Metric,
    auc: f64,
    rank_auc: f64,
    added: usize,
    deleted: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<PrecisionRecall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<PrecisionRecall>,
    delta_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_r: Option<f64>,
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let g = load(&a.original)?;
    let ga = load(&a.anonymized)?;
    let scores = load_scores(&a.scores)?;
    let truth = edge_diff(&g, &ga)?;
    let roc = roc_auc(&scores, &truth)?;
    let (mut map, mut baseline, mut delta_r) = (None, None, None);
    if let Some(p) = &a.recovered {
        let gr = load(p)?;
        let predicted = edge_diff(&gr, &ga)?.added;
        if !predicted.is_empty() {
            map = Some(precision_recall(&predicted, &truth)?);
            let picks = baseline_random(&ga, predicted.len(), a.seed)?;
            baseline = Some(precision_recall(&picks, &truth)?);
        }
        delta_r = Some(degree_difference(&g, &gr)?);
    }
    if let Some(p) = &a.roc {
        roc.write_points_csv(BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = &a.histogram {
        write_csv_rows(&score_histogram(&scores, &truth), p)?;
    }
    let report = EvalReport {
        metric: scores.metric,
        auc: roc.auc,
        rank_auc: roc.rank_auc,
        added: truth.added.len(),
        deleted: truth.deleted.len(),
        map,
        baseline,
        delta_a: degree_difference(&g, &ga)?,
        delta_r,
    };
    write_json(&report, &a.out)?;
    log::info!("AUC {:.4}", roc.auc);
    Ok(())
}

fn cmd_enhance(a: EnhanceArgs) -> Result<()> {
    let g = load(&a.input)?;
    let emb = read_embedding(&a.embedding, EmbeddingFormat::from_path(&a.embedding))?;
    let prior = fit_prior(&score_edges(&g, Some(&emb), Metric::Cosine)?)?;
    write_json(&prior, &a.out)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs, threads: usize) -> Result<()> {
    let mechanism = a.mechanism.mechanism()?;
    let g = load(&a.input)?;
    let mut cfg = PipelineConfig::new(mechanism, a.seed);
    cfg.walk.window = a.window;
    cfg.train.workers = if a.deterministic { 1 } else { threads };
    cfg.cache_dir = a.cache.clone();
    let dims = if a.d.is_empty() {
        vec![mechanism.default_dimension()]
    } else {
        a.d.clone()
    };
    let mut grid = Vec::new();
    for &l in &a.l {
        for &t in &a.t {
            for &d in &dims {
                grid.push(SweepPoint { l, t, d });
            }
        }
    }
    let rows = hyperparam_sweep(&g, &cfg, &grid)?;
    write_csv_rows(&rows, &a.out)?;
    Ok(())
}

fn cmd_attack(a: AttackArgs, threads: usize) -> Result<()> {
    let mechanism = a.mechanism.mechanism()?;
    let mut cfg = PipelineConfig::new(mechanism, a.seed);
    let (walk, train) = a.options.configs(a.seed, mechanism.default_dimension(), threads);
    cfg.input = Some(a.input.clone());
    cfg.walk = walk;
    cfg.train = train;
    cfg.metric = a.metric;
    cfg.samples = a.samples;
    cfg.enhanced = a.enhanced;
    cfg.output_dir = Some(a.out_dir.clone());
    cfg.cache_dir = a.cache.clone();
    let run = pipeline::run_attack(&cfg)?;
    let summary: BTreeMap<String, f64> = run
        .report
        .auc
        .iter()
        .map(|(m, auc)| (m.to_string(), *auc))
        .collect();
    log::info!("AUC by metric: {summary:?}");
    if let Some(e) = &run.report.enhanced {
        log::info!("AUC against the enhanced graph: {:.4}", e.auc);
    }
    Ok(())
}
