use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use cpgraph::eval::{evaluate, EvalResult, Subset};
use cpgraph::gnn::{predict, train_with_inputs, write_history_csv, Checkpoint, GraphInputs, TrainConfig};
use cpgraph::graph::{load_dataset, read_split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{write_json, ManifestBuilder, RunManifest};

fn mask_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if r > 0.0 && r < 0.5 {
        Ok(r)
    } else {
        Err(format!("{r} is outside the open interval (0, 0.5)"))
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory holding nodes.csv and edges.csv.
    #[arg(long)]
    data: PathBuf,
    /// Split file (defaults to <data>/splits.json).
    #[arg(long)]
    split: Option<PathBuf>,
    /// Train with the label-token prior (default).
    #[arg(long, overrides_with = "no_cp")]
    cp: bool,
    /// Train the plain GCN baseline.
    #[arg(long)]
    no_cp: bool,
    /// Fraction of nodes whose token is masked per epoch, in (0, 0.5).
    #[arg(long, default_value_t = 0.25, value_parser = mask_rate)]
    mask_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    /// Seed of the first run; run j uses seed + j.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent runs.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Output directory for eval.json and per-seed checkpoints.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub final_loss: f64,
    pub valid: Option<EvalResult>,
    pub test: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub runs: usize,
    pub f1: MeanSd,
    /// Absent when any run's test subset held a single class.
    pub auc: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub manifest: RunManifest,
    pub dataset: String,
    /// SHA-256 over the nodes and edges digests; identifies the dataset.
    pub dataset_digest: String,
    pub arm: String,
    pub config: TrainConfig,
    pub runs: Vec<SeedRun>,
    pub summary: ArmSummary,
}

pub fn arm_name(use_cp: bool) -> &'static str {
    if use_cp {
        "cp"
    } else {
        "baseline"
    }
}

fn run_seed(
    inputs: &GraphInputs,
    ds: &cpgraph::graph::Dataset,
    split: &cpgraph::Split,
    config: &TrainConfig,
    dir: &Path,
) -> Result<SeedRun> {
    let outcome = train_with_inputs(inputs, &ds.labels, split, config)
        .with_context(|| format!("training seed {}", config.seed))?;
    let probs = predict(&outcome.model, inputs, &ds.labels, split)?;
    let valid = if split.valid.is_empty() {
        None
    } else {
        Some(evaluate(&probs, &ds.labels, split, Subset::Valid)?)
    };
    let test = evaluate(&probs, &ds.labels, split, Subset::Test)?;

    fs::create_dir_all(dir)?;
    write_json(&dir.join("checkpoint.json"), &Checkpoint::from_model(&outcome.model, config))?;
    let history = File::create(dir.join("history.csv"))?;
    write_history_csv(&outcome.history, BufWriter::new(history))?;
    Ok(SeedRun {
        seed: config.seed,
        final_loss: outcome.history.last().expect("epochs >= 1").loss,
        valid,
        test,
    })
}

pub fn run(args: TrainArgs, argv: Vec<String>, workers: usize) -> Result<()> {
    let mut manifest = ManifestBuilder::start(argv);
    let split_path = args.split.clone().unwrap_or_else(|| args.data.join("splits.json"));
    let nodes_digest = manifest.input(&args.data.join("nodes.csv"))?;
    let edges_digest = manifest.input(&args.data.join("edges.csv"))?;
    manifest.input(&split_path)?;

    let ds = load_dataset(&args.data)?;
    let split = read_split(&split_path)?;
    split.check(&ds.labels)?;
    let config = TrainConfig {
        mask_rate: args.mask_rate,
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        epochs: args.epochs,
        hidden_dim: args.hidden,
        seed: args.seed,
        use_cp: !args.no_cp,
    };
    config.check()?;
    if args.seeds == 0 {
        anyhow::bail!("--seeds must be at least 1");
    }

    let inputs = GraphInputs::new(&ds.graph);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let runs: Vec<SeedRun> = pool.install(|| {
        (0..args.seeds)
            .into_par_iter()
            .map(|j| {
                let cfg = TrainConfig { seed: args.seed + j, ..config };
                run_seed(&inputs, &ds, &split, &cfg, &args.out.join(format!("seed_{}", cfg.seed)))
            })
            .collect::<Result<_>>()
    })?;

    let f1: Vec<f64> = runs.iter().map(|r| r.test.f1).collect();
    let auc: Option<Vec<f64>> = runs.iter().map(|r| r.test.auc).collect();
    let summary = ArmSummary {
        runs: runs.len(),
        f1: MeanSd::of(&f1),
        auc: auc.map(|a| MeanSd::of(&a)),
    };
    let dataset_digest = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(format!("{nodes_digest}{edges_digest}")))
    };
    let out = EvalOutput {
        manifest: manifest.finish(serde_json::json!({ "train": config, "seeds": args.seeds }), Some(args.seed))?,
        dataset: args.data.display().to_string(),
        dataset_digest,
        arm: arm_name(config.use_cp).into(),
        config,
        runs,
        summary,
    };
    write_json(&args.out.join("eval.json"), &out)
}
