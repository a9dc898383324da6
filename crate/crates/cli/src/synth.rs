use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use cpgraph::graph::{save_dataset, stratified_split, write_split, SplitRatios};
use cpgraph::synth::{generate_dataset, generate_suite, Labeling, SynthConfig, SynthDataset, Topology};
use cpgraph::Label;
use serde::Serialize;

use crate::manifest::{write_json, ManifestBuilder, RunManifest};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Requested node count (grid uses floor(sqrt(n)) columns).
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value = "grid")]
    topology: Topology,
    /// Connection radius for `rgg`.
    #[arg(long, default_value_t = 0.04)]
    radius: f64,
    /// Number of incident cluster seeds.
    #[arg(long, default_value_t = 25)]
    incident_seeds: usize,
    #[arg(long, default_value_t = 0.5)]
    diffusion_prob: f64,
    #[arg(long, default_value_t = 100)]
    diffusion_rounds: usize,
    /// Target positive ratio, within [0.04, 0.31].
    #[arg(long, default_value_t = 0.10)]
    ratio: f64,
    #[arg(long, default_value_t = 8)]
    feature_dim: usize,
    /// Feature mean shift strength in [0, 1].
    #[arg(long, default_value_t = 0.3)]
    signal: f64,
    #[arg(long, default_value = "diffusion")]
    labeling: Labeling,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generate this many jittered datasets into `state_NN` subdirectories.
    #[arg(long)]
    suite: Option<usize>,
}

#[derive(Serialize)]
struct DatasetSummary {
    dir: String,
    config: SynthConfig,
    num_nodes: usize,
    num_edges: usize,
    positives: usize,
    split_seed: u64,
}

#[derive(Serialize)]
struct SynthReport {
    manifest: RunManifest,
    datasets: Vec<DatasetSummary>,
}

fn write_dataset(dir: &Path, ds: &SynthDataset) -> Result<DatasetSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_dataset(&ds.graph, &ds.labels, dir.join("nodes.csv"), dir.join("edges.csv"))?;
    let split_seed = ds.config.seed;
    let split = stratified_split(&ds.labels, SplitRatios::default(), split_seed)?;
    write_split(&split, dir.join("splits.json"))?;
    Ok(DatasetSummary {
        dir: dir.display().to_string(),
        config: ds.config,
        num_nodes: ds.graph.num_nodes(),
        num_edges: ds.graph.num_edges(),
        positives: ds.labels.count(Label::Positive),
        split_seed,
    })
}

pub fn run(args: SynthArgs, argv: Vec<String>) -> Result<()> {
    let manifest = ManifestBuilder::start(argv);
    let config = SynthConfig {
        num_nodes: args.nodes,
        topology: args.topology,
        geo_radius: args.radius,
        num_seeds: args.incident_seeds,
        diffusion_prob: args.diffusion_prob,
        diffusion_rounds: args.diffusion_rounds,
        target_positive_ratio: args.ratio,
        feature_dim: args.feature_dim,
        feature_signal: args.signal,
        labeling: args.labeling,
        seed: args.seed,
    };
    config.check()?;

    let datasets = match args.suite {
        None => vec![write_dataset(&args.out, &generate_dataset(&config)?)?],
        Some(j) => generate_suite(j, &config, args.seed)?
            .iter()
            .enumerate()
            .map(|(i, ds)| write_dataset(&args.out.join(format!("state_{i:02}")), ds))
            .collect::<Result<_>>()?,
    };
    let report = SynthReport {
        manifest: manifest.finish(serde_json::json!({ "synth": config, "suite": args.suite }), Some(args.seed))?,
        datasets,
    };
    write_json(&args.out.join("synth.json"), &report)
}
