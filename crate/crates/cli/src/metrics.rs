use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use cpgraph::graph::load_dataset;
use cpgraph::metrics::{metric_report, Metric, MetricReport, DEFAULT_HOPS};
use cpgraph::stats::{hypothesis_table, TTestTable};
use serde::{Deserialize, Serialize};

use crate::manifest::{emit_json, ManifestBuilder, RunManifest};

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Dataset directory holding nodes.csv and edges.csv.
    #[arg(long)]
    data: PathBuf,
    /// Hop bounds.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_HOPS)]
    k: Vec<usize>,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the metric-vs-k series as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphSummary {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub self_loops_dropped: usize,
    pub duplicate_edges_collapsed: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsOutput {
    pub manifest: RunManifest,
    pub graph: GraphSummary,
    pub report: MetricReport,
}

fn write_series(path: &PathBuf, report: &MetricReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "k,ancd_0,ancd_1,ancc_0,ancc_1")?;
    for (h, k) in report.k.iter().enumerate() {
        writeln!(
            w,
            "{k},{},{},{},{}",
            report.ancd.negative[h], report.ancd.positive[h], report.ancc.negative[h], report.ancc.positive[h]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_metrics(args: MetricsArgs, argv: Vec<String>, workers: usize) -> Result<()> {
    let mut manifest = ManifestBuilder::start(argv);
    manifest.input(&args.data.join("nodes.csv"))?;
    manifest.input(&args.data.join("edges.csv"))?;
    let ds = load_dataset(&args.data)?;
    if ds.stats.warnings() > 0 {
        eprintln!(
            "warning: dropped {} self-loops, collapsed {} duplicate edges",
            ds.stats.self_loops_dropped, ds.stats.duplicate_edges_collapsed
        );
    }
    let report = metric_report(&ds.graph, &ds.labels, &args.k, workers)?;
    if let Some(csv) = &args.csv {
        write_series(csv, &report)?;
    }
    let out = MetricsOutput {
        manifest: manifest.finish(serde_json::json!({ "k": args.k }), None)?,
        graph: GraphSummary {
            num_nodes: ds.graph.num_nodes(),
            num_edges: ds.graph.num_edges(),
            self_loops_dropped: ds.stats.self_loops_dropped,
            duplicate_edges_collapsed: ds.stats.duplicate_edges_collapsed,
        },
        report,
    };
    emit_json(args.out.as_deref(), &out)
}

#[derive(Args, Debug)]
pub struct TtestArgs {
    /// Metrics reports, one per dataset.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = Metric::ALL)]
    metric: Vec<Metric>,
    /// Hop bounds to test (defaults to those of the first report).
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TtestOutput {
    pub manifest: RunManifest,
    pub n_reports: usize,
    pub ttest: TTestTable,
}

pub fn run_ttest(args: TtestArgs, argv: Vec<String>) -> Result<()> {
    let mut manifest = ManifestBuilder::start(argv);
    let mut reports = Vec::with_capacity(args.reports.len());
    for path in &args.reports {
        let value = manifest.report_input(path)?;
        let report: MetricReport = serde_json::from_value(value["report"].clone())
            .with_context(|| format!("{}: not a metrics report", path.display()))?;
        reports.push(report);
    }
    let ks = if args.k.is_empty() { reports[0].k.clone() } else { args.k.clone() };
    if ks.is_empty() {
        bail!("no hop bounds to test");
    }
    let ttest = hypothesis_table(&reports, &args.metric, &ks)?;
    let out = TtestOutput {
        manifest: manifest.finish(serde_json::json!({ "metric": args.metric, "k": ks }), None)?,
        n_reports: reports.len(),
        ttest,
    };
    emit_json(args.out.as_deref(), &out)
}
