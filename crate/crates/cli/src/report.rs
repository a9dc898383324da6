use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::manifest::{emit_json, read_json, ManifestBuilder, RunManifest};
use crate::train::{ArmSummary, EvalOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directories written by `train` (each holding eval.json).
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub dataset: String,
    pub baseline: Option<ArmSummary>,
    pub cp: Option<ArmSummary>,
    /// `cp - baseline`, present when both arms ran.
    pub delta: Option<Delta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutput {
    pub manifest: RunManifest,
    pub datasets: Vec<DatasetRow>,
    pub warnings: Vec<String>,
}

fn build_rows(evals: &[EvalOutput]) -> Result<(Vec<DatasetRow>, Vec<String>)> {
    // keyed by content digest, kept in first-seen order
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, DatasetRow> = BTreeMap::new();
    for e in evals {
        let row = rows.entry(e.dataset_digest.clone()).or_insert_with(|| {
            order.push(e.dataset_digest.clone());
            DatasetRow {
                dataset: e.dataset.clone(),
                baseline: None,
                cp: None,
                delta: None,
            }
        });
        let slot = match e.arm.as_str() {
            "cp" => &mut row.cp,
            "baseline" => &mut row.baseline,
            other => bail!("unknown arm {other:?} in run for {}", e.dataset),
        };
        if slot.is_some() {
            bail!("two {} runs for dataset {}", e.arm, e.dataset);
        }
        *slot = Some(e.summary.clone());
    }

    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let mut row = rows.remove(&key).expect("seen");
        match (&row.baseline, &row.cp) {
            (Some(b), Some(c)) => {
                row.delta = Some(Delta {
                    f1: c.f1.mean - b.f1.mean,
                    auc: b.auc.zip(c.auc).map(|(b, c)| c.mean - b.mean),
                });
            }
            (None, _) => warnings.push(format!("{}: no baseline run, delta omitted", row.dataset)),
            (_, None) => warnings.push(format!("{}: no cp run, delta omitted", row.dataset)),
        }
        out.push(row);
    }
    Ok((out, warnings))
}

fn cell(v: Option<(f64, f64)>) -> String {
    v.map_or_else(|| "-".to_string(), |(m, s)| format!("{m:.4} ± {s:.4}"))
}

fn render_text(rows: &[DatasetRow]) -> String {
    let mut lines: Vec<[String; 5]> = vec![["dataset", "arm", "runs", "F1", "AUC"].map(String::from)];
    for row in rows {
        let mut name = row.dataset.clone();
        for (arm, s) in [("baseline", &row.baseline), ("cp", &row.cp)] {
            if let Some(s) = s {
                lines.push([
                    std::mem::take(&mut name),
                    arm.into(),
                    s.runs.to_string(),
                    cell(Some((s.f1.mean, s.f1.sd))),
                    cell(s.auc.map(|a| (a.mean, a.sd))),
                ]);
            }
        }
        if let Some(d) = row.delta {
            lines.push([
                String::new(),
                "Δ".into(),
                String::new(),
                format!("{:+.4}", d.f1),
                d.auc.map_or("-".into(), |a| format!("{a:+.4}")),
            ]);
        }
    }
    let width = |c: usize| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..5).map(width).collect();
    let mut text = String::new();
    for l in &lines {
        let mut line = String::new();
        for (c, v) in l.iter().enumerate() {
            let pad = widths[c] - v.chars().count();
            let _ = write!(line, "{v}{}  ", " ".repeat(pad));
        }
        text.push_str(line.trim_end());
        text.push('\n');
    }
    text
}

pub fn run(args: ReportArgs, argv: Vec<String>) -> Result<()> {
    let mut manifest = ManifestBuilder::start(argv);
    let mut evals = Vec::with_capacity(args.runs.len());
    for dir in &args.runs {
        let path = dir.join("eval.json");
        manifest.report_input(&path)?;
        evals.push(read_json::<EvalOutput>(&path)?);
    }
    let (datasets, warnings) = build_rows(&evals)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match args.format {
        Format::Json => {
            let out = ReportOutput {
                manifest: manifest.finish(serde_json::json!({ "format": args.format }), None)?,
                datasets,
                warnings,
            };
            emit_json(args.out.as_deref(), &out)
        }
        Format::Text => {
            let text = render_text(&datasets);
            match &args.out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
