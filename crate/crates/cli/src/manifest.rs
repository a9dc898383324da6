use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance block embedded in every JSON report. `wall_time_s` is the only
/// field that varies between identical invocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config: Value,
    pub seed: Option<u64>,
    /// Input path (as given) to hex SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    command: Vec<String>,
    inputs: BTreeMap<String, String>,
}

impl ManifestBuilder {
    pub fn start(command: Vec<String>) -> Self {
        ManifestBuilder {
            started: Instant::now(),
            command,
            inputs: BTreeMap::new(),
        }
    }

    /// Hashes `path` and records it as an input.
    pub fn input(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.inputs.insert(path.display().to_string(), digest.clone());
        Ok(digest)
    }

    /// Records a JSON report produced by this tool. The digest covers the
    /// report without its manifest wall time, so reruns hash identically.
    pub fn report_input(&mut self, path: &Path) -> Result<Value> {
        let mut value: Value = read_json(path)?;
        if let Some(m) = value.get_mut("manifest").and_then(Value::as_object_mut) {
            m.remove("wall_time_s");
        }
        let digest = hex::encode(Sha256::digest(serde_json::to_vec(&value)?));
        self.inputs.insert(path.display().to_string(), digest);
        Ok(value)
    }

    pub fn finish(&self, config: impl Serialize, seed: Option<u64>) -> Result<RunManifest> {
        Ok(RunManifest {
            tool: "cpgraph".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: self.inputs.clone(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        })
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path`, or stdout when absent.
pub fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
