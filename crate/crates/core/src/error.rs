use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{path}:{line}: dangling node id {id} (graph has {num_nodes} nodes)")]
    DanglingNode {
        path: PathBuf,
        line: u64,
        id: u64,
        num_nodes: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node id {id} out of range (graph has {num_nodes} nodes)")]
    NodeOutOfRange { id: usize, num_nodes: usize },

    #[error("hop bound must be >= 1, got {0}")]
    InvalidHop(usize),

    #[error("unknown label on node {0}")]
    UnknownLabel(usize),

    #[error("no eligible class-{class} node with a non-empty {k}-hop neighborhood")]
    NoEligibleNodes { class: u8, k: usize },

    #[error("k = {0} not computed in report")]
    KNotComputed(usize),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("class {class} has only {size} members; at least 3 are needed to populate train, valid and test")]
    ClassTooSmall { class: u8, size: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("paired test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("degenerate variance: all paired differences are equal")]
    DegenerateVariance,

    #[error("AUC undefined: evaluation set contains a single class")]
    AucUndefined,

    #[error("empty {0} set")]
    EmptySet(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label tokens must be supplied iff the model carries a token table (model use_cp = {model_cp})")]
    FlagMismatch { model_cp: bool },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("random geometric graph too sparse: largest component holds {kept} of {total} nodes (radius too small)")]
    RadiusTooSmall { kept: usize, total: usize },

    #[error("target positive ratio {target} unreachable: planted ratio {achieved}")]
    UnreachableRatio { target: f64, achieved: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
