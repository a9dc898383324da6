//! Road-graph incident analytics.
//!
//! * [`graph`]: CSR road graph, labels, stratified splits and CSV/JSON I/O.
//! * [`metrics`]: k-hop neighbor crash density (NCD/ANCD) and continuity
//!   (NCC/ANCC).
//! * [`stats`]: Student-t CDF and the one-sided paired t-test.
//! * [`gnn`]: two-layer graph convolutional classifier with an optional
//!   label-token dictionary (concurrency prior).
//! * [`eval`]: positive-class F1 and rank AUC.
//! * [`synth`]: grid / random-geometric graphs with planted incident clusters.

pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Label, LabelVector, RoadGraph, Split};
