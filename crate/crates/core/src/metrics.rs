//! k-hop neighborhood statistics.
//!
//! For node `i` and hop bound `k`, `neighbor_k(i)` is every node `j != i`
//! reachable in at most `k` hops. From it:
//!
//! * `NCD_i` = fraction of `neighbor_k(i)` that is positive,
//! * `NCC_i` = 1 if any node of `neighbor_k(i)` is positive, else 0,
//!
//! and `ANCD_z` / `ANCC_z` average them over class-`z` nodes. Nodes with an
//! empty neighborhood are left out of both averages and reported as
//! excluded.
//!
//! The per-node pass is a layered BFS with an epoch-stamped visited array,
//! run in parallel over fixed node chunks; the class reduction is sequential
//! in node order, so reports are bitwise identical for any worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, LabelVector, NodeId, RoadGraph};

/// Hop grid used when none is given.
pub const DEFAULT_HOPS: [usize; 5] = [1, 2, 4, 8, 10];

const CHUNK: usize = 256;

/// Neighborhood size and positive count of one node at one hop bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub reach: u32,
    pub positives: u32,
}

impl NodeCounts {
    pub fn ncd(&self) -> Option<f64> {
        (self.reach > 0).then(|| self.positives as f64 / self.reach as f64)
    }

    pub fn ncc(&self) -> u8 {
        u8::from(self.positives > 0)
    }
}

/// Reusable BFS state. One per worker; never allocates per node.
pub struct KhopScanner {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl KhopScanner {
    pub fn new(num_nodes: usize) -> Self {
        KhopScanner {
            stamp: vec![0; num_nodes],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn begin(&mut self, src: usize) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.stamp[src] = self.epoch;
        self.frontier.clear();
        self.frontier.push(src as NodeId);
    }

    /// Expands one BFS layer and calls `visit` on every newly reached node.
    fn expand(&mut self, graph: &RoadGraph, mut visit: impl FnMut(NodeId)) {
        self.next.clear();
        for &u in &self.frontier {
            for &v in graph.neighbors(u as usize) {
                let s = &mut self.stamp[v as usize];
                if *s != self.epoch {
                    *s = self.epoch;
                    self.next.push(v);
                    visit(v);
                }
            }
        }
        std::mem::swap(&mut self.frontier, &mut self.next);
    }

    /// Fills `out[h]` with the counts at hop bound `hops[h]`; `hops` must be
    /// strictly ascending and start at >= 1.
    pub fn counts(
        &mut self,
        graph: &RoadGraph,
        positive: &[bool],
        src: usize,
        hops: &[usize],
        out: &mut [NodeCounts],
    ) {
        debug_assert_eq!(hops.len(), out.len());
        self.begin(src);
        let mut acc = NodeCounts::default();
        let mut h = 0;
        let max_k = hops.last().copied().unwrap_or(0);
        for depth in 1..=max_k {
            if self.frontier.is_empty() {
                break;
            }
            self.expand(graph, |v| {
                acc.reach += 1;
                acc.positives += u32::from(positive[v as usize]);
            });
            while h < hops.len() && hops[h] == depth {
                out[h] = acc;
                h += 1;
            }
        }
        for slot in &mut out[h..] {
            *slot = acc;
        }
    }

    /// Sorted `neighbor_k(src)`.
    pub fn neighbors(&mut self, graph: &RoadGraph, src: usize, k: usize) -> Vec<usize> {
        self.begin(src);
        let mut found = Vec::new();
        for _ in 0..k {
            if self.frontier.is_empty() {
                break;
            }
            self.expand(graph, |v| found.push(v as usize));
        }
        found.sort_unstable();
        found
    }
}

fn check_hop(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidHop(k));
    }
    Ok(())
}

/// Every node within `k` hops of `i`, excluding `i`, ascending.
pub fn khop_neighbors(graph: &RoadGraph, i: usize, k: usize) -> Result<Vec<usize>> {
    graph.check_node(i)?;
    check_hop(k)?;
    Ok(KhopScanner::new(graph.num_nodes()).neighbors(graph, i, k))
}

/// Neighbor crash density of node `i`; `None` when `neighbor_k(i)` is empty.
pub fn ncd(graph: &RoadGraph, labels: &LabelVector, i: usize, k: usize) -> Result<Option<f64>> {
    labels.ensure_len(graph.num_nodes())?;
    let hood = khop_neighbors(graph, i, k)?;
    let mut positives = 0usize;
    for &j in &hood {
        match labels.get(j) {
            Label::Positive => positives += 1,
            Label::Negative => {}
            Label::Unknown => return Err(Error::UnknownLabel(j)),
        }
    }
    Ok((!hood.is_empty()).then(|| positives as f64 / hood.len() as f64))
}

/// Neighbor crash continuity of node `i`: 1 iff a positive node lies within
/// `k` hops. Isolated nodes give 0.
pub fn ncc(graph: &RoadGraph, labels: &LabelVector, i: usize, k: usize) -> Result<u8> {
    labels.ensure_len(graph.num_nodes())?;
    let hood = khop_neighbors(graph, i, k)?;
    Ok(u8::from(hood.iter().any(|&j| labels.get(j).is_positive())))
}

/// Which neighborhood metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ANCD")]
    Ancd,
    #[serde(rename = "ANCC")]
    Ancc,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Ancd, Metric::Ancc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ancd => "ANCD",
            Metric::Ancc => "ANCC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ANCD" => Ok(Metric::Ancd),
            "ANCC" => Ok(Metric::Ancc),
            _ => Err(format!("unknown metric {s:?} (expected ANCD or ANCC)")),
        }
    }
}

/// A class average together with how many nodes it covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassAverage {
    pub value: f64,
    pub counted: usize,
    pub excluded_isolated: usize,
}

/// Values split by class, serialized with keys `"0"` and `"1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByClass<T> {
    #[serde(rename = "0")]
    pub negative: Vec<T>,
    #[serde(rename = "1")]
    pub positive: Vec<T>,
}

impl<T> ByClass<T> {
    pub fn class(&self, z: u8) -> &[T] {
        if z == 0 {
            &self.negative
        } else {
            &self.positive
        }
    }
}

/// ANCD/ANCC per class and hop bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub k: Vec<usize>,
    pub ancd: ByClass<f64>,
    pub ancc: ByClass<f64>,
    pub counted: ByClass<usize>,
    pub excluded: ByClass<usize>,
}

impl MetricReport {
    fn position(&self, k: usize) -> Result<usize> {
        self.k
            .iter()
            .position(|&x| x == k)
            .ok_or(Error::KNotComputed(k))
    }

    pub fn value(&self, metric: Metric, z: u8, k: usize) -> Result<f64> {
        let at = self.position(k)?;
        let series = match metric {
            Metric::Ancd => &self.ancd,
            Metric::Ancc => &self.ancc,
        };
        Ok(series.class(z)[at])
    }

    pub fn average(&self, metric: Metric, z: u8, k: usize) -> Result<ClassAverage> {
        let at = self.position(k)?;
        Ok(ClassAverage {
            value: self.value(metric, z, k)?,
            counted: self.counted.class(z)[at],
            excluded_isolated: self.excluded.class(z)[at],
        })
    }
}

/// Per-node counts for a set of hop bounds, laid out node-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeCountTable {
    pub hops: Vec<usize>,
    counts: Vec<NodeCounts>,
}

impl NodeCountTable {
    pub fn get(&self, node: usize, hop_index: usize) -> NodeCounts {
        self.counts[node * self.hops.len() + hop_index]
    }
}

/// Computes `NodeCounts` of every node for every hop bound in `hops`
/// (any order, duplicates allowed) using `workers` threads.
pub fn node_counts(
    graph: &RoadGraph,
    labels: &LabelVector,
    hops: &[usize],
    workers: usize,
) -> Result<NodeCountTable> {
    labels.ensure_len(graph.num_nodes())?;
    for &k in hops {
        check_hop(k)?;
    }
    let mut sorted = hops.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let nk = sorted.len();
    let n = graph.num_nodes();
    let positive: Vec<bool> = labels.iter().map(Label::is_positive).collect();

    let mut counts = vec![NodeCounts::default(); n * nk];
    if nk > 0 && n > 0 {
        let run = |counts: &mut [NodeCounts]| {
            counts.par_chunks_mut(nk * CHUNK).enumerate().for_each_init(
                || KhopScanner::new(n),
                |scanner, (c, chunk)| {
                    for (off, out) in chunk.chunks_mut(nk).enumerate() {
                        scanner.counts(graph, &positive, c * CHUNK + off, &sorted, out);
                    }
                },
            )
        };
        if workers <= 1 {
            let mut scanner = KhopScanner::new(n);
            for (i, out) in counts.chunks_mut(nk).enumerate() {
                scanner.counts(graph, &positive, i, &sorted, out);
            }
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
                .install(|| run(&mut counts));
        }
    }

    // remap to caller order
    let index: Vec<usize> = hops
        .iter()
        .map(|k| sorted.binary_search(k).expect("hop present"))
        .collect();
    let counts = if index.iter().copied().eq(0..nk) {
        counts
    } else {
        counts
            .chunks(nk.max(1))
            .flat_map(|row| index.iter().map(move |&h| row[h]))
            .collect()
    };
    Ok(NodeCountTable {
        hops: hops.to_vec(),
        counts,
    })
}

/// All four aggregates for both classes and every hop bound in `ks`.
pub fn metric_report(
    graph: &RoadGraph,
    labels: &LabelVector,
    ks: &[usize],
    workers: usize,
) -> Result<MetricReport> {
    labels.ensure_len(graph.num_nodes())?;
    labels.require_known()?;
    let table = node_counts(graph, labels, ks, workers)?;

    let mut report = MetricReport {
        k: ks.to_vec(),
        ancd: ByClass { negative: vec![], positive: vec![] },
        ancc: ByClass { negative: vec![], positive: vec![] },
        counted: ByClass { negative: vec![], positive: vec![] },
        excluded: ByClass { negative: vec![], positive: vec![] },
    };
    for (h, &k) in ks.iter().enumerate() {
        for z in [0u8, 1] {
            let want = if z == 0 { Label::Negative } else { Label::Positive };
            let mut ncd_sum = 0.0f64;
            let mut ncc_sum = 0usize;
            let mut counted = 0usize;
            let mut excluded = 0usize;
            for i in 0..graph.num_nodes() {
                if labels.get(i) != want {
                    continue;
                }
                let c = table.get(i, h);
                match c.ncd() {
                    Some(v) => {
                        ncd_sum += v;
                        ncc_sum += c.ncc() as usize;
                        counted += 1;
                    }
                    None => excluded += 1,
                }
            }
            if counted == 0 {
                return Err(Error::NoEligibleNodes { class: z, k });
            }
            let push = |bc: &mut ByClass<f64>, v: f64| {
                if z == 0 { bc.negative.push(v) } else { bc.positive.push(v) }
            };
            push(&mut report.ancd, ncd_sum / counted as f64);
            push(&mut report.ancc, ncc_sum as f64 / counted as f64);
            let (cn, ex) = if z == 0 {
                (&mut report.counted.negative, &mut report.excluded.negative)
            } else {
                (&mut report.counted.positive, &mut report.excluded.positive)
            };
            cn.push(counted);
            ex.push(excluded);
        }
    }
    Ok(report)
}

/// `ANCD_z` at hop bound `k`.
pub fn ancd(graph: &RoadGraph, labels: &LabelVector, z: u8, k: usize) -> Result<ClassAverage> {
    metric_report(graph, labels, &[k], 1)?.average(Metric::Ancd, z, k)
}

/// `ANCC_z` at hop bound `k`.
pub fn ancc(graph: &RoadGraph, labels: &LabelVector, z: u8, k: usize) -> Result<ClassAverage> {
    metric_report(graph, labels, &[k], 1)?.average(Metric::Ancc, z, k)
}
