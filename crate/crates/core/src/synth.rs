//! Synthetic road-like graphs with planted incident clusters.
//!
//! Topology is a 4-connected lattice or a random geometric graph on the unit
//! square (largest component kept). Incidents are planted by seeding a few
//! positive nodes and diffusing to negative neighbors round by round until
//! the target positive ratio is reached, which yields spatially clustered
//! labels. An independent-label mode gives the unclustered control.

use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, LabelVector, NodeId, RoadGraph};

/// Shift applied per signal coordinate to positive nodes at `feature_signal = 1`.
pub const SIGNAL_SHIFT: f64 = 3.0;

/// Positive-ratio bounds accepted for generated datasets.
pub const RATIO_RANGE: (f64, f64) = (0.04, 0.31);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Grid,
    RandomGeometric,
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "grid" => Ok(Topology::Grid),
            "rgg" | "random-geometric" => Ok(Topology::RandomGeometric),
            _ => Err(format!("unknown topology {s:?} (expected grid or rgg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Labeling {
    /// Seeded clusters grown by neighbor diffusion.
    Diffusion,
    /// Each node positive independently with the target ratio.
    Independent,
}

impl FromStr for Labeling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "diffusion" => Ok(Labeling::Diffusion),
            "independent" => Ok(Labeling::Independent),
            _ => Err(format!("unknown labeling {s:?} (expected diffusion or independent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_nodes: usize,
    pub topology: Topology,
    /// Connection radius in the unit square (random geometric only).
    pub geo_radius: f64,
    pub num_seeds: usize,
    pub diffusion_prob: f64,
    pub diffusion_rounds: usize,
    pub target_positive_ratio: f64,
    pub feature_dim: usize,
    pub feature_signal: f64,
    pub labeling: Labeling,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_nodes: 2500,
            topology: Topology::Grid,
            geo_radius: 0.04,
            num_seeds: 25,
            diffusion_prob: 0.5,
            diffusion_rounds: 100,
            target_positive_ratio: 0.10,
            feature_dim: 8,
            feature_signal: 0.3,
            labeling: Labeling::Diffusion,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_nodes < 4 {
            return bad(format!("num_nodes {} < 4", self.num_nodes));
        }
        let (lo, hi) = RATIO_RANGE;
        if !(lo..=hi).contains(&self.target_positive_ratio) {
            return bad(format!(
                "target positive ratio {} outside [{lo}, {hi}]",
                self.target_positive_ratio
            ));
        }
        if !(0.0..=1.0).contains(&self.diffusion_prob) {
            return bad(format!("diffusion_prob {} outside [0, 1]", self.diffusion_prob));
        }
        if !(0.0..=1.0).contains(&self.feature_signal) {
            return bad(format!("feature_signal {} outside [0, 1]", self.feature_signal));
        }
        if self.topology == Topology::RandomGeometric && (self.geo_radius.is_nan() || self.geo_radius <= 0.0) {
            return bad(format!("geo_radius {} must be positive", self.geo_radius));
        }
        if self.labeling == Labeling::Diffusion && self.num_seeds == 0 {
            return bad("num_seeds must be >= 1".into());
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Lattice dimensions used for `n` requested nodes: `w = floor(√n)`,
/// `h = n / w`.
pub fn grid_dims(n: usize) -> (usize, usize) {
    let mut w = (n as f64).sqrt().floor() as usize;
    while w * w > n {
        w -= 1;
    }
    while (w + 1) * (w + 1) <= n {
        w += 1;
    }
    (w, n / w)
}

fn grid(width: usize, height: usize) -> Result<RoadGraph> {
    let n = width * height;
    let mut edges = Vec::with_capacity(2 * n);
    for r in 0..height {
        for c in 0..width {
            let i = (r * width + c) as NodeId;
            if c + 1 < width {
                edges.push((i, i + 1));
            }
            if r + 1 < height {
                edges.push((i, i + width as NodeId));
            }
        }
    }
    let lengths = Array2::ones((edges.len(), 1));
    Ok(RoadGraph::from_edge_list(n, &edges, Array2::zeros((n, 0)), Some(lengths))?.0)
}

fn random_geometric(n: usize, radius: f64, rng: &mut impl Rng) -> Result<RoadGraph> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let cells = ((1.0 / radius).floor() as usize).clamp(1, n.max(1));
    let cell_of = |v: f64| ((v * cells as f64) as usize).min(cells - 1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for (i, &(x, y)) in pts.iter().enumerate() {
        buckets[cell_of(y) * cells + cell_of(x)].push(i);
    }
    let r2 = radius * radius;
    let mut edges = Vec::new();
    let mut lengths = Vec::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let (cx, cy) = (cell_of(x), cell_of(y));
        for by in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
            for bx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                for &j in &buckets[by * cells + bx] {
                    if j <= i {
                        continue;
                    }
                    let d2 = (pts[j].0 - x).powi(2) + (pts[j].1 - y).powi(2);
                    if d2 <= r2 {
                        edges.push((i as NodeId, j as NodeId));
                        lengths.push(d2.sqrt());
                    }
                }
            }
        }
    }

    // keep the largest component (lowest member id breaks ties)
    let comp = components(n, &edges);
    let mut sizes = vec![0usize; n];
    for &c in &comp {
        sizes[c] += 1;
    }
    let best = (0..n).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
    let kept = sizes[best];
    if 2 * kept < n {
        return Err(Error::RadiusTooSmall { kept, total: n });
    }
    let mut remap = vec![NodeId::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if comp[i] == best {
            remap[i] = next;
            next += 1;
        }
    }
    let mut kept_edges = Vec::new();
    let mut kept_lengths = Vec::new();
    for (&(u, v), &len) in edges.iter().zip(&lengths) {
        if comp[u as usize] == best {
            kept_edges.push((remap[u as usize], remap[v as usize]));
            kept_lengths.push(len);
        }
    }
    let ef = Array2::from_shape_vec((kept_edges.len(), 1), kept_lengths).expect("sized");
    Ok(RoadGraph::from_edge_list(kept, &kept_edges, Array2::zeros((kept, 0)), Some(ef))?.0)
}

/// Component id per node, where the id is the smallest node in the component.
fn components(n: usize, edges: &[(NodeId, NodeId)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

/// Builds the skeleton graph (no node features; edge feature = segment length).
pub fn generate_topology(config: &SynthConfig) -> Result<RoadGraph> {
    config.check()?;
    match config.topology {
        Topology::Grid => {
            let (w, h) = grid_dims(config.num_nodes);
            grid(w, h)
        }
        Topology::RandomGeometric => random_geometric(config.num_nodes, config.geo_radius, &mut config.rng(1)),
    }
}

/// Seeds `num_seeds` positives, then spreads round by round: each negative
/// node adjacent to a node that was positive at the start of the round turns
/// positive when its draw falls below `prob`. Stops as soon as
/// `target_count` positives exist.
///
/// One uniform is drawn per node per round whatever its state, so a larger
/// `prob` with the same generator never yields fewer positives.
pub fn diffuse_labels(
    graph: &RoadGraph,
    num_seeds: usize,
    prob: f64,
    rounds: usize,
    target_count: usize,
    rng: &mut impl Rng,
) -> Result<LabelVector> {
    let n = graph.num_nodes();
    if num_seeds > n {
        return Err(Error::InvalidConfig(format!("{num_seeds} seeds for {n} nodes")));
    }
    let mut positive = vec![false; n];
    for i in rand::seq::index::sample(rng, n, num_seeds) {
        positive[i] = true;
    }
    let mut count = num_seeds;
    let mut draws = vec![0.0f64; n];
    'rounds: for _ in 0..rounds {
        if count >= target_count {
            break;
        }
        for d in draws.iter_mut() {
            *d = rng.random();
        }
        let start = positive.clone();
        for i in 0..n {
            if start[i] || draws[i] >= prob {
                continue;
            }
            if graph.neighbors(i).iter().any(|&j| start[j as usize]) {
                positive[i] = true;
                count += 1;
                if count >= target_count {
                    break 'rounds;
                }
            }
        }
    }
    Ok(positive
        .into_iter()
        .map(|p| if p { Label::Positive } else { Label::Negative })
        .collect())
}

fn target_count(config: &SynthConfig, n: usize) -> usize {
    ((config.target_positive_ratio * n as f64).round() as usize).max(1)
}

/// Plants labels per `config.labeling`; diffusion results must land within
/// ±20% (relative) of the target ratio.
pub fn plant_labels(graph: &RoadGraph, config: &SynthConfig, rng: &mut impl Rng) -> Result<LabelVector> {
    config.check()?;
    let n = graph.num_nodes();
    match config.labeling {
        Labeling::Independent => Ok((0..n)
            .map(|_| {
                if rng.random::<f64>() < config.target_positive_ratio {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect()),
        Labeling::Diffusion => {
            let labels = diffuse_labels(
                graph,
                config.num_seeds,
                config.diffusion_prob,
                config.diffusion_rounds,
                target_count(config, n),
                rng,
            )?;
            let achieved = labels.count(Label::Positive) as f64 / n as f64;
            let target = config.target_positive_ratio;
            if (achieved - target).abs() > 0.2 * target + 1e-12 {
                return Err(Error::UnreachableRatio { target, achieved });
            }
            Ok(labels)
        }
    }
}

/// Standard-normal features; positive nodes get `feature_signal ·
/// SIGNAL_SHIFT` added on the first `max(1, feature_dim / 2)` coordinates.
pub fn generate_features(
    graph: &RoadGraph,
    labels: &LabelVector,
    config: &SynthConfig,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    labels.ensure_len(graph.num_nodes())?;
    let dim = config.feature_dim;
    let signal_cols = (dim / 2).max(1).min(dim);
    let shift = config.feature_signal * SIGNAL_SHIFT;
    let mut x = Array2::<f64>::zeros((graph.num_nodes(), dim));
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        let pos = labels.get(i).is_positive();
        for (c, v) in row.iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(rng);
            *v = noise + if pos && c < signal_cols { shift } else { 0.0 };
        }
    }
    Ok(x)
}

/// One generated dataset.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub graph: RoadGraph,
    pub labels: LabelVector,
    pub config: SynthConfig,
}

/// Topology, labels and features from independent streams of `config.seed`.
pub fn generate_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    let skeleton = generate_topology(config)?;
    let labels = plant_labels(&skeleton, config, &mut config.rng(2))?;
    let x = generate_features(&skeleton, &labels, config, &mut config.rng(3))?;
    Ok(SynthDataset {
        graph: skeleton.with_node_features(x)?,
        labels,
        config: *config,
    })
}

/// Per-dataset configs of a suite: node count, ratio, seed count and
/// diffusion probability jittered around `template`.
pub fn suite_configs(num_datasets: usize, template: &SynthConfig, seed: u64) -> Vec<SynthConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_datasets)
        .map(|_| {
            let scale = rng.random_range(0.8..=1.2);
            let (lo, hi) = RATIO_RANGE;
            let ratio = (template.target_positive_ratio * rng.random_range(0.8..=1.2)).clamp(lo, hi);
            let prob = (template.diffusion_prob * rng.random_range(0.8..=1.2)).clamp(0.0, 1.0);
            let num_nodes = ((template.num_nodes as f64 * scale).round() as usize).max(4);
            let num_seeds = ((template.num_seeds as f64 * scale).round() as usize).max(1);
            SynthConfig {
                num_nodes,
                num_seeds,
                diffusion_prob: prob,
                target_positive_ratio: ratio,
                seed: rng.random(),
                ..*template
            }
        })
        .collect()
}

/// `num_datasets` independent datasets, generated in parallel.
pub fn generate_suite(num_datasets: usize, template: &SynthConfig, seed: u64) -> Result<Vec<SynthDataset>> {
    suite_configs(num_datasets, template, seed)
        .par_iter()
        .map(generate_dataset)
        .collect()
}
