//! Independent reference implementations used by the integration and
//! acceptance tests. Everything here is deliberately naive: dense matrices,
//! full BFS from every node, finite differences.
#![allow(dead_code)]

use std::collections::VecDeque;

use cpgraph::gnn::{loss_and_grads, tokenize_labels, CpGcnModel, GraphInputs, TokenVector};
use cpgraph::graph::NodeId;
use cpgraph::{Label, LabelVector, RoadGraph, Split};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HOPS: [usize; 5] = [1, 2, 4, 8, 10];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style graph with `n` nodes and roughly `avg_degree` average
/// degree, including some isolated nodes for sparse draws.
pub fn random_graph(rng: &mut impl Rng, n: usize, avg_degree: f64, feature_dim: usize) -> RoadGraph {
    let p = if n > 1 { (avg_degree / (n - 1) as f64).min(1.0) } else { 0.0 };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i as NodeId, j as NodeId));
            }
        }
    }
    let x = Array2::from_shape_simple_fn((n, feature_dim), || rng.random_range(-1.0..1.0));
    RoadGraph::from_edge_list(n, &edges, x, None).unwrap().0
}

pub fn random_labels(rng: &mut impl Rng, n: usize, positive_rate: f64) -> LabelVector {
    (0..n)
        .map(|_| if rng.random::<f64>() < positive_rate { Label::Positive } else { Label::Negative })
        .collect()
}

/// Hop distance from `src` to every node (`usize::MAX` when unreachable).
pub fn bfs_distances(graph: &RoadGraph, src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.num_nodes()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            let v = v as usize;
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Per-node `(positives, reach)` within `k` hops, excluding the node itself.
pub fn oracle_counts(graph: &RoadGraph, labels: &LabelVector, k: usize) -> Vec<(usize, usize)> {
    (0..graph.num_nodes())
        .map(|i| {
            let dist = bfs_distances(graph, i);
            let mut pos = 0;
            let mut reach = 0;
            for (j, &d) in dist.iter().enumerate() {
                if j != i && d <= k {
                    reach += 1;
                    pos += labels.get(j).is_positive() as usize;
                }
            }
            (pos, reach)
        })
        .collect()
}

/// Oracle class averages: `(ancd, ancc, counted, excluded)`, `None` when
/// no node of class `z` has a neighbor within `k` hops.
pub fn oracle_average(
    graph: &RoadGraph,
    labels: &LabelVector,
    z: u8,
    k: usize,
) -> (Option<(f64, f64)>, usize, usize) {
    let want = Label::from_class(z).unwrap();
    let counts = oracle_counts(graph, labels, k);
    let mut ncd_terms = Vec::new();
    let mut ncc_hits = 0;
    let mut excluded = 0;
    for (i, &(pos, reach)) in counts.iter().enumerate() {
        if labels.get(i) != want {
            continue;
        }
        if reach == 0 {
            excluded += 1;
            continue;
        }
        ncd_terms.push(pos as f64 / reach as f64);
        ncc_hits += (pos > 0) as usize;
    }
    let counted = ncd_terms.len();
    let avg = (counted > 0).then(|| {
        // sorted summation: a different order from the library
        ncd_terms.sort_by(f64::total_cmp);
        let s: f64 = ncd_terms.iter().sum();
        (s / counted as f64, ncc_hits as f64 / counted as f64)
    });
    (avg, counted, excluded)
}

/// Dense `D^-1/2 (A + I) D^-1/2`.
pub fn dense_normalized_adjacency(graph: &RoadGraph) -> Array2<f64> {
    let n = graph.num_nodes();
    let mut a = Array2::<f64>::eye(n);
    for e in graph.edges() {
        let (u, v) = (e[0] as usize, e[1] as usize);
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] /= (deg[i] * deg[j]).sqrt();
        }
    }
    a
}

/// Dense forward pass written with explicit loops.
pub fn dense_forward(model: &CpGcnModel, graph: &RoadGraph, tokens: Option<&TokenVector>) -> Array2<f64> {
    let a = dense_normalized_adjacency(graph);
    let x = graph.node_features();
    let (n, d1) = x.dim();
    let d = model.b1.len();
    let c = model.b2.len();
    let mut ax = Array2::<f64>::zeros((n, d1));
    for i in 0..n {
        for j in 0..n {
            for f in 0..d1 {
                ax[[i, f]] += a[[i, j]] * x[[j, f]];
            }
        }
    }
    let mut h = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for o in 0..d {
            let mut s = model.b1[o];
            for f in 0..d1 {
                s += ax[[i, f]] * model.w1[[f, o]];
            }
            h[[i, o]] = s.max(0.0);
            if let (Some(t), Some(tok)) = (&model.token_table, tokens) {
                h[[i, o]] += t[[tok.0[i], o]];
            }
        }
    }
    let mut hw = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        for o in 0..c {
            for f in 0..d {
                hw[[i, o]] += h[[i, f]] * model.w2[[f, o]];
            }
        }
    }
    let mut out = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        for o in 0..c {
            let mut s = model.b2[o];
            for j in 0..n {
                s += a[[i, j]] * hw[[j, o]];
            }
            out[[i, o]] = s;
        }
        let m = out.row(i).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + out.row(i).iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        for o in 0..c {
            out[[i, o]] -= lse;
        }
    }
    out
}

/// A small random training problem for gradient and forward checks.
pub struct Instance {
    pub graph: RoadGraph,
    pub labels: LabelVector,
    pub split: Split,
    pub model: CpGcnModel,
    pub tokens: Option<TokenVector>,
}

pub fn random_instance(seed: u64, n: usize, use_cp: bool) -> Instance {
    let mut r = rng(seed);
    let graph = random_graph(&mut r, n, 3.0, 4);
    let labels = random_labels(&mut r, n, 0.4);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut r);
    let n_train = n / 2;
    let split = Split::new(
        ids[..n_train].to_vec(),
        ids[n_train..n_train + n / 4].to_vec(),
        ids[n_train + n / 4..].to_vec(),
    );
    let mut model = CpGcnModel::init(4, 5, 2, use_cp, &mut r);
    model.b1 = Array1::from_shape_simple_fn(5, || r.random_range(-0.5..0.5));
    model.b2 = Array1::from_shape_simple_fn(2, || r.random_range(-0.5..0.5));
    let tokens = use_cp.then(|| {
        let mask: Vec<usize> = (0..n).filter(|_| r.random::<f64>() < 0.25).collect();
        tokenize_labels(&labels, &split, &mask).unwrap()
    });
    Instance { graph, labels, split, model, tokens }
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter, with `|a - n| / max(|a|, |n|, floor)`.
pub fn max_gradient_error(inst: &Instance, eps: f64, floor: f64) -> (f64, String) {
    let inputs = GraphInputs::new(&inst.graph);
    let tokens = inst.tokens.as_ref();
    let (_, analytic) =
        loss_and_grads(&inst.model, &inputs, tokens, &inst.labels, &inst.split.train).unwrap();
    let loss_at = |m: &CpGcnModel| loss_and_grads(m, &inputs, tokens, &inst.labels, &inst.split.train).unwrap().0;

    let mut worst = (0.0f64, String::new());
    let names: Vec<(&'static str, usize)> = inst.model.tensors().iter().map(|(n, t)| (*n, t.len())).collect();
    let grads: Vec<Vec<f64>> = analytic.tensors().iter().map(|(_, g)| g.to_vec()).collect();
    for (t, (name, len)) in names.iter().enumerate() {
        for (idx, &a) in grads[t].iter().enumerate().take(*len) {
            let mut plus = inst.model.clone();
            plus.tensors_mut()[t].1[idx] += eps;
            let mut minus = inst.model.clone();
            minus.tensors_mut()[t].1[idx] -= eps;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{idx}]: analytic {a:e}, numeric {numeric:e}"));
            }
        }
    }
    worst
}

/// Smallest |pre-activation| of the first layer, used to skip instances
/// that sit too close to a ReLU kink for finite differences.
pub fn min_kink_distance(inst: &Instance) -> f64 {
    let inputs = GraphInputs::new(&inst.graph);
    let cache = cpgraph::gnn::forward(&inst.model, &inputs, inst.tokens.as_ref()).unwrap();
    cache.pre_activation.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

/// Applies the permutation `perm` (old id -> new id) to graph and labels.
pub fn permute(graph: &RoadGraph, labels: &LabelVector, perm: &[usize]) -> (RoadGraph, LabelVector) {
    let n = graph.num_nodes();
    let edges: Vec<(NodeId, NodeId)> = graph
        .edges()
        .iter()
        .map(|e| (perm[e[0] as usize] as NodeId, perm[e[1] as usize] as NodeId))
        .collect();
    let x = graph.node_features();
    let mut px = Array2::zeros(x.dim());
    let mut py = vec![Label::Unknown; n];
    for old in 0..n {
        px.row_mut(perm[old]).assign(&x.row(old));
        py[perm[old]] = labels.get(old);
    }
    (
        RoadGraph::from_edge_list(n, &edges, px, None).unwrap().0,
        LabelVector::new(py),
    )
}
