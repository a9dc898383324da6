use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::adjacency::{normalize_adjacency, SparseMatrix};
use crate::error::{Error, Result};
use crate::graph::{Label, LabelVector, RoadGraph, Split};

/// Per-node label token: 0 is the uncertain token, `c + 1` encodes class `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenVector(pub Vec<usize>);

impl TokenVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Builds tokens from known train labels.
///
/// `token_i = 0` when `i` is outside `split.train` or inside `mask`,
/// otherwise `label_i + 1`.
pub fn tokenize_labels(labels: &LabelVector, split: &Split, mask: &[usize]) -> Result<TokenVector> {
    let n = labels.len();
    let mut tokens = vec![0usize; n];
    for &i in &split.train {
        if i >= n {
            return Err(Error::NodeOutOfRange { id: i, num_nodes: n });
        }
        tokens[i] = match labels.get(i) {
            Label::Unknown => return Err(Error::UnknownLabel(i)),
            l => l.class().expect("known") + 1,
        };
    }
    for &i in mask {
        if i >= n {
            return Err(Error::NodeOutOfRange { id: i, num_nodes: n });
        }
        tokens[i] = 0;
    }
    Ok(TokenVector(tokens))
}

/// Graph-side inputs shared by every forward pass on one graph.
#[derive(Debug, Clone)]
pub struct GraphInputs {
    pub adj: SparseMatrix,
    pub features: Array2<f64>,
    /// `Â X`, reused by the first layer and its weight gradient.
    agg_features: Array2<f64>,
}

impl GraphInputs {
    pub fn new(graph: &RoadGraph) -> Self {
        let adj = normalize_adjacency(graph);
        let features = graph.node_features().clone();
        let agg_features = adj.matmul(&features);
        GraphInputs {
            adj,
            features,
            agg_features,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }
}

/// Two-layer GCN: `H = ReLU(Â X W1 + b1)`, optionally `H += T[tokens]`,
/// then `Z = Â H W2 + b2` and row-wise log-softmax.
///
/// `token_table` is `(C + 1) x d` with row 0 the uncertain token; it is
/// `None` for the baseline network.
#[derive(Debug, Clone, PartialEq)]
pub struct CpGcnModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub token_table: Option<Array2<f64>>,
}

/// Gradient of the loss with respect to every [`CpGcnModel`] tensor.
pub type Gradients = CpGcnModel;

fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit))
}

impl CpGcnModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize, num_classes: usize, use_cp: bool) -> Self {
        CpGcnModel {
            w1: Array2::zeros((input_dim, hidden_dim)),
            b1: Array1::zeros(hidden_dim),
            w2: Array2::zeros((hidden_dim, num_classes)),
            b2: Array1::zeros(num_classes),
            token_table: use_cp.then(|| Array2::zeros((num_classes + 1, hidden_dim))),
        }
    }

    /// Glorot-uniform weights, zero biases and a token table uniform in
    /// `[-1/√d, 1/√d]`, drawn in that order.
    pub fn init(
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        use_cp: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let w1 = glorot(rng, input_dim, hidden_dim);
        let w2 = glorot(rng, hidden_dim, num_classes);
        let token_table = use_cp.then(|| {
            let r = 1.0 / (hidden_dim as f64).sqrt();
            Array2::from_shape_simple_fn((num_classes + 1, hidden_dim), || rng.random_range(-r..=r))
        });
        CpGcnModel {
            w1,
            b1: Array1::zeros(hidden_dim),
            w2,
            b2: Array1::zeros(num_classes),
            token_table,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn uses_cp(&self) -> bool {
        self.token_table.is_some()
    }

    pub fn num_params(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.token_table.as_ref().map_or(0, |t| t.len())
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = vec![
            ("w1", self.w1.as_slice().expect("standard layout")),
            ("b1", self.b1.as_slice().expect("standard layout")),
            ("w2", self.w2.as_slice().expect("standard layout")),
            ("b2", self.b2.as_slice().expect("standard layout")),
        ];
        if let Some(t) = &self.token_table {
            out.push(("token_table", t.as_slice().expect("standard layout")));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out = vec![
            ("w1", self.w1.as_slice_mut().expect("standard layout")),
            ("b1", self.b1.as_slice_mut().expect("standard layout")),
            ("w2", self.w2.as_slice_mut().expect("standard layout")),
            ("b2", self.b2.as_slice_mut().expect("standard layout")),
        ];
        if let Some(t) = &mut self.token_table {
            out.push(("token_table", t.as_slice_mut().expect("standard layout")));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    fn check(&self, inputs: &GraphInputs, tokens: Option<&TokenVector>) -> Result<()> {
        let d = self.hidden_dim();
        let c = self.num_classes();
        if inputs.features.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "features have {} columns, model expects {}",
                inputs.features.ncols(),
                self.input_dim()
            )));
        }
        if self.b1.len() != d || self.w2.nrows() != d || self.b2.len() != c {
            return Err(Error::ShapeMismatch("inconsistent layer shapes".into()));
        }
        if let Some(t) = &self.token_table {
            if t.dim() != (c + 1, d) {
                return Err(Error::ShapeMismatch(format!(
                    "token table {:?}, expected ({}, {d})",
                    t.dim(),
                    c + 1
                )));
            }
        }
        match (self.uses_cp(), tokens) {
            (true, Some(tok)) => {
                if tok.len() != inputs.num_nodes() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} tokens for {} nodes",
                        tok.len(),
                        inputs.num_nodes()
                    )));
                }
                if let Some(&bad) = tok.0.iter().find(|&&t| t > c) {
                    return Err(Error::ShapeMismatch(format!("token {bad} exceeds C = {c}")));
                }
                Ok(())
            }
            (false, None) => Ok(()),
            (model_cp, _) => Err(Error::FlagMismatch { model_cp }),
        }
    }
}

/// `(C + 1) · d`: parameters added by the label-token dictionary.
pub fn count_cp_params(num_classes: usize, hidden_dim: usize) -> usize {
    (num_classes + 1) * hidden_dim
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub pre_activation: Array2<f64>,
    /// Layer-1 output after the token addition.
    pub hidden: Array2<f64>,
    pub log_probs: Array2<f64>,
}

fn log_softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
}

/// Runs the network. `tokens` must be present exactly when the model
/// carries a token table.
pub fn forward(model: &CpGcnModel, inputs: &GraphInputs, tokens: Option<&TokenVector>) -> Result<ForwardCache> {
    model.check(inputs, tokens)?;
    let mut pre = inputs.agg_features.dot(&model.w1);
    pre += &model.b1;
    let mut hidden = pre.mapv(|v| v.max(0.0));
    if let (Some(table), Some(tok)) = (&model.token_table, tokens) {
        for (mut row, &t) in hidden.rows_mut().into_iter().zip(&tok.0) {
            row += &table.row(t);
        }
    }
    let mut z = inputs.adj.matmul(&hidden.dot(&model.w2));
    z += &model.b2;
    log_softmax_rows(&mut z);
    Ok(ForwardCache {
        pre_activation: pre,
        hidden,
        log_probs: z,
    })
}

/// Mean cross-entropy over `train_idx` and its exact gradient.
pub fn loss_and_grads(
    model: &CpGcnModel,
    inputs: &GraphInputs,
    tokens: Option<&TokenVector>,
    labels: &LabelVector,
    train_idx: &[usize],
) -> Result<(f64, Gradients)> {
    if train_idx.is_empty() {
        return Err(Error::EmptySet("train"));
    }
    labels.ensure_len(inputs.num_nodes())?;
    let cache = forward(model, inputs, tokens)?;
    let n = inputs.num_nodes();
    let c = model.num_classes();
    let scale = 1.0 / train_idx.len() as f64;

    let mut loss = 0.0;
    let mut dz = Array2::<f64>::zeros((n, c));
    for &i in train_idx {
        if i >= n {
            return Err(Error::NodeOutOfRange { id: i, num_nodes: n });
        }
        let y = labels.get(i).class().ok_or(Error::UnknownLabel(i))?;
        if y >= c {
            return Err(Error::ShapeMismatch(format!("class {y} with C = {c}")));
        }
        let lp = cache.log_probs.row(i);
        loss -= lp[y];
        let mut g = dz.row_mut(i);
        for k in 0..c {
            g[k] += lp[k].exp() * scale;
        }
        g[y] -= scale;
    }
    loss *= scale;

    let db2 = dz.sum_axis(Axis(0));
    // Â is symmetric, so Âᵀ dZ = Â dZ
    let d_hw = inputs.adj.matmul(&dz);
    let dw2 = cache.hidden.t().dot(&d_hw);
    let d_hidden = d_hw.dot(&model.w2.t());

    let d_table = match (&model.token_table, tokens) {
        (Some(table), Some(tok)) => {
            let mut dt = Array2::zeros(table.dim());
            for (row, &t) in d_hidden.rows().into_iter().zip(&tok.0) {
                let mut dst = dt.row_mut(t);
                dst += &row;
            }
            Some(dt)
        }
        _ => None,
    };

    let mut d_pre = d_hidden;
    ndarray::Zip::from(&mut d_pre)
        .and(&cache.pre_activation)
        .for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
    let db1 = d_pre.sum_axis(Axis(0));
    let dw1 = inputs.agg_features.t().dot(&d_pre);

    Ok((
        loss,
        CpGcnModel {
            w1: dw1,
            b1: db1,
            w2: dw2,
            b2: db2,
            token_table: d_table,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inputs_with_features(g: RoadGraph, d1: usize, seed: u64) -> GraphInputs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((g.num_nodes(), d1), || rng.random_range(-1.0..1.0));
        GraphInputs::new(&g.with_node_features(x).unwrap())
    }

    #[test]
    fn tokenization() {
        let labels = LabelVector::new(vec![Label::Negative, Label::Positive, Label::Unknown]);
        let split = Split::new(vec![0, 1], vec![], vec![2]);
        assert_eq!(tokenize_labels(&labels, &split, &[]).unwrap().0, vec![1, 2, 0]);
        assert_eq!(tokenize_labels(&labels, &split, &[0]).unwrap().0, vec![0, 2, 0]);
        let none = Split::new(vec![], vec![0, 1], vec![2]);
        assert_eq!(tokenize_labels(&labels, &none, &[]).unwrap().0, vec![0, 0, 0]);
        let bad = Split::new(vec![2], vec![0], vec![1]);
        assert!(matches!(tokenize_labels(&labels, &bad, &[]), Err(Error::UnknownLabel(2))));
    }

    #[test]
    fn zero_weights_give_uniform_rows() {
        let inputs = inputs_with_features(path(4), 3, 1);
        let base = CpGcnModel::zeros(3, 4, 2, false);
        let out = forward(&base, &inputs, None).unwrap();
        assert!(out.log_probs.iter().all(|&v| (v - 0.5f64.ln()).abs() < 1e-15));

        let mut cp = CpGcnModel::zeros(3, 4, 2, true);
        cp.token_table.as_mut().unwrap().fill(0.7);
        let tok = TokenVector(vec![0, 1, 2, 1]);
        let out = forward(&cp, &inputs, Some(&tok)).unwrap();
        assert!(out.log_probs.iter().all(|&v| (v - 0.5f64.ln()).abs() < 1e-15));

        let y = LabelVector::from_classes(&[0, 1, 1, 0]);
        let (loss, _) = loss_and_grads(&base, &inputs, None, &y, &[0, 1, 2]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn flag_and_shape_errors() {
        let inputs = inputs_with_features(path(3), 2, 2);
        let base = CpGcnModel::zeros(2, 4, 2, false);
        let cp = CpGcnModel::zeros(2, 4, 2, true);
        let tok = TokenVector(vec![0, 1, 2]);
        assert!(matches!(forward(&base, &inputs, Some(&tok)), Err(Error::FlagMismatch { model_cp: false })));
        assert!(matches!(forward(&cp, &inputs, None), Err(Error::FlagMismatch { model_cp: true })));
        assert!(matches!(
            forward(&cp, &inputs, Some(&TokenVector(vec![0, 3, 1]))),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            forward(&CpGcnModel::zeros(5, 4, 2, false), &inputs, None),
            Err(Error::ShapeMismatch(_))
        ));
        let y = LabelVector::from_classes(&[0, 1, 1]);
        assert!(matches!(loss_and_grads(&base, &inputs, None, &y, &[]), Err(Error::EmptySet("train"))));
    }

    #[test]
    fn rows_normalized() {
        let inputs = inputs_with_features(path(6), 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = CpGcnModel::init(3, 8, 2, true, &mut rng);
        let tok = TokenVector(vec![0, 1, 2, 0, 1, 2]);
        let out = forward(&m, &inputs, Some(&tok)).unwrap();
        for row in out.log_probs.rows() {
            assert!((row.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_token_table_matches_baseline() {
        let inputs = inputs_with_features(path(5), 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = CpGcnModel::init(3, 6, 2, false, &mut rng);
        let mut cp = base.clone();
        cp.token_table = Some(Array2::zeros((3, 6)));
        let a = forward(&base, &inputs, None).unwrap().log_probs;
        let b = forward(&cp, &inputs, Some(&TokenVector(vec![2, 1, 0, 1, 2]))).unwrap().log_probs;
        assert_eq!(a, b);
    }

    #[test]
    fn unused_token_has_zero_gradient() {
        let inputs = inputs_with_features(path(5), 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = CpGcnModel::init(3, 6, 2, true, &mut rng);
        let y = LabelVector::from_classes(&[0, 1, 1, 0, 1]);
        let tok = TokenVector(vec![1, 2, 2, 1, 2]);
        let (_, g) = loss_and_grads(&m, &inputs, Some(&tok), &y, &[0, 1, 2]).unwrap();
        let t = g.token_table.unwrap();
        assert!(t.row(0).iter().all(|&v| v == 0.0));
        assert!(t.row(2).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn cp_param_delta() {
        assert_eq!(count_cp_params(2, 16), 48);
        assert_eq!(count_cp_params(2, 1), 3);
        for d in [1, 8, 16, 64] {
            let base = CpGcnModel::zeros(5, d, 2, false);
            let cp = CpGcnModel::zeros(5, d, 2, true);
            assert_eq!(cp.num_params() - base.num_params(), count_cp_params(2, d));
        }
    }
}
