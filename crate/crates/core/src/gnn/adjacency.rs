use ndarray::Array2;

use crate::graph::RoadGraph;

/// Square sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// `self · x` for a dense `n x m` matrix.
    pub fn matmul(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "sparse-dense shape mismatch");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for (i, mut dst) in out.rows_mut().into_iter().enumerate() {
            for (j, v) in self.row(i) {
                dst.scaled_add(v, &x.row(j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }
}

/// Symmetric GCN propagation matrix `D^{-1/2} (A + I) D^{-1/2}`, where `D`
/// is the degree matrix of `A + I`.
pub fn normalize_adjacency(graph: &RoadGraph) -> SparseMatrix {
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / ((graph.degree(i) + 1) as f64).sqrt())
        .collect();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(graph.neighbor_ids().len() + n);
    let mut values = Vec::with_capacity(graph.neighbor_ids().len() + n);
    indptr.push(0);
    for i in 0..n {
        let row = graph.neighbors(i);
        let split = row.partition_point(|&j| (j as usize) < i);
        let entries = row[..split]
            .iter()
            .copied()
            .chain(std::iter::once(i as u32))
            .chain(row[split..].iter().copied());
        for j in entries {
            indices.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j as usize]);
        }
        indptr.push(indices.len());
    }
    SparseMatrix {
        n,
        indptr,
        indices,
        values,
    }
}
