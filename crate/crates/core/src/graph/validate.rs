use std::fmt;

use super::RoadGraph;

/// One broken [`RoadGraph`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OffsetsLength { expected: usize, found: usize },
    OffsetsStart(usize),
    NonMonotoneOffsets { node: usize },
    OffsetsEnd { expected: usize, found: usize },
    NeighborOutOfRange { node: usize, neighbor: usize },
    SelfLoop { node: usize },
    DuplicateNeighbor { node: usize, neighbor: usize },
    UnsortedNeighbors { node: usize },
    Asymmetric { node: usize, neighbor: usize },
    EdgeListMismatch(String),
    EdgeFeatureRows { expected: usize, found: usize },
    NonFiniteFeature { matrix: &'static str, row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OffsetsLength { expected, found } => {
                write!(f, "offsets length {found}, expected {expected}")
            }
            Violation::OffsetsStart(v) => write!(f, "offsets[0] = {v}, expected 0"),
            Violation::NonMonotoneOffsets { node } => {
                write!(f, "non-monotone offsets at node {node}")
            }
            Violation::OffsetsEnd { expected, found } => {
                write!(f, "offsets end at {found}, expected 2E = {expected}")
            }
            Violation::NeighborOutOfRange { node, neighbor } => {
                write!(f, "node {node} lists out-of-range neighbor {neighbor}")
            }
            Violation::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Violation::DuplicateNeighbor { node, neighbor } => {
                write!(f, "duplicate neighbor {neighbor} in row {node}")
            }
            Violation::UnsortedNeighbors { node } => {
                write!(f, "neighbor row {node} not ascending")
            }
            Violation::Asymmetric { node, neighbor } => {
                write!(f, "edge {node}->{neighbor} missing its reverse")
            }
            Violation::EdgeListMismatch(msg) => write!(f, "edge list mismatch: {msg}"),
            Violation::EdgeFeatureRows { expected, found } => {
                write!(f, "edge features have {found} rows, expected {expected}")
            }
            Violation::NonFiniteFeature { matrix, row, col } => {
                write!(f, "non-finite {matrix} feature at ({row}, {col})")
            }
        }
    }
}

/// Result of [`validate`]: empty means the graph is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural and numeric invariant of `graph` without mutating it.
pub fn validate(graph: &RoadGraph) -> ValidationReport {
    let mut out = Vec::new();
    let n = graph.num_nodes();
    let offsets = graph.offsets();
    let nbrs = graph.neighbor_ids();

    if offsets.len() != n + 1 {
        out.push(Violation::OffsetsLength {
            expected: n + 1,
            found: offsets.len(),
        });
        // rows cannot be sliced safely
        return ValidationReport { violations: out };
    }
    if offsets[0] != 0 {
        out.push(Violation::OffsetsStart(offsets[0]));
    }
    let mut monotone = true;
    for i in 0..n {
        if offsets[i + 1] < offsets[i] {
            out.push(Violation::NonMonotoneOffsets { node: i });
            monotone = false;
        }
    }
    let expected_end = 2 * graph.num_edges();
    if offsets[n] != expected_end {
        out.push(Violation::OffsetsEnd {
            expected: expected_end,
            found: offsets[n],
        });
    }
    if !monotone || offsets[n] > nbrs.len() || offsets[0] > offsets[n] {
        return ValidationReport { violations: out };
    }

    let row = |i: usize| &nbrs[offsets[i]..offsets[i + 1]];
    for i in 0..n {
        let r = row(i);
        for (pos, &j) in r.iter().enumerate() {
            let j = j as usize;
            if j >= n {
                out.push(Violation::NeighborOutOfRange { node: i, neighbor: j });
                continue;
            }
            if j == i {
                out.push(Violation::SelfLoop { node: i });
            }
            if pos > 0 {
                let prev = r[pos - 1] as usize;
                if prev == j {
                    out.push(Violation::DuplicateNeighbor { node: i, neighbor: j });
                } else if prev > j {
                    out.push(Violation::UnsortedNeighbors { node: i });
                }
            }
            if !row(j).contains(&(i as u32)) {
                out.push(Violation::Asymmetric { node: i, neighbor: j });
            }
        }
    }

    let edges = graph.edges();
    for (e, &[u, v]) in edges.iter().enumerate() {
        let (u, v) = (u as usize, v as usize);
        if u >= v || v >= n {
            out.push(Violation::EdgeListMismatch(format!(
                "edge {e} = ({u}, {v}) is not canonical"
            )));
        } else if !row(u).contains(&(v as u32)) {
            out.push(Violation::EdgeListMismatch(format!(
                "edge {e} = ({u}, {v}) absent from adjacency"
            )));
        }
        if e > 0 && edges[e - 1] >= edges[e] {
            out.push(Violation::EdgeListMismatch(format!(
                "edge {e} out of order or duplicated"
            )));
        }
    }
    if graph.edge_features().nrows() != edges.len() {
        out.push(Violation::EdgeFeatureRows {
            expected: edges.len(),
            found: graph.edge_features().nrows(),
        });
    }

    for (matrix, m) in [
        ("node", graph.node_features()),
        ("edge", graph.edge_features()),
    ] {
        for ((row, col), v) in m.indexed_iter() {
            if !v.is_finite() {
                out.push(Violation::NonFiniteFeature { matrix, row, col });
            }
        }
    }

    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use ndarray::Array2;

    #[test]
    fn triangle_is_ok() {
        assert!(validate(&triangle()).is_ok());
    }

    #[test]
    fn non_monotone_offsets() {
        let g = RoadGraph::from_raw_parts(
            vec![0, 2, 1],
            vec![1, 0],
            vec![[0, 1]],
            Array2::zeros((2, 0)),
            Array2::zeros((1, 0)),
        );
        let report = validate(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| v.to_string().contains("non-monotone offsets")));
    }

    #[test]
    fn duplicate_neighbor() {
        // row 0 = [2, 2]
        let g = RoadGraph::from_raw_parts(
            vec![0, 2, 2, 4],
            vec![2, 2, 0, 0],
            vec![[0, 2], [0, 2]],
            Array2::zeros((3, 0)),
            Array2::zeros((2, 0)),
        );
        let report = validate(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| v.to_string().contains("duplicate neighbor")));
    }

    #[test]
    fn self_loop_and_asymmetry() {
        let g = RoadGraph::from_raw_parts(
            vec![0, 2, 2],
            vec![0, 1],
            vec![[0, 1]],
            Array2::zeros((2, 0)),
            Array2::zeros((1, 0)),
        );
        let report = validate(&g);
        assert!(report.violations.contains(&Violation::SelfLoop { node: 0 }));
        assert!(report
            .violations
            .contains(&Violation::Asymmetric { node: 0, neighbor: 1 }));
    }

    #[test]
    fn non_finite_feature() {
        let mut x = Array2::zeros((3, 2));
        x[[1, 1]] = f64::INFINITY;
        let g = triangle();
        let g = RoadGraph::from_raw_parts(
            g.offsets().to_vec(),
            g.neighbor_ids().to_vec(),
            g.edges().to_vec(),
            x,
            g.edge_features().clone(),
        );
        assert_eq!(
            validate(&g).violations,
            vec![Violation::NonFiniteFeature {
                matrix: "node",
                row: 1,
                col: 1
            }]
        );
    }
}
