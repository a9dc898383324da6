//! CSV and JSON file formats.
//!
//! `nodes.csv`: `node_id,f_0,...,f_{D1-1},label` with label in `{0,1,?}` and
//! node ids covering `0..N` exactly once.
//! `edges.csv`: `src,dst,g_0,...,g_{D2-1}`.
//! `splits.json`: `{"train": [...], "valid": [...], "test": [...]}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::{BuildStats, Label, LabelVector, NodeId, RoadGraph, Split};
use crate::error::{Error, Result};

/// A graph together with its labels and the load-time cleanup counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: RoadGraph,
    pub labels: LabelVector,
    pub stats: BuildStats,
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            what: format!("{}:{line}: value {field:?}", path.display()),
        });
    }
    Ok(v)
}

fn parse_id(path: &Path, line: u64, field: &str) -> Result<u64> {
    field
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid node id {field:?}")))
}

/// Loads `nodes.csv` and `edges.csv` into a validated graph plus labels.
///
/// Directed edges are symmetrized, duplicates collapsed and self-loops
/// dropped; the counts are returned in [`Dataset::stats`].
pub fn load_graph(nodes_path: impl AsRef<Path>, edges_path: impl AsRef<Path>) -> Result<Dataset> {
    let nodes_path = nodes_path.as_ref();
    let edges_path = edges_path.as_ref();

    let mut rdr = reader(nodes_path)?;
    let header = rdr.headers().map_err(|e| csv_err(nodes_path, e))?.clone();
    if header.len() < 2
        || header.get(0) != Some("node_id")
        || header.get(header.len() - 1) != Some("label")
    {
        return Err(parse_err(
            nodes_path,
            1,
            "header must be node_id,f_0,...,label",
        ));
    }
    let d1 = header.len() - 2;

    let mut rows: Vec<(u64, u64, Vec<f64>, Label)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(nodes_path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = parse_id(nodes_path, line, &rec[0])?;
        let feats = (1..=d1)
            .map(|c| parse_f64(nodes_path, line, &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        let label = Label::parse(&rec[d1 + 1])
            .ok_or_else(|| parse_err(nodes_path, line, format!("invalid label {:?}", &rec[d1 + 1])))?;
        rows.push((line, id, feats, label));
    }

    let n = rows.len();
    let mut x = Array2::zeros((n, d1));
    let mut labels = vec![Label::Unknown; n];
    let mut seen = vec![false; n];
    for (line, id, feats, label) in rows {
        let i = id as usize;
        if i >= n {
            return Err(parse_err(
                nodes_path,
                line,
                format!("node id {id} outside contiguous range 0..{n}"),
            ));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(parse_err(nodes_path, line, format!("node id {id} repeated")));
        }
        for (c, v) in feats.into_iter().enumerate() {
            x[[i, c]] = v;
        }
        labels[i] = label;
    }

    let mut rdr = reader(edges_path)?;
    let header = rdr.headers().map_err(|e| csv_err(edges_path, e))?.clone();
    if header.len() < 2 || header.get(0) != Some("src") || header.get(1) != Some("dst") {
        return Err(parse_err(edges_path, 1, "header must be src,dst,g_0,..."));
    }
    let d2 = header.len() - 2;
    let mut edge_list: Vec<(NodeId, NodeId)> = Vec::new();
    let mut edge_feats: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(edges_path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut ends = [0 as NodeId; 2];
        for (slot, end) in ends.iter_mut().enumerate() {
            let id = parse_id(edges_path, line, &rec[slot])?;
            if id >= n as u64 {
                return Err(Error::DanglingNode {
                    path: edges_path.to_path_buf(),
                    line,
                    id,
                    num_nodes: n,
                });
            }
            *end = id as NodeId;
        }
        edge_list.push((ends[0], ends[1]));
        for c in 0..d2 {
            edge_feats.push(parse_f64(edges_path, line, &rec[c + 2])?);
        }
    }
    let ef = Array2::from_shape_vec((edge_list.len(), d2), edge_feats)
        .expect("edge feature buffer sized by construction");

    let (graph, stats) = RoadGraph::from_edge_list(n, &edge_list, x, Some(ef))?;
    Ok(Dataset {
        graph,
        labels: LabelVector::new(labels),
        stats,
    })
}

/// Writes `graph` and `labels` in the format read by [`load_graph`].
pub fn save_dataset(
    graph: &RoadGraph,
    labels: &LabelVector,
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<()> {
    labels.ensure_len(graph.num_nodes())?;

    let mut w = BufWriter::new(File::create(nodes_path)?);
    write!(w, "node_id")?;
    for c in 0..graph.node_feature_dim() {
        write!(w, ",f_{c}")?;
    }
    writeln!(w, ",label")?;
    for (i, row) in graph.node_features().rows().into_iter().enumerate() {
        write!(w, "{i}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", labels.get(i))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(edges_path)?);
    write!(w, "src,dst")?;
    for c in 0..graph.edge_feature_dim() {
        write!(w, ",g_{c}")?;
    }
    writeln!(w)?;
    for (e, &[u, v]) in graph.edges().iter().enumerate() {
        write!(w, "{u},{v}")?;
        for x in graph.edge_features().row(e) {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience wrapper over [`load_graph`] for a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    load_graph(dir.join("nodes.csv"), dir.join("edges.csv"))
}

pub fn read_split(path: impl AsRef<Path>) -> Result<Split> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_split(split: &Split, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, split)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_pair(dir: &Path, nodes: &str, edges: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let np = dir.join("nodes.csv");
        let ep = dir.join("edges.csv");
        fs::write(&np, nodes).unwrap();
        fs::write(&ep, edges).unwrap();
        (np, ep)
    }

    #[test]
    fn loads_minimal_graph() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(
            dir.path(),
            "node_id,f_0,label\n0,1.5,1\n1,-2,?\n",
            "src,dst\n0,1\n",
        );
        let ds = load_graph(&np, &ep).unwrap();
        assert_eq!(ds.graph.offsets(), &[0, 1, 2]);
        assert_eq!(ds.graph.neighbor_ids(), &[1, 0]);
        assert_eq!(ds.labels.as_slice(), &[Label::Positive, Label::Unknown]);
        assert_eq!(ds.graph.node_features()[[1, 0]], -2.0);
    }

    #[test]
    fn dangling_node_id() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(
            dir.path(),
            "node_id,label\n0,0\n1,0\n2,1\n",
            "src,dst\n0,1\n1,5\n",
        );
        let err = load_graph(&np, &ep).unwrap_err();
        assert!(matches!(err, Error::DanglingNode { id: 5, line: 3, .. }), "{err}");
        assert!(err.to_string().contains("dangling node id"));
    }

    #[test]
    fn duplicate_edge_collapses() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(
            dir.path(),
            "node_id,label\n0,0\n1,1\n",
            "src,dst,g_0\n0,1,3.0\n1,0,4.0\n",
        );
        let ds = load_graph(&np, &ep).unwrap();
        assert_eq!(ds.graph.num_edges(), 1);
        assert_eq!(ds.stats.warnings(), 1);
        assert_eq!(ds.graph.edge_features()[[0, 0]], 3.0);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(
            dir.path(),
            "node_id,f_0,label\n0,1.0,0\n1,abc,1\n",
            "src,dst\n",
        );
        match load_graph(&np, &ep).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let (np, ep) = write_pair(dir.path(), "node_id,f_0,label\n0,1.0\n", "src,dst\n");
        assert!(matches!(load_graph(&np, &ep), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn non_finite_and_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(dir.path(), "node_id,f_0,label\n0,NaN,0\n", "src,dst\n");
        assert!(matches!(load_graph(&np, &ep), Err(Error::NonFinite { .. })));
        let (np, ep) = write_pair(dir.path(), "node_id,f_0,label\n0,1,2\n", "src,dst\n");
        assert!(matches!(load_graph(&np, &ep), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_contiguous_ids() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = write_pair(dir.path(), "node_id,label\n0,0\n2,0\n", "src,dst\n");
        assert!(matches!(load_graph(&np, &ep), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn split_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let split = Split::new(vec![0, 3], vec![1], vec![2]);
        let p = dir.path().join("splits.json");
        write_split(&split, &p).unwrap();
        assert_eq!(read_split(&p).unwrap(), split);
    }
}
