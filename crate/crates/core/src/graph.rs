//! Static undirected graph, node data, splits, and the diffusion operator.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::table::PredictionTable;

/// Undirected simple graph over node ids `0..n`.
///
/// Neighbor lists are sorted and deduplicated; self-loops are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    n_edges: usize,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n_nodes],
            n_edges: 0,
        }
    }

    /// Builds a graph from (possibly directed, possibly repeated) edge pairs.
    /// Each pair is symmetrized.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) has an endpoint outside [0, {n_nodes})"
                )));
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut directed = 0;
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
            directed += nbrs.len();
        }
        Ok(Graph {
            adjacency,
            n_edges: directed / 2,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|n| n.binary_search(&v).is_ok())
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn degree_view(&self) -> DegreeView {
        DegreeView {
            degree: self
                .adjacency
                .iter()
                .map(|n| n.len().max(1) as f64)
                .collect(),
        }
    }
}

/// Node degrees with zero-degree nodes clamped to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeView {
    pub degree: Vec<f64>,
}

/// A set of node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSet(BTreeSet<usize>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(BTreeSet::new())
    }

    pub fn contains(&self, u: usize) -> bool {
        self.0.contains(&u)
    }

    pub fn insert(&mut self, u: usize) -> bool {
        self.0.insert(u)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Membership bitmap over `0..n`; ids `>= n` are ignored.
    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for u in self.iter().filter(|&u| u < n) {
            mask[u] = true;
        }
        mask
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

/// Dense node features and optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    n_features: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<Option<usize>>,
}

impl NodeData {
    pub fn new(
        n_features: usize,
        n_classes: usize,
        features: Vec<f64>,
        labels: Vec<Option<usize>>,
    ) -> Result<Self> {
        if features.len() != labels.len() * n_features {
            return Err(Error::dim(
                labels.len() * n_features,
                features.len(),
                "feature matrix size",
            ));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= n_classes) {
            return Err(Error::Validation(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(NodeData {
            n_features,
            n_classes,
            features,
            labels,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, u: usize) -> &[f64] {
        &self.features[u * self.n_features..(u + 1) * self.n_features]
    }

    pub fn label(&self, u: usize) -> Option<usize> {
        self.labels[u]
    }

    /// One-hot row, all zeros when the label is unknown.
    pub fn label_row(&self, u: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_classes];
        if let Some(c) = self.labels[u] {
            row[c] = 1.0;
        }
        row
    }

    /// One-hot rows for the nodes in `known` (zeros elsewhere), or for every
    /// labeled node when `known` is `None`.
    pub fn label_table(&self, known: Option<&NodeSet>) -> PredictionTable {
        let mut t = PredictionTable::zeros(self.n_nodes(), self.n_classes);
        for u in 0..self.n_nodes() {
            if known.map_or(true, |k| k.contains(u)) {
                if let Some(c) = self.labels[u] {
                    t.row_mut(u)[c] = 1.0;
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: NodeSet,
    pub valid: NodeSet,
    pub test: NodeSet,
}

impl Splits {
    pub fn validate(&self, data: &NodeData) -> Result<()> {
        let pairs = [
            ("train", &self.train, "valid", &self.valid),
            ("train", &self.train, "test", &self.test),
            ("valid", &self.valid, "test", &self.test),
        ];
        for (a, sa, b, sb) in pairs {
            if !sa.is_disjoint(sb) {
                return Err(Error::Validation(format!("{a} and {b} splits overlap")));
            }
        }
        let n = data.n_nodes();
        for (name, set) in [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
        ] {
            if let Some(u) = set.max().filter(|&u| u >= n) {
                return Err(Error::Validation(format!(
                    "{name} split references node {u} but there are only {n} nodes"
                )));
            }
        }
        for (name, set) in [("train", &self.train), ("valid", &self.valid)] {
            if let Some(u) = set.iter().find(|&u| data.label(u).is_none()) {
                return Err(Error::Validation(format!(
                    "{name} node {u} has no label"
                )));
            }
        }
        Ok(())
    }

    /// Training and validation nodes together: the known-label set used for
    /// diffusion.
    pub fn known(&self) -> NodeSet {
        self.train.union(&self.valid)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub data: NodeData,
    pub splits: Splits,
}

impl Dataset {
    pub fn new(graph: Graph, data: NodeData, splits: Splits) -> Result<Self> {
        if graph.n_nodes() != data.n_nodes() {
            return Err(Error::dim(graph.n_nodes(), data.n_nodes(), "graph vs node data"));
        }
        splits.validate(&data)?;
        Ok(Dataset {
            graph,
            data,
            splits,
        })
    }
}

/// Neighbors of `u` that are not training nodes (the row of the masked
/// adjacency). Since graphs carry no self-loops the diagonal clause never
/// contributes.
pub fn masked_neighbors(g: &Graph, train: &NodeSet, u: usize) -> Vec<usize> {
    g.neighbors(u)
        .iter()
        .copied()
        .filter(|&v| v == u || !train.contains(v))
        .collect()
}

/// Degree exponent of the normalized adjacency `D^{-d} A D^{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Normalization {
    /// d = 0: `A D^{-1}`, each sender splits its value over its neighbors.
    Column,
    /// d = 0.5: `D^{-1/2} A D^{-1/2}`.
    Symmetric,
}

impl Normalization {
    pub fn from_exponent(d: f64) -> Result<Self> {
        if d == 0.0 {
            Ok(Normalization::Column)
        } else if d == 0.5 {
            Ok(Normalization::Symmetric)
        } else {
            Err(Error::Parameter(format!("degree exponent must be 0 or 0.5, got {d}")))
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            Normalization::Column => 0.0,
            Normalization::Symmetric => 0.5,
        }
    }
}

/// One application of the normalized (optionally masked) adjacency:
/// `out[u] = Σ_v M[v,u] values[v] / (deg[u]^d deg[v]^{1-d})`.
///
/// With a mask, values flow along `masked_neighbors(v)` only, so nodes in
/// `masked_by` send but never receive. A zero-degree node behaves as if it
/// had a single self-loop and returns its own value.
pub fn propagate(
    g: &Graph,
    values: &PredictionTable,
    d: Normalization,
    masked_by: Option<&NodeSet>,
) -> Result<PredictionTable> {
    let n = g.n_nodes();
    if values.n_rows() != n {
        return Err(Error::dim(n, values.n_rows(), "propagate input rows"));
    }
    let mask = masked_by.map(|m| m.to_mask(n));
    let degrees = g.degree_view().degree;
    let c = values.n_cols();
    let mut out = PredictionTable::zeros(n, c);
    let (recv_scale, send_scale): (Vec<f64>, Vec<f64>) = match d {
        Normalization::Column => (vec![1.0; n], degrees.iter().map(|x| 1.0 / x).collect()),
        Normalization::Symmetric => {
            let s: Vec<f64> = degrees.iter().map(|x| 1.0 / x.sqrt()).collect();
            (s.clone(), s)
        }
    };
    for u in 0..n {
        let nbrs = g.neighbors(u);
        if nbrs.is_empty() {
            out.row_mut(u).copy_from_slice(values.row(u));
            continue;
        }
        if mask.as_ref().is_some_and(|m| m[u]) {
            continue;
        }
        let row = out.row_mut(u);
        for &v in nbrs {
            let w = send_scale[v];
            for (o, x) in row.iter_mut().zip(values.row(v)) {
                *o += w * x;
            }
        }
        let r = recv_scale[u];
        if r != 1.0 {
            row.iter_mut().for_each(|o| *o *= r);
        }
    }
    Ok(out)
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

fn open_writer(path: &Path) -> Result<Box<dyn Write>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzEncoder::new(BufWriter::new(file), Compression::default())))
    } else {
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn for_each_row<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(usize, &str) -> std::result::Result<(), String>,
{
    let reader = open_reader(path)?;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, line).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
    }
    Ok(())
}

fn parse_id(field: &str) -> std::result::Result<usize, String> {
    field
        .trim()
        .parse()
        .map_err(|_| format!("bad node id {field:?}"))
}

/// Reads the nodes/edges/splits TSV files. Paths ending in `.gz` are
/// decompressed transparently.
pub fn load_dataset(nodes_path: &Path, edges_path: &Path, splits_path: &Path) -> Result<Dataset> {
    let mut rows: Vec<Option<(Vec<f64>, Option<usize>)>> = Vec::new();
    let mut n_features: Option<usize> = None;
    for_each_row(nodes_path, |_, line| {
        let mut fields = line.split('\t');
        let id = parse_id(fields.next().unwrap_or(""))?;
        let feats = fields.next().ok_or("missing feature column")?;
        let label = fields.next().unwrap_or("").trim();
        if fields.next().is_some() {
            return Err("too many columns".into());
        }
        let feats = feats
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("bad feature value: {e}"))?;
        match n_features {
            None => n_features = Some(feats.len()),
            Some(f) if f != feats.len() => {
                return Err(format!("expected {f} features, found {}", feats.len()))
            }
            Some(_) => {}
        }
        let label = if label.is_empty() {
            None
        } else {
            Some(label.parse::<usize>().map_err(|_| format!("bad label {label:?}"))?)
        };
        if rows.len() <= id {
            rows.resize(id + 1, None);
        }
        if rows[id].is_some() {
            return Err(format!("duplicate node id {id}"));
        }
        rows[id] = Some((feats, label));
        Ok(())
    })?;
    if let Some(missing) = rows.iter().position(Option::is_none) {
        return Err(Error::Validation(format!(
            "node ids must cover 0..{}; node {missing} is missing",
            rows.len()
        )));
    }
    let n_features = n_features.unwrap_or(0);
    let n = rows.len();
    let mut features = Vec::with_capacity(n * n_features);
    let mut labels = Vec::with_capacity(n);
    for (f, l) in rows.into_iter().flatten() {
        features.extend(f);
        labels.push(l);
    }
    let n_classes = labels.iter().flatten().max().map_or(0, |c| c + 1);
    let data = NodeData::new(n_features, n_classes, features, labels)?;

    let mut edges = Vec::new();
    for_each_row(edges_path, |_, line| {
        let mut fields = line.split('\t');
        let u = parse_id(fields.next().unwrap_or(""))?;
        let v = parse_id(fields.next().ok_or("expected `<src>\\t<dst>`")?)?;
        edges.push((u, v));
        Ok(())
    })?;
    let graph = Graph::from_edges(n, edges)?;

    let mut splits = Splits::default();
    for_each_row(splits_path, |_, line| {
        let (id, name) = line.split_once('\t').ok_or("expected `<node_id>\\t<split>`")?;
        let id = parse_id(id)?;
        let set = match name.trim() {
            "train" => &mut splits.train,
            "valid" => &mut splits.valid,
            "test" => &mut splits.test,
            other => return Err(format!("unknown split {other:?}")),
        };
        set.insert(id);
        Ok(())
    })?;

    Dataset::new(graph, data, splits)
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(p, e)
}

/// Writes a dataset in the same layout `load_dataset` reads.
pub fn write_dataset(
    ds: &Dataset,
    nodes_path: &Path,
    edges_path: &Path,
    splits_path: &Path,
) -> Result<()> {

    let mut w = open_writer(nodes_path)?;
    for u in 0..ds.data.n_nodes() {
        let feats: Vec<String> = ds.data.features(u).iter().map(|x| format!("{x:?}")).collect();
        let label = ds.data.label(u).map(|c| c.to_string()).unwrap_or_default();
        writeln!(w, "{u}\t{}\t{label}", feats.join(",")).map_err(io(nodes_path))?;
    }
    w.flush().map_err(io(nodes_path))?;
    drop(w);

    let mut w = open_writer(edges_path)?;
    for (u, v) in ds.graph.edges() {
        writeln!(w, "{u}\t{v}").map_err(io(edges_path))?;
    }
    w.flush().map_err(io(edges_path))?;
    drop(w);

    let mut w = open_writer(splits_path)?;
    for (name, set) in [
        ("train", &ds.splits.train),
        ("valid", &ds.splits.valid),
        ("test", &ds.splits.test),
    ] {
        for u in set.iter() {
            writeln!(w, "{u}\t{name}").map_err(io(splits_path))?;
        }
    }
    w.flush().map_err(io(splits_path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn set(ids: &[usize]) -> NodeSet {
        ids.iter().copied().collect()
    }

    #[test]
    fn symmetric_duplicates_collapse() {
        let g = Graph::from_edges(3, [(1, 2), (2, 1)]).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.neighbors(1), &[2]);
        assert_eq!(g.neighbors(2), &[1]);
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let err = Graph::from_edges(2, [(0, 5)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn self_loops_dropped_and_degree_clamped() {
        let g = Graph::from_edges(3, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.degree_view().degree, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn masked_neighbor_examples() {
        let g = path3();
        assert_eq!(masked_neighbors(&g, &set(&[1]), 0), Vec::<usize>::new());
        assert_eq!(masked_neighbors(&g, &set(&[]), 1), vec![0, 2]);
        assert_eq!(masked_neighbors(&g, &set(&[0]), 1), vec![2]);
    }

    #[test]
    fn propagate_two_nodes_symmetric() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let x = PredictionTable::from_rows(&[[1.0], [0.0]]).unwrap();
        let y = propagate(&g, &x, Normalization::Symmetric, None).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn propagate_star_column() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let x = PredictionTable::from_rows(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        let y = propagate(&g, &x, Normalization::Column, None).unwrap();
        assert_eq!(y.row(0), &[3.0]);
        for leaf in 1..4 {
            assert!((y.row(leaf)[0] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn propagate_zeros_stay_zero() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let x = PredictionTable::zeros(4, 3);
        for d in [Normalization::Column, Normalization::Symmetric] {
            assert_eq!(propagate(&g, &x, d, None).unwrap(), x);
        }
    }

    #[test]
    fn masked_propagate_keeps_training_nodes_from_receiving() {
        let g = path3();
        let x = PredictionTable::from_rows(&[[1.0], [2.0], [4.0]]).unwrap();
        let y = propagate(&g, &x, Normalization::Column, Some(&set(&[1]))).unwrap();
        // node 1 is masked: it sends to 0 and 2 but receives nothing
        assert_eq!(y.row(1), &[0.0]);
        assert_eq!(y.row(0), &[1.0]);
        assert_eq!(y.row(2), &[1.0]);
    }

    #[test]
    fn propagate_rejects_wrong_row_count() {
        let g = path3();
        let x = PredictionTable::zeros(2, 1);
        assert!(matches!(
            propagate(&g, &x, Normalization::Column, None),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn isolated_node_keeps_value() {
        let g = Graph::empty(2);
        let x = PredictionTable::from_rows(&[[0.3, 0.7], [1.0, 0.0]]).unwrap();
        let y = propagate(&g, &x, Normalization::Symmetric, None).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn overlapping_splits_rejected() {
        let data = NodeData::new(1, 2, vec![0.0; 3], vec![Some(0), Some(1), None]).unwrap();
        let splits = Splits {
            train: set(&[0]),
            valid: set(&[0, 1]),
            test: set(&[2]),
        };
        assert!(matches!(splits.validate(&data), Err(Error::Validation(_))));
    }

    #[test]
    fn unlabeled_training_node_rejected() {
        let data = NodeData::new(1, 2, vec![0.0; 3], vec![Some(0), None, None]).unwrap();
        let splits = Splits {
            train: set(&[1]),
            ..Default::default()
        };
        assert!(splits.validate(&data).is_err());
    }
}
