//! Weighted-hypergraph representation, degree bookkeeping, and dataset I/O.
//!
//! Hyperedges are stored as sorted node lists plus a node-to-edge CSR index,
//! never as a dense incidence matrix, so every traversal is linear in the
//! incidence size. A [`Hypergraph`] is immutable after construction and
//! cheap to share across threads.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Immutable incidence structure with validated index space.
///
/// Invariants established at construction:
/// * every node index lies in `[0, n)`,
/// * no duplicate node within one hyperedge, every hyperedge has `|e| >= 2`,
/// * every node lies in at least one hyperedge (`d_i >= 1`).
#[derive(Debug, Clone)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<u32>>,
    node_degree: Vec<u32>,
    // CSR over nodes: edge ids incident to node i live in
    // node_edges[node_edges_ptr[i]..node_edges_ptr[i + 1]].
    node_edges_ptr: Vec<usize>,
    node_edges: Vec<u32>,
}

impl Hypergraph {
    /// Build and validate. Node lists are sorted; input order inside an edge
    /// is not preserved, the edge order itself is.
    pub fn new(n: usize, edges: Vec<Vec<u32>>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyHypergraph);
        }
        let mut sorted_edges = Vec::with_capacity(edges.len());
        let mut node_degree = vec![0u32; n];
        for (idx, mut e) in edges.into_iter().enumerate() {
            if e.len() < 2 {
                return Err(Error::EdgeTooSmall { edge: idx, size: e.len() });
            }
            e.sort_unstable();
            for pair in e.windows(2) {
                if pair[0] == pair[1] {
                    return Err(Error::DuplicateNode { edge: idx });
                }
            }
            for &v in &e {
                if (v as usize) >= n {
                    return Err(Error::NodeOutOfRange { edge: idx, node: v as usize, n });
                }
                node_degree[v as usize] += 1;
            }
            sorted_edges.push(e);
        }
        if let Some(node) = node_degree.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode { node });
        }

        let mut node_edges_ptr = vec![0usize; n + 1];
        for d in 0..n {
            node_edges_ptr[d + 1] = node_edges_ptr[d] + node_degree[d] as usize;
        }
        let mut cursor = node_edges_ptr.clone();
        let mut node_edges = vec![0u32; node_edges_ptr[n]];
        for (eid, e) in sorted_edges.iter().enumerate() {
            for &v in e {
                node_edges[cursor[v as usize]] = eid as u32;
                cursor[v as usize] += 1;
            }
        }

        Ok(Hypergraph { n, edges: sorted_edges, node_degree, node_edges_ptr, node_edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &[u32] {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        &self.edges
    }

    pub fn edge_size(&self, e: usize) -> usize {
        self.edges[e].len()
    }

    /// d_i = number of hyperedges containing node i.
    pub fn node_degree(&self, i: usize) -> u32 {
        self.node_degree[i]
    }

    pub fn node_degrees(&self) -> &[u32] {
        &self.node_degree
    }

    /// Edge ids incident to node i.
    pub fn edges_of(&self, i: usize) -> &[u32] {
        &self.node_edges[self.node_edges_ptr[i]..self.node_edges_ptr[i + 1]]
    }

    /// Per-node degrees and per-edge sizes, i.e. the row and column sums of
    /// the incidence matrix.
    pub fn degrees(&self) -> (Vec<u32>, Vec<u32>) {
        let sizes = self.edges.iter().map(|e| e.len() as u32).collect();
        (self.node_degree.clone(), sizes)
    }

    /// True when every node has the same degree.
    pub fn is_regular(&self) -> bool {
        self.node_degree.windows(2).all(|w| w[0] == w[1])
    }

    /// Total incidence size N = sum_e |e|.
    pub fn incidence_size(&self) -> usize {
        self.node_edges.len()
    }
}

/// Per-hyperedge positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    w: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (e, &v) in w.iter().enumerate() {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NonpositiveWeight { edge: e, value: v });
            }
        }
        Ok(EdgeWeights { w })
    }

    pub fn uniform(m: usize) -> Self {
        EdgeWeights { w: vec![1.0; m] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

impl std::ops::Index<usize> for EdgeWeights {
    type Output = f64;
    fn index(&self, e: usize) -> &f64 {
        &self.w[e]
    }
}

/// Row-major n x d feature matrix with unit-norm rows and a diffusion time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    pub t: f64,
}

impl FeatureMatrix {
    /// Wrap raw data and renormalize every row to unit Euclidean norm.
    pub fn from_raw(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                context: format!("feature buffer has {} entries, expected {}", data.len(), n * d),
            });
        }
        let mut fm = FeatureMatrix { data, n, d, t: 0.0 };
        fm.renormalize_rows()?;
        Ok(fm)
    }

    /// Wrap data that is already unit-norm (checked to 1e-9).
    pub fn from_unit(data: Vec<f64>, n: usize, d: usize, t: f64) -> Result<Self> {
        let fm = FeatureMatrix { data, n, d, t };
        for i in 0..n {
            let norm = fm.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFinite { context: format!("feature row {i}") });
            }
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::DimensionMismatch {
                    context: format!("feature row {i} has norm {norm}, expected 1"),
                });
            }
        }
        Ok(fm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Scale every row back to unit norm in place. Errors on a zero row and
    /// on non-finite entries.
    pub fn renormalize_rows(&mut self) -> Result<()> {
        for i in 0..self.n {
            let row = &mut self.data[i * self.d..(i + 1) * self.d];
            let mut sq = 0.0;
            for v in row.iter() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { context: format!("feature row {i}") });
                }
                sq += v * v;
            }
            if sq == 0.0 {
                return Err(Error::ZeroRow { node: i });
            }
            let inv = 1.0 / sq.sqrt();
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        Ok(())
    }
}

/// Return a row-normalized copy. Direction of each row is preserved;
/// already-unit rows pass through up to one multiply by 1/||x|| ~ 1.
pub fn normalize_rows(x: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = x.clone();
    out.renormalize_rows()?;
    Ok(out)
}

/// Raw (not necessarily unit-norm) feature buffer, as read from disk or the
/// generator, before the encoder touches it.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub data: Vec<f64>,
    pub n: usize,
    pub d: usize,
}

impl RawFeatures {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn into_unit(self) -> Result<FeatureMatrix> {
        FeatureMatrix::from_raw(self.data, self.n, self.d)
    }
}

#[derive(Serialize, Deserialize)]
struct HypergraphFile {
    n: usize,
    m: usize,
    edges: Vec<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// A hypergraph plus whatever optional payload its file carried.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub hypergraph: Arc<Hypergraph>,
    pub features: Option<RawFeatures>,
    pub labels: Option<Vec<u32>>,
    pub weights: Option<EdgeWeights>,
}

impl Dataset {
    pub fn new(hypergraph: Hypergraph) -> Self {
        Dataset { hypergraph: Arc::new(hypergraph), features: None, labels: None, weights: None }
    }

    /// Load from the structured-text format: a JSON document with an `n`/`m`
    /// header, an `edges` list, and optional `features` (path to a CSV of n
    /// rows relative to the document), `labels`, and `weights` fields.
    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: HypergraphFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        if file.m != file.edges.len() {
            return Err(Error::EdgeCountMismatch { header: file.m, found: file.edges.len() });
        }
        let hypergraph = Hypergraph::new(file.n, file.edges)?;
        if let Some(labels) = &file.labels {
            if labels.len() != file.n {
                return Err(Error::DimensionMismatch {
                    context: format!("{} labels for {} nodes", labels.len(), file.n),
                });
            }
        }
        let weights = match file.weights {
            Some(w) => {
                if w.len() != hypergraph.num_edges() {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "{} weights for {} edges",
                            w.len(),
                            hypergraph.num_edges()
                        ),
                    });
                }
                Some(EdgeWeights::new(w)?)
            }
            None => None,
        };
        let features = match file.features {
            Some(rel) => {
                let feat_path = sibling_path(path, &rel);
                Some(read_features_csv(&feat_path, file.n)?)
            }
            None => None,
        };
        Ok(Dataset { hypergraph: Arc::new(hypergraph), features, labels: file.labels, weights })
    }

    /// Save in canonical form. Feature rows, when present, go to a sidecar
    /// CSV next to `path` ('.' decimal, no locale). Round-trips bit-identical
    /// through `load`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let features_rel = self.features.as_ref().map(|_| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("features");
            format!("{stem}.features.csv")
        });
        let file = HypergraphFile {
            n: self.hypergraph.num_nodes(),
            m: self.hypergraph.num_edges(),
            edges: self.hypergraph.edges().to_vec(),
            features: features_rel.clone(),
            labels: self.labels.clone(),
            weights: self.weights.as_ref().map(|w| w.as_slice().to_vec()),
        };
        let mut text = serde_json::to_string(&file)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        if let (Some(feat), Some(rel)) = (&self.features, &features_rel) {
            write_features_csv(&sibling_path(path, rel), feat)?;
        }
        Ok(())
    }
}

fn sibling_path(document: &Path, rel: &str) -> PathBuf {
    match document.parent() {
        Some(dir) => dir.join(rel),
        None => PathBuf::from(rel),
    }
}

fn read_features_csv(path: &Path, n: usize) -> Result<RawFeatures> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut data = Vec::new();
    let mut d = 0usize;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut width = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(
                    path.display().to_string(),
                    format!("bad float {:?} at line {}", field, lineno + 1),
                )
            })?;
            data.push(v);
            width += 1;
        }
        if rows == 0 {
            d = width;
        } else if width != d {
            return Err(Error::parse(
                path.display().to_string(),
                format!("row {} has {} fields, expected {}", lineno + 1, width, d),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(
            path.display().to_string(),
            format!("{rows} feature rows for {n} nodes"),
        ));
    }
    Ok(RawFeatures { data, n, d })
}

fn write_features_csv(path: &Path, feat: &RawFeatures) -> Result<()> {
    let mut out = String::with_capacity(feat.data.len() * 8);
    for i in 0..feat.n {
        let row = feat.row(i);
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            // f64 Display is the shortest representation that round-trips.
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_from_edge_lists() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(h.node_degrees(), &[1, 2, 1]);
        assert_eq!(h.num_edges(), 2);
    }

    #[test]
    fn duplicate_node_rejected() {
        let err = Hypergraph::new(2, vec![vec![0, 0, 1]]).unwrap_err();
        assert!(matches!(err, Error::DuplicateNode { edge: 0 }));
    }

    #[test]
    fn isolated_node_rejected() {
        let err = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2]]).unwrap_err();
        assert!(matches!(err, Error::IsolatedNode { node: 3 }));
    }

    #[test]
    fn out_of_range_rejected() {
        let err = Hypergraph::new(2, vec![vec![0, 5]]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { edge: 0, node: 5, n: 2 }));
    }

    #[test]
    fn single_edge_over_all_nodes() {
        let h = Hypergraph::new(5, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        assert!(h.node_degrees().iter().all(|&d| d == 1));
        assert_eq!(h.edge_size(0), 5);
    }

    #[test]
    fn star_degrees() {
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap();
        assert_eq!(h.node_degree(0), 3);
    }

    #[test]
    fn degree_sum_equals_size_sum() {
        let h = Hypergraph::new(6, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5]])
            .unwrap();
        let (deg, sizes) = h.degrees();
        let lhs: u32 = deg.iter().sum();
        let rhs: u32 = sizes.iter().sum();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs as usize, h.incidence_size());
    }

    #[test]
    fn normalize_three_four_row() {
        let x = FeatureMatrix::from_raw(vec![3.0, 4.0], 1, 2).unwrap();
        assert!((x.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((x.row(0)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_zero_row_errors() {
        let err = FeatureMatrix::from_raw(vec![1.0, 0.0, 0.0, 0.0], 2, 2).unwrap_err();
        assert!(matches!(err, Error::ZeroRow { node: 1 }));
    }

    #[test]
    fn normalize_idempotent() {
        let x = FeatureMatrix::from_raw(vec![0.3, -1.2, 4.0, 0.5, 0.5, 0.5], 2, 3).unwrap();
        let y = normalize_rows(&x).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_with_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.json");
        let h = Hypergraph::new(4, vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        let ds = Dataset {
            hypergraph: Arc::new(h),
            features: Some(RawFeatures {
                data: vec![0.25, -1.5, 3.0, 0.125, 2.0, -0.75, 1.0, 0.5],
                n: 4,
                d: 2,
            }),
            labels: Some(vec![0, 0, 1, 1]),
            weights: Some(EdgeWeights::new(vec![1.25, 0.5]).unwrap()),
        };
        ds.save(&path).unwrap();
        let loaded = Dataset::load(&path).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let path2 = dir2.path().join("toy.json");
        loaded.save(&path2).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(&path2).unwrap();
        assert_eq!(a, b, "document must round-trip bit-identically");
        let fa = std::fs::read(dir.path().join("toy.features.csv")).unwrap();
        let fb = std::fs::read(dir2.path().join("toy.features.csv")).unwrap();
        assert_eq!(fa, fb);
        assert_eq!(loaded.labels.as_deref(), Some(&[0u32, 0, 1, 1][..]));
    }
}
