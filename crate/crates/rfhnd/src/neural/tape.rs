//! Reverse-mode tape over matrix-valued primitives.
//!
//! Each forward op records its parents and enough primal state to replay the
//! adjoint; `backward` walks the Wengert list once in reverse. The scatter
//! primitives (edge/node pooling) carry the hypergraph incidence so the
//! whole unrolled diffusion loop differentiates without materializing S.

use std::sync::Arc;

use crate::hypergraph::Hypergraph;
use crate::neural::mat::Mat;

/// Precomputed incidence constants shared by all structure-aware ops.
pub struct Structure {
    pub h: Arc<Hypergraph>,
    pub inv_sqrt_deg: Vec<f64>,
    pub inv_deg: Vec<f64>,
    pub inv_size: Vec<f64>,
    /// Per edge: sigma_e = sum_{j in e} 1/sqrt(d_j).
    pub sigma: Vec<f64>,
}

impl Structure {
    pub fn new(h: Arc<Hypergraph>) -> Self {
        let inv_sqrt_deg: Vec<f64> =
            (0..h.num_nodes()).map(|i| 1.0 / f64::from(h.node_degree(i)).sqrt()).collect();
        let inv_deg: Vec<f64> =
            (0..h.num_nodes()).map(|i| 1.0 / f64::from(h.node_degree(i))).collect();
        let inv_size: Vec<f64> =
            (0..h.num_edges()).map(|e| 1.0 / h.edge_size(e) as f64).collect();
        let sigma: Vec<f64> = (0..h.num_edges())
            .map(|e| h.edge(e).iter().map(|&j| inv_sqrt_deg[j as usize]).sum())
            .collect();
        Structure { h, inv_sqrt_deg, inv_deg, inv_size, sigma }
    }
}

pub type NodeId = usize;

enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Relu(NodeId),
    RowNormalize(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// a + scale * b.
    AddScaled(NodeId, NodeId, f64),
    /// Elementwise product with a constant mask (dropout).
    MulMask(NodeId, Arc<Vec<f64>>),
    /// diag(c) X with a constant per-row scale.
    ScaleRowsConst(NodeId, Arc<Vec<f64>>),
    /// diag(v) X where v is a column vector on the tape.
    ScaleRowsVar(NodeId, NodeId),
    /// Row-wise dot product of two equal-shape matrices -> column vector.
    RowDot(NodeId, NodeId),
    /// P_e = sum_{i in e} Z_i (n x d -> m x d).
    PoolEdges(NodeId),
    /// Y_i = sum_{e : i in e} P_e (m x d -> n x d).
    PoolNodes(NodeId),
    /// Mean cross-entropy of softmaxed logits over the given node subset.
    SoftmaxCrossEntropy { logits: NodeId, labels: Arc<Vec<u32>>, idx: Arc<Vec<u32>> },
    SumAll(NodeId),
}

struct Node {
    value: Mat,
    op: Op,
}

pub struct Tape {
    nodes: Vec<Node>,
    structure: Arc<Structure>,
    /// Smallest |pre-activation| seen by any relu, for kink diagnostics.
    pub min_relu_gap: f64,
    /// Smallest row norm seen by any normalization.
    pub min_row_norm: f64,
}

impl Tape {
    pub fn new(structure: Arc<Structure>) -> Self {
        Tape { nodes: Vec::new(), structure, min_relu_gap: f64::INFINITY, min_row_norm: f64::INFINITY }
    }

    pub fn value(&self, id: NodeId) -> &Mat {
        &self.nodes[id].value
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Mat, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Mat) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a].value.matmul(&self.nodes[b].value);
        self.push(value, Op::MatMul(a, b))
    }

    /// X + broadcast bias row (bias is 1 x cols).
    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let xm = &self.nodes[x].value;
        let bm = &self.nodes[b].value;
        assert_eq!(bm.rows, 1);
        assert_eq!(bm.cols, xm.cols);
        let mut value = xm.clone();
        for i in 0..value.rows {
            for (v, &bb) in value.row_mut(i).iter_mut().zip(&bm.data) {
                *v += bb;
            }
        }
        self.push(value, Op::AddBias(x, b))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for v in &mut value.data {
            let gap = v.abs();
            if gap < self.min_relu_gap {
                self.min_relu_gap = gap;
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.push(value, Op::Relu(a))
    }

    pub fn row_normalize(&mut self, a: NodeId) -> NodeId {
        let src = &self.nodes[a].value;
        let mut value = src.clone();
        for i in 0..value.rows {
            let row = value.row_mut(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < self.min_row_norm {
                self.min_row_norm = norm;
            }
            let inv = 1.0 / norm;
            for v in row {
                *v *= inv;
            }
        }
        self.push(value, Op::RowNormalize(a))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for (v, w) in value.data.iter_mut().zip(&self.nodes[b].value.data) {
            *v += w;
        }
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for (v, w) in value.data.iter_mut().zip(&self.nodes[b].value.data) {
            *v -= w;
        }
        self.push(value, Op::Sub(a, b))
    }

    pub fn add_scaled(&mut self, a: NodeId, b: NodeId, scale: f64) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for (v, w) in value.data.iter_mut().zip(&self.nodes[b].value.data) {
            *v += scale * w;
        }
        self.push(value, Op::AddScaled(a, b, scale))
    }

    pub fn mul_mask(&mut self, a: NodeId, mask: Arc<Vec<f64>>) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        assert_eq!(mask.len(), value.data.len());
        for (v, m) in value.data.iter_mut().zip(mask.iter()) {
            *v *= m;
        }
        self.push(value, Op::MulMask(a, mask))
    }

    pub fn scale_rows_const(&mut self, a: NodeId, scales: Arc<Vec<f64>>) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        assert_eq!(scales.len(), value.rows);
        for i in 0..value.rows {
            let s = scales[i];
            for v in value.row_mut(i) {
                *v *= s;
            }
        }
        self.push(value, Op::ScaleRowsConst(a, scales))
    }

    pub fn scale_rows_var(&mut self, a: NodeId, v: NodeId) -> NodeId {
        let vm = &self.nodes[v].value;
        assert_eq!(vm.cols, 1);
        assert_eq!(vm.rows, self.nodes[a].value.rows);
        let scales = vm.data.clone();
        let mut value = self.nodes[a].value.clone();
        for (i, &s) in scales.iter().enumerate() {
            for x in value.row_mut(i) {
                *x *= s;
            }
        }
        self.push(value, Op::ScaleRowsVar(a, v))
    }

    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let am = &self.nodes[a].value;
        let bm = &self.nodes[b].value;
        assert_eq!((am.rows, am.cols), (bm.rows, bm.cols));
        let mut value = Mat::zeros(am.rows, 1);
        for i in 0..am.rows {
            value.data[i] = am.row(i).iter().zip(bm.row(i)).map(|(x, y)| x * y).sum();
        }
        self.push(value, Op::RowDot(a, b))
    }

    pub fn pool_edges(&mut self, a: NodeId) -> NodeId {
        let h = Arc::clone(&self.structure.h);
        let am = &self.nodes[a].value;
        let d = am.cols;
        let mut value = Mat::zeros(h.num_edges(), d);
        for e in 0..h.num_edges() {
            let row = value.row_mut(e);
            for &i in h.edge(e) {
                for (acc, v) in row.iter_mut().zip(am.row(i as usize)) {
                    *acc += v;
                }
            }
        }
        self.push(value, Op::PoolEdges(a))
    }

    pub fn pool_nodes(&mut self, a: NodeId) -> NodeId {
        let h = Arc::clone(&self.structure.h);
        let am = &self.nodes[a].value;
        let d = am.cols;
        let mut value = Mat::zeros(h.num_nodes(), d);
        for e in 0..h.num_edges() {
            let src = am.row(e);
            for &i in h.edge(e) {
                for (acc, v) in value.row_mut(i as usize).iter_mut().zip(src) {
                    *acc += v;
                }
            }
        }
        self.push(value, Op::PoolNodes(a))
    }

    /// Mean cross-entropy over `idx`; returns a 1 x 1 node.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        labels: Arc<Vec<u32>>,
        idx: Arc<Vec<u32>>,
    ) -> NodeId {
        let lm = &self.nodes[logits].value;
        let mut total = 0.0;
        for &i in idx.iter() {
            let row = lm.row(i as usize);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let logsum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            total += logsum - row[labels[i as usize] as usize];
        }
        let value = Mat::from_vec(1, 1, vec![total / idx.len() as f64]);
        self.push(value, Op::SoftmaxCrossEntropy { logits, labels, idx })
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.nodes[a].value.data.iter().sum();
        self.push(Mat::from_vec(1, 1, vec![s]), Op::SumAll(a))
    }

    /// Adjoints of every node with respect to the scalar at `loss`.
    pub fn backward(&self, loss: NodeId) -> Vec<Mat> {
        let mut grads: Vec<Mat> = self
            .nodes
            .iter()
            .map(|n| Mat::zeros(n.value.rows, n.value.cols))
            .collect();
        assert_eq!(self.nodes[loss].value.data.len(), 1, "loss must be scalar");
        grads[loss].data[0] = 1.0;

        for id in (0..=loss).rev() {
            let g = grads[id].clone();
            if g.data.iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.nodes[id].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul_nt(&self.nodes[*b].value);
                    accumulate(&mut grads[*a], &ga);
                    let gb = self.nodes[*a].value.matmul_tn(&g);
                    accumulate(&mut grads[*b], &gb);
                }
                Op::AddBias(x, b) => {
                    accumulate(&mut grads[*x], &g);
                    let mut gb = Mat::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for (acc, v) in gb.data.iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                    accumulate(&mut grads[*b], &gb);
                }
                Op::Relu(a) => {
                    let mut ga = g.clone();
                    for (v, src) in ga.data.iter_mut().zip(&self.nodes[*a].value.data) {
                        if *src <= 0.0 {
                            *v = 0.0;
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::RowNormalize(a) => {
                    // y = x / ||x||: dL/dx = (g - (g . y) y) / ||x||.
                    let src = &self.nodes[*a].value;
                    let y = &self.nodes[id].value;
                    let mut ga = Mat::zeros(src.rows, src.cols);
                    for i in 0..src.rows {
                        let norm = src.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                        let dot: f64 = g.row(i).iter().zip(y.row(i)).map(|(a, b)| a * b).sum();
                        for ((out, &gv), &yv) in
                            ga.row_mut(i).iter_mut().zip(g.row(i)).zip(y.row(i))
                        {
                            *out = (gv - dot * yv) / norm;
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[*a], &g);
                    accumulate(&mut grads[*b], &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[*a], &g);
                    subtract(&mut grads[*b], &g);
                }
                Op::AddScaled(a, b, scale) => {
                    accumulate(&mut grads[*a], &g);
                    let mut gb = g.clone();
                    gb.data.iter_mut().for_each(|v| *v *= scale);
                    accumulate(&mut grads[*b], &gb);
                }
                Op::MulMask(a, mask) => {
                    let mut ga = g.clone();
                    for (v, m) in ga.data.iter_mut().zip(mask.iter()) {
                        *v *= m;
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::ScaleRowsConst(a, scales) => {
                    let mut ga = g.clone();
                    for i in 0..ga.rows {
                        let s = scales[i];
                        for v in ga.row_mut(i) {
                            *v *= s;
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::ScaleRowsVar(a, v) => {
                    let vm = &self.nodes[*v].value;
                    let am = &self.nodes[*a].value;
                    let mut ga = g.clone();
                    let mut gv = Mat::zeros(vm.rows, 1);
                    for i in 0..ga.rows {
                        let s = vm.data[i];
                        gv.data[i] = g.row(i).iter().zip(am.row(i)).map(|(x, y)| x * y).sum();
                        for x in ga.row_mut(i) {
                            *x *= s;
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                    accumulate(&mut grads[*v], &gv);
                }
                Op::RowDot(a, b) => {
                    let am = &self.nodes[*a].value;
                    let bm = &self.nodes[*b].value;
                    let mut ga = Mat::zeros(am.rows, am.cols);
                    let mut gb = Mat::zeros(bm.rows, bm.cols);
                    for i in 0..am.rows {
                        let go = g.data[i];
                        for (x, &bv) in ga.row_mut(i).iter_mut().zip(bm.row(i)) {
                            *x = go * bv;
                        }
                        for (y, &av) in gb.row_mut(i).iter_mut().zip(am.row(i)) {
                            *y = go * av;
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                    accumulate(&mut grads[*b], &gb);
                }
                Op::PoolEdges(a) => {
                    let h = &self.structure.h;
                    let am = &self.nodes[*a].value;
                    let mut ga = Mat::zeros(am.rows, am.cols);
                    for e in 0..h.num_edges() {
                        let src = g.row(e);
                        for &i in h.edge(e) {
                            for (acc, v) in ga.row_mut(i as usize).iter_mut().zip(src) {
                                *acc += v;
                            }
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::PoolNodes(a) => {
                    let h = &self.structure.h;
                    let am = &self.nodes[*a].value;
                    let mut ga = Mat::zeros(am.rows, am.cols);
                    for e in 0..h.num_edges() {
                        let row = ga.row_mut(e);
                        for &i in h.edge(e) {
                            for (acc, v) in row.iter_mut().zip(g.row(i as usize)) {
                                *acc += v;
                            }
                        }
                    }
                    accumulate(&mut grads[*a], &ga);
                }
                Op::SoftmaxCrossEntropy { logits, labels, idx } => {
                    let lm = &self.nodes[*logits].value;
                    let mut gl = Mat::zeros(lm.rows, lm.cols);
                    let scale = g.data[0] / idx.len() as f64;
                    for &i in idx.iter() {
                        let row = lm.row(i as usize);
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                        let total: f64 = exps.iter().sum();
                        let out = gl.row_mut(i as usize);
                        for (k, e) in exps.iter().enumerate() {
                            out[k] = scale * (e / total);
                        }
                        out[labels[i as usize] as usize] -= scale;
                    }
                    accumulate(&mut grads[*logits], &gl);
                }
                Op::SumAll(a) => {
                    let mut ga = grads[*a].clone();
                    for v in &mut ga.data {
                        *v += g.data[0];
                    }
                    grads[*a] = ga;
                }
            }
        }
        grads
    }
}

fn accumulate(dst: &mut Mat, src: &Mat) {
    for (d, s) in dst.data.iter_mut().zip(&src.data) {
        *d += s;
    }
}

fn subtract(dst: &mut Mat, src: &Mat) {
    for (d, s) in dst.data.iter_mut().zip(&src.data) {
        *d -= s;
    }
}
