//! Tape assembly of the classifier: encoder, the unrolled diffusion loop
//! with hypernet-produced aggregation weights, and the decoder, plus the
//! mean-aggregation control model.

use std::sync::Arc;

use crate::neural::mat::Mat;
use crate::neural::nets::{Linear, Mlp, ModelParams};
use crate::neural::tape::{NodeId, Structure, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    None,
    /// Drop the cosine factor from the feature update.
    NoCos,
    /// Replace the hypernet output with fixed random per-edge values.
    NoHypernet,
    NoBoth,
}

impl Ablation {
    pub fn use_cosine(self) -> bool {
        matches!(self, Ablation::None | Ablation::NoHypernet)
    }

    pub fn use_hypernet(self) -> bool {
        matches!(self, Ablation::None | Ablation::NoCos)
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Ablation::None),
            "no-cos" => Ok(Ablation::NoCos),
            "no-hypernet" => Ok(Ablation::NoHypernet),
            "no-both" => Ok(Ablation::NoBoth),
            other => Err(format!("unknown ablation {other:?}")),
        }
    }
}

/// How the two scatter passes around MLP1 compose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatterComposition {
    /// Pool node features to edges, transform, scatter back to nodes, and
    /// re-pool to edges before the kprime head.
    #[default]
    PoolTransformRepool,
    /// Feed the transformed edge embedding to the head directly.
    PoolTransformDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rfhnd,
    /// Degree-normalized mean aggregation, the internal experimental control.
    MeanAggBaseline,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rfhnd" => Ok(ModelKind::Rfhnd),
            "baseline" => Ok(ModelKind::MeanAggBaseline),
            other => Err(format!("unknown model {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub ablation: Ablation,
    pub scatter: ScatterComposition,
    pub tau: f64,
    pub steps: usize,
    pub renormalize_each_step: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Rfhnd,
            ablation: Ablation::None,
            scatter: ScatterComposition::default(),
            tau: 0.5,
            steps: 2,
            renormalize_each_step: true,
        }
    }
}

/// Where per-step aggregation weights come from during the forward pass.
pub enum KprimeMode<'a> {
    /// The trainable hypernet (or the fixed random dummy under ablation).
    Model,
    /// Injected per-step values; used to cross-check the tape stepper
    /// against the plain diffusion path.
    PerStep(&'a [Vec<f64>]),
}

/// Forward-pass handles that later stages need.
pub struct ForwardOutput {
    pub logits: NodeId,
    /// Embedding after the last diffusion step, before the decoder.
    pub embedding: NodeId,
    /// kprime tape nodes per step.
    pub kprime_nodes: Vec<NodeId>,
}

/// Tape ids of the parameter leaves, names matching `ModelParams::tensors`.
pub struct ParamNodes {
    pub named: Vec<(&'static str, NodeId)>,
}

pub struct LinearNodes {
    w: NodeId,
    b: NodeId,
}

pub struct MlpNodes {
    l1: LinearNodes,
    l2: LinearNodes,
}

fn leaf_linear(tape: &mut Tape, layer: &Linear) -> LinearNodes {
    LinearNodes { w: tape.leaf(layer.w.clone()), b: tape.leaf(layer.b.clone()) }
}

fn leaf_mlp(tape: &mut Tape, net: &Mlp) -> MlpNodes {
    MlpNodes { l1: leaf_linear(tape, &net.l1), l2: leaf_linear(tape, &net.l2) }
}

fn apply_linear(tape: &mut Tape, x: NodeId, layer: &LinearNodes) -> NodeId {
    let y = tape.matmul(x, layer.w);
    tape.add_bias(y, layer.b)
}

fn apply_mlp(tape: &mut Tape, x: NodeId, net: &MlpNodes) -> NodeId {
    let y = apply_linear(tape, x, &net.l1);
    let a = tape.relu(y);
    apply_linear(tape, a, &net.l2)
}

/// One diffusion step on the tape:
/// X <- X - tau [ diag((S o C) 1) X - S X ], S = D^{-1/2} H K' H^T D^{-1/2}.
/// All products run through incidence pooling; the cosine diagonal uses the
/// row-normalized features.
fn diffusion_step(
    tape: &mut Tape,
    x: NodeId,
    kprime: NodeId,
    tau: f64,
    use_cosine: bool,
    renormalize: bool,
) -> NodeId {
    let s = Arc::clone(tape.structure());
    let inv_sqrt = Arc::new(s.inv_sqrt_deg.clone());
    // S X.
    let z = tape.scale_rows_const(x, Arc::clone(&inv_sqrt));
    let pooled = tape.pool_edges(z);
    let scaled = tape.scale_rows_var(pooled, kprime);
    let back = tape.pool_nodes(scaled);
    let sx = tape.scale_rows_const(back, Arc::clone(&inv_sqrt));
    // Diagonal (S o C) 1, with C restricted to hyperedge-induced pairs via
    // pooling of the normalized features.
    let diag = if use_cosine {
        let xhat = tape.row_normalize(x);
        let zhat = tape.scale_rows_const(xhat, Arc::clone(&inv_sqrt));
        let qhat = tape.pool_edges(zhat);
        let qk = tape.scale_rows_var(qhat, kprime);
        let r = tape.pool_nodes(qk);
        let rd = tape.scale_rows_const(r, Arc::clone(&inv_sqrt));
        tape.row_dot(xhat, rd)
    } else {
        let sigma = tape.leaf(Mat::from_vec(s.sigma.len(), 1, s.sigma.clone()));
        let ks = tape.scale_rows_var(sigma, kprime);
        let r1 = tape.pool_nodes(ks);
        tape.scale_rows_const(r1, Arc::clone(&inv_sqrt))
    };
    let term2 = tape.scale_rows_var(x, diag);
    let dir = tape.sub(term2, sx);
    let next = tape.add_scaled(x, dir, -tau);
    if renormalize {
        tape.row_normalize(next)
    } else {
        next
    }
}

/// Hypernet head: pooled edge embedding -> per-edge scalar kprime.
fn hypernet_kprime(
    tape: &mut Tape,
    x: NodeId,
    mlp1: &MlpNodes,
    mlp2: &MlpNodes,
    scatter: ScatterComposition,
) -> NodeId {
    let s = Arc::clone(tape.structure());
    let inv_size = Arc::new(s.inv_size.clone());
    let inv_deg = Arc::new(s.inv_deg.clone());
    let pooled = tape.pool_edges(x);
    let e_edge = tape.scale_rows_const(pooled, Arc::clone(&inv_size));
    let transformed = apply_mlp(tape, e_edge, mlp1);
    let head_input = match scatter {
        ScatterComposition::PoolTransformRepool => {
            let back = tape.pool_nodes(transformed);
            let e_node = tape.scale_rows_const(back, inv_deg);
            let repooled = tape.pool_edges(e_node);
            tape.scale_rows_const(repooled, inv_size)
        }
        ScatterComposition::PoolTransformDirect => transformed,
    };
    apply_mlp(tape, head_input, mlp2)
}

/// Assemble the full forward pass. `features` is the raw input leaf
/// (dropout already applied by the caller when training). Parameter leaves
/// are created once and shared across the unrolled steps, so their adjoints
/// accumulate over the whole loop.
pub fn model_forward(
    tape: &mut Tape,
    features: NodeId,
    params: &ModelParams,
    cfg: &ModelConfig,
    kprime_mode: KprimeMode<'_>,
) -> (ForwardOutput, ParamNodes) {
    let encoder = leaf_linear(tape, &params.encoder);
    let mlp1 = leaf_mlp(tape, &params.mlp1);
    let mlp2 = leaf_mlp(tape, &params.mlp2);
    let decoder = leaf_linear(tape, &params.decoder);
    let named = vec![
        ("encoder.w", encoder.w),
        ("encoder.b", encoder.b),
        ("mlp1.l1.w", mlp1.l1.w),
        ("mlp1.l1.b", mlp1.l1.b),
        ("mlp1.l2.w", mlp1.l2.w),
        ("mlp1.l2.b", mlp1.l2.b),
        ("mlp2.l1.w", mlp2.l1.w),
        ("mlp2.l1.b", mlp2.l1.b),
        ("mlp2.l2.w", mlp2.l2.w),
        ("mlp2.l2.b", mlp2.l2.b),
        ("decoder.w", decoder.w),
        ("decoder.b", decoder.b),
    ];

    let enc = apply_linear(tape, features, &encoder);
    let x = tape.row_normalize(enc);
    let (x, kprime_nodes) =
        diffusion_rollout(tape, x, params, cfg, &kprime_mode, Some((&mlp1, &mlp2)));

    let logits = apply_linear(tape, x, &decoder);
    (ForwardOutput { logits, embedding: x, kprime_nodes }, ParamNodes { named })
}

/// The unrolled propagation loop alone, starting from an arbitrary feature
/// node. When `nets` is None the hypernet path is unavailable and the mode
/// must be `PerStep` or the fixed-value ablation.
pub fn diffusion_rollout(
    tape: &mut Tape,
    mut x: NodeId,
    params: &ModelParams,
    cfg: &ModelConfig,
    kprime_mode: &KprimeMode<'_>,
    nets: Option<(&MlpNodes, &MlpNodes)>,
) -> (NodeId, Vec<NodeId>) {
    let mut kprime_nodes = Vec::new();
    match cfg.kind {
        ModelKind::Rfhnd => {
            for step in 0..cfg.steps {
                let kprime = match kprime_mode {
                    KprimeMode::Model => {
                        if cfg.ablation.use_hypernet() {
                            let (mlp1, mlp2) = nets.expect("hypernet mode needs nets on the tape");
                            hypernet_kprime(tape, x, mlp1, mlp2, cfg.scatter)
                        } else {
                            let m = params.fixed_kprime.len();
                            tape.leaf(Mat::from_vec(m, 1, params.fixed_kprime.clone()))
                        }
                    }
                    KprimeMode::PerStep(values) => {
                        let v = &values[step];
                        tape.leaf(Mat::from_vec(v.len(), 1, v.clone()))
                    }
                };
                kprime_nodes.push(kprime);
                x = diffusion_step(
                    tape,
                    x,
                    kprime,
                    cfg.tau,
                    cfg.ablation.use_cosine(),
                    cfg.renormalize_each_step,
                );
            }
        }
        ModelKind::MeanAggBaseline => {
            let s = Arc::clone(tape.structure());
            let inv_sqrt = Arc::new(s.inv_sqrt_deg.clone());
            let inv_size = Arc::new(s.inv_size.clone());
            for _ in 0..cfg.steps {
                let z = tape.scale_rows_const(x, Arc::clone(&inv_sqrt));
                let pooled = tape.pool_edges(z);
                let mean = tape.scale_rows_const(pooled, Arc::clone(&inv_size));
                let back = tape.pool_nodes(mean);
                x = tape.scale_rows_const(back, Arc::clone(&inv_sqrt));
            }
        }
    }
    (x, kprime_nodes)
}

/// Convenience inference wrapper: raw features in, logits and embedding out.
pub fn infer(
    structure: &Arc<Structure>,
    features: &Mat,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> (Mat, Mat) {
    let mut tape = Tape::new(Arc::clone(structure));
    let f = tape.leaf(features.clone());
    let (out, _) = model_forward(&mut tape, f, params, cfg, KprimeMode::Model);
    (tape.value(out.logits).clone(), tape.value(out.embedding).clone())
}
