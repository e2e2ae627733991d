//! Tape adjoints against central finite differences.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::hypergraph::{Hypergraph, RawFeatures};
use crate::neural::mat::Mat;
use crate::neural::model::{model_forward, KprimeMode, ModelConfig};
use crate::neural::nets::ModelParams;
use crate::neural::tape::{Structure, Tape};
use crate::{Error, Result};

/// How close a relu pre-activation or row norm may sit to its kink before
/// the probe point is re-sampled.
const KINK_GAP: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub probes: usize,
    /// Parameter draws rejected for sitting too close to a relu kink.
    pub resampled_points: usize,
}

fn loss_of(
    structure: &Arc<Structure>,
    feat: &Mat,
    labels: &Arc<Vec<u32>>,
    idx: &Arc<Vec<u32>>,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> (f64, f64) {
    let mut tape = Tape::new(Arc::clone(structure));
    let f = tape.leaf(feat.clone());
    let (out, _) = model_forward(&mut tape, f, params, cfg, KprimeMode::Model);
    let loss_id = tape.softmax_cross_entropy(out.logits, Arc::clone(labels), Arc::clone(idx));
    (tape.value(loss_id).data[0], tape.min_relu_gap)
}

/// Compare the tape gradient of the full training loss against central
/// differences on `probes` randomly sampled parameter coordinates. Probe
/// points whose forward pass touches a relu kink (pre-image within
/// `KINK_GAP` of zero) are re-sampled.
pub fn gradient_check(
    h: &Arc<Hypergraph>,
    features: &RawFeatures,
    labels: &[u32],
    cfg: &ModelConfig,
    hidden: usize,
    probes: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let structure = Arc::new(Structure::new(Arc::clone(h)));
    let classes = (*labels.iter().max().unwrap_or(&0) + 1) as usize;
    let feat = Mat::from_vec(features.n, features.d, features.data.clone());
    let labels_arc = Arc::new(labels.to_vec());
    let idx: Arc<Vec<u32>> = Arc::new((0..h.num_nodes() as u32).collect());

    let mut resampled_points = 0usize;
    let mut params = None;
    for attempt in 0..50 {
        let candidate =
            ModelParams::init(seed.wrapping_add(attempt), features.d, hidden, classes, h.num_edges());
        let (_, relu_gap) = loss_of(&structure, &feat, &labels_arc, &idx, &candidate, cfg);
        if relu_gap > KINK_GAP {
            params = Some(candidate);
            break;
        }
        resampled_points += 1;
    }
    let params = params.ok_or(Error::InvalidConfig {
        message: "could not find a kink-free probe point".to_string(),
    })?;

    // Analytic gradient once.
    let mut tape = Tape::new(Arc::clone(&structure));
    let f = tape.leaf(feat.clone());
    let (out, param_nodes) = model_forward(&mut tape, f, &params, cfg, KprimeMode::Model);
    let loss_id =
        tape.softmax_cross_entropy(out.logits, Arc::clone(&labels_arc), Arc::clone(&idx));
    let grads = tape.backward(loss_id);

    let tensors = params.tensors();
    let total: usize = tensors.iter().map(|(_, m)| m.data.len()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6ead_c4ec);
    let mut max_rel_err: f64 = 0.0;
    for _ in 0..probes {
        let flat = rng.random_range(0..total);
        let (name, coord) = locate(&tensors, flat);
        let analytic = param_nodes
            .named
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, id)| grads[*id].data[coord])
            .expect("named gradient");

        let mut plus = params.clone();
        bump(&mut plus, name, coord, FD_STEP);
        let (lp, _) = loss_of(&structure, &feat, &labels_arc, &idx, &plus, cfg);
        let mut minus = params.clone();
        bump(&mut minus, name, coord, -FD_STEP);
        let (lm, _) = loss_of(&structure, &feat, &labels_arc, &idx, &minus, cfg);
        let fd = (lp - lm) / (2.0 * FD_STEP);

        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
        if rel > max_rel_err {
            max_rel_err = rel;
        }
    }
    Ok(GradCheckReport { max_rel_err, probes, resampled_points })
}

fn locate(tensors: &[(&'static str, &Mat)], mut flat: usize) -> (&'static str, usize) {
    for (name, m) in tensors {
        if flat < m.data.len() {
            return (name, flat);
        }
        flat -= m.data.len();
    }
    unreachable!("flat index out of range")
}

fn bump(params: &mut ModelParams, name: &str, coord: usize, delta: f64) {
    for (n, m) in params.tensors_mut() {
        if n == name {
            m.data[coord] += delta;
            return;
        }
    }
    unreachable!("unknown tensor {name}")
}
