//! Contextual hypergraph SBM generation with controlled heterophily, plus
//! the four noise protocols (Gaussian, uniform, mask, structure).

use rand::prelude::*;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::hypergraph::{Dataset, Hypergraph, RawFeatures};
use crate::{Error, Result};

/// Two-class contextual SBM: every hyperedge draws a fixed minority count
/// `alpha` from one class (chosen by a fair coin per edge) and the rest from
/// the other; features are class-conditional Gaussians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbmConfig {
    pub nodes_per_class: usize,
    pub classes: usize,
    pub num_edges: usize,
    pub edge_size: usize,
    /// Minority count per edge; heterophily level alpha = min(a1, a2).
    pub alpha: usize,
    pub feature_std: f64,
    pub feature_dim: usize,
    /// Euclidean distance between the two class means.
    pub mean_separation: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            nodes_per_class: 2500,
            classes: 2,
            num_edges: 1000,
            edge_size: 15,
            alpha: 1,
            feature_std: 1.0,
            feature_dim: 16,
            mean_separation: 3.0,
            seed: 0,
        }
    }
}

impl SbmConfig {
    fn validate(&self) -> Result<()> {
        if self.classes != 2 {
            return Err(Error::InvalidConfig { message: "generator is two-class".to_string() });
        }
        if self.alpha < 1 || self.alpha > self.edge_size / 2 {
            return Err(Error::InvalidConfig {
                message: format!(
                    "alpha = {} outside [1, {}]",
                    self.alpha,
                    self.edge_size / 2
                ),
            });
        }
        if self.edge_size > self.nodes_per_class {
            return Err(Error::InvalidConfig {
                message: "edge size exceeds nodes per class".to_string(),
            });
        }
        // Every node needs a slot; with fewer incidence slots than nodes no
        // repair can avoid isolation.
        if self.num_edges * self.edge_size < 2 * self.nodes_per_class {
            return Err(Error::InvalidConfig {
                message: format!(
                    "{} edges of size {} cannot cover {} nodes",
                    self.num_edges,
                    self.edge_size,
                    2 * self.nodes_per_class
                ),
            });
        }
        Ok(())
    }
}

/// Generate a dataset. Deterministic under the seed. Nodes 0..npc carry
/// class 0, the rest class 1. Edges that would leave a node isolated are
/// repaired by swapping a degree>=2 node of the same class for the isolated
/// one, which preserves every per-edge class count exactly.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let npc = cfg.nodes_per_class;
    let n = npc * 2;

    let mut edges: Vec<Vec<u32>> = Vec::with_capacity(cfg.num_edges);
    for _ in 0..cfg.num_edges {
        let minority_class = usize::from(rng.random::<bool>());
        edges.push(draw_edge(&mut rng, npc, cfg.edge_size, cfg.alpha, minority_class));
    }

    repair_isolated(&mut rng, &mut edges, n, npc, 1000.max(8 * n))?;

    let labels: Vec<u32> = (0..n).map(|i| u32::from(i >= npc)).collect();
    let features = sample_features(&mut rng, cfg, &labels);
    let hypergraph = Hypergraph::new(n, edges)?;
    Ok(Dataset {
        hypergraph: std::sync::Arc::new(hypergraph),
        features: Some(features),
        labels: Some(labels),
        weights: None,
    })
}

/// One edge: `alpha` nodes without replacement from the minority class and
/// `size - alpha` from the other.
fn draw_edge(
    rng: &mut ChaCha8Rng,
    npc: usize,
    size: usize,
    alpha: usize,
    minority_class: usize,
) -> Vec<u32> {
    let mut edge = Vec::with_capacity(size);
    for class in 0..2 {
        let count = if class == minority_class { alpha } else { size - alpha };
        let base = class * npc;
        for idx in sample(rng, npc, count) {
            edge.push((base + idx) as u32);
        }
    }
    edge
}

/// Swap isolated nodes into existing edges in place of a same-class member
/// whose degree can afford the loss.
fn repair_isolated(
    rng: &mut ChaCha8Rng,
    edges: &mut [Vec<u32>],
    n: usize,
    npc: usize,
    budget: usize,
) -> Result<()> {
    let mut degree = vec![0u32; n];
    for e in edges.iter() {
        for &v in e {
            degree[v as usize] += 1;
        }
    }
    let mut tries = 0usize;
    loop {
        let Some(orphan) = degree.iter().position(|&d| d == 0) else {
            return Ok(());
        };
        let orphan_class = usize::from(orphan >= npc);
        loop {
            tries += 1;
            if tries > budget {
                return Err(Error::NoiseBudgetExhausted { tries: budget });
            }
            let e = rng.random_range(0..edges.len());
            // Pick a same-class member with degree >= 2 that the edge can spare.
            let candidates: Vec<usize> = edges[e]
                .iter()
                .enumerate()
                .filter(|(_, &v)| {
                    usize::from(v as usize >= npc) == orphan_class && degree[v as usize] >= 2
                })
                .map(|(pos, _)| pos)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let pos = candidates[rng.random_range(0..candidates.len())];
            let removed = edges[e][pos] as usize;
            degree[removed] -= 1;
            degree[orphan] += 1;
            edges[e][pos] = orphan as u32;
            edges[e].sort_unstable();
            break;
        }
    }
}

fn sample_features(rng: &mut ChaCha8Rng, cfg: &SbmConfig, labels: &[u32]) -> RawFeatures {
    let d = cfg.feature_dim;
    let normal = Normal::new(0.0, cfg.feature_std).expect("std must be finite positive");
    // Class means at +-(separation/2) along the normalized all-ones direction.
    let half = cfg.mean_separation / 2.0 / (d as f64).sqrt();
    let mut data = Vec::with_capacity(labels.len() * d);
    for &label in labels {
        let mean = if label == 0 { -half } else { half };
        for _ in 0..d {
            data.push(mean + normal.sample(rng));
        }
    }
    RawFeatures { data, n: labels.len(), d }
}

/// Fraction of same-label pairs among all member pairs, averaged over edges.
/// Strictly decreasing in alpha; used by the heterophily monotonicity check.
pub fn intra_edge_agreement(h: &Hypergraph, labels: &[u32]) -> f64 {
    let mut total = 0.0;
    for e in 0..h.num_edges() {
        let members = h.edge(e);
        let ones = members.iter().filter(|&&v| labels[v as usize] == 1).count();
        let zeros = members.len() - ones;
        let same = ones * ones.saturating_sub(1) / 2 + zeros * zeros.saturating_sub(1) / 2;
        let pairs = members.len() * (members.len() - 1) / 2;
        total += same as f64 / pairs as f64;
    }
    total / h.num_edges() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Gaussian,
    Uniform,
    Mask,
    Structure,
}

impl std::str::FromStr for NoiseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            "mask" => Ok(NoiseKind::Mask),
            "structure" => Ok(NoiseKind::Structure),
            other => Err(format!("unknown noise kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub rate: f64,
    pub seed: u64,
    /// Base sigma for Gaussian noise; the added noise is rate * sigma * N(0,1).
    pub sigma: f64,
}

impl NoiseConfig {
    pub fn new(kind: NoiseKind, rate: f64, seed: u64) -> Self {
        NoiseConfig { kind, rate, seed, sigma: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::InvalidConfig {
                message: format!("noise rate {} outside [0, 1]", self.rate),
            });
        }
        Ok(())
    }
}

/// Feature-level noise. Gaussian adds rate-scaled N(0, sigma^2); uniform adds
/// Unif(-delta, delta) with delta = rate; mask zeroes exactly
/// round(rate * entries) positions chosen uniformly.
pub fn apply_feature_noise(x: &RawFeatures, cfg: &NoiseConfig) -> Result<RawFeatures> {
    cfg.validate()?;
    if matches!(cfg.kind, NoiseKind::Structure) {
        return Err(Error::InvalidConfig {
            message: "structure noise applies to the hypergraph, not features".to_string(),
        });
    }
    let mut out = x.clone();
    if cfg.rate == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.kind {
        NoiseKind::Gaussian => {
            let normal = Normal::new(0.0, cfg.sigma).expect("sigma must be positive");
            for v in &mut out.data {
                *v += cfg.rate * normal.sample(&mut rng);
            }
        }
        NoiseKind::Uniform => {
            let delta = cfg.rate;
            for v in &mut out.data {
                *v += rng.random_range(-delta..=delta);
            }
        }
        NoiseKind::Mask => {
            let total = out.data.len();
            let count = (cfg.rate * total as f64).round() as usize;
            for idx in sample(&mut rng, total, count.min(total)) {
                out.data[idx] = 0.0;
            }
        }
        NoiseKind::Structure => unreachable!(),
    }
    Ok(out)
}

/// Structure-level noise: delete round(rate * m) edges uniformly and insert
/// the same number of random edges with sizes sampled from the original size
/// distribution. Isolation is repaired by swapping members of inserted
/// edges, within a bounded budget.
pub fn apply_structure_noise(h: &Hypergraph, cfg: &NoiseConfig) -> Result<Hypergraph> {
    cfg.validate()?;
    if !matches!(cfg.kind, NoiseKind::Structure) {
        return Err(Error::InvalidConfig {
            message: "feature noise applies to features, not the hypergraph".to_string(),
        });
    }
    if cfg.rate == 0.0 {
        return Ok(h.clone());
    }
    let m = h.num_edges();
    let n = h.num_nodes();
    let count = (cfg.rate * m as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut keep = vec![true; m];
    for idx in sample(&mut rng, m, count.min(m)) {
        keep[idx] = false;
    }
    let sizes: Vec<usize> = (0..m).map(|e| h.edge_size(e)).collect();
    let mut edges: Vec<Vec<u32>> = Vec::with_capacity(m);
    for (e, &kept) in keep.iter().enumerate() {
        if kept {
            edges.push(h.edge(e).to_vec());
        }
    }
    let inserted_from = edges.len();
    for _ in 0..count {
        let size = sizes[rng.random_range(0..m)];
        let edge: Vec<u32> = sample(&mut rng, n, size).into_iter().map(|v| v as u32).collect();
        edges.push(edge);
    }

    // Repair isolated nodes by swapping them into inserted edges only.
    let mut degree = vec![0u32; n];
    for e in &edges {
        for &v in e {
            degree[v as usize] += 1;
        }
    }
    let budget = 1000usize;
    let mut tries = 0usize;
    while let Some(orphan) = degree.iter().position(|&d| d == 0) {
        loop {
            tries += 1;
            if tries > budget {
                return Err(Error::NoiseBudgetExhausted { tries: budget });
            }
            if inserted_from >= edges.len() {
                return Err(Error::NoiseBudgetExhausted { tries });
            }
            let e = rng.random_range(inserted_from..edges.len());
            let candidates: Vec<usize> = edges[e]
                .iter()
                .enumerate()
                .filter(|(_, &v)| degree[v as usize] >= 2)
                .map(|(pos, _)| pos)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let pos = candidates[rng.random_range(0..candidates.len())];
            let removed = edges[e][pos] as usize;
            degree[removed] -= 1;
            degree[orphan] += 1;
            edges[e][pos] = orphan as u32;
            break;
        }
    }
    for e in &mut edges {
        e.sort_unstable();
    }
    Hypergraph::new(n, edges)
}
