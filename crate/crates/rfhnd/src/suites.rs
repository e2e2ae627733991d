//! Experiment drivers behind the CLI: over-smoothing depth sweeps, noise
//! robustness sweeps, and the per-step complexity probe. Every suite is a
//! pure function of its config and seed; the CLI writes the rows to CSV with
//! a metadata sidecar.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::curvature::{curvature, CurvatureConfig, CurvatureKind};
use crate::diffusion::{analytic_kprime, euler_step, node_update_direction, DiffusionConfig};
use crate::flow::{attribute_weight, WeightRuleConfig};
use crate::hypergraph::{Dataset, RawFeatures};
use crate::neural::{make_split, train_with_split, ModelKind, TrainConfig};
use crate::synthgen::{
    apply_feature_noise, apply_structure_noise, generate_sbm, NoiseConfig, NoiseKind, SbmConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct OversmoothRow {
    pub model: String,
    pub depth: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct OversmoothConfig {
    pub sbm: SbmConfig,
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// Fixed integration span for the diffusion model: per-depth step size
    /// is total_time / depth, so deeper runs refine the same flow. None
    /// keeps the configured tau at every depth. The baseline's depth is a
    /// stacked-layer count either way.
    pub total_time: Option<f64>,
}

impl Default for OversmoothConfig {
    fn default() -> Self {
        OversmoothConfig {
            sbm: SbmConfig { nodes_per_class: 500, num_edges: 200, alpha: 2, ..Default::default() },
            depths: vec![2, 4, 10, 20, 30, 40],
            seeds: vec![0, 1, 2],
            train: TrainConfig::default(),
            total_time: Some(0.5),
        }
    }
}

/// For each depth, train both models and record test accuracy and the
/// Dirichlet energy of the terminal embedding. A depth-0 row per model
/// carries the energy of the raw input features.
pub fn run_oversmooth(cfg: &OversmoothConfig) -> Result<Vec<OversmoothRow>> {
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let sbm = SbmConfig { seed, ..cfg.sbm.clone() };
        let ds = generate_sbm(&sbm)?;
        let features = ds.features.as_ref().expect("generator emits features");
        let labels = ds.labels.as_ref().expect("generator emits labels");
        let split = make_split(ds.hypergraph.num_nodes(), cfg.train.split, seed);
        for (model, kind) in
            [("rfhnd", ModelKind::Rfhnd), ("baseline", ModelKind::MeanAggBaseline)]
        {
            for (pos, &depth) in cfg.depths.iter().enumerate() {
                let tau = match (kind, cfg.total_time) {
                    (ModelKind::Rfhnd, Some(total)) => total / depth as f64,
                    _ => cfg.train.tau,
                };
                let tc = TrainConfig { kind, steps: depth, seed, tau, ..cfg.train };
                let (_, metrics) =
                    train_with_split(&ds.hypergraph, features, labels, &tc, &split)?;
                if pos == 0 {
                    rows.push(OversmoothRow {
                        model: model.to_string(),
                        depth: 0,
                        seed,
                        accuracy: f64::NAN,
                        energy: metrics.input_energy,
                    });
                }
                rows.push(OversmoothRow {
                    model: model.to_string(),
                    depth,
                    seed,
                    accuracy: metrics.test_accuracy,
                    energy: metrics.terminal_energy,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessRow {
    pub model: String,
    pub kind: String,
    pub rate: f64,
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct RobustnessConfig {
    pub sbm: SbmConfig,
    pub kinds: Vec<NoiseKind>,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            sbm: SbmConfig { nodes_per_class: 500, num_edges: 200, alpha: 2, ..Default::default() },
            kinds: vec![
                NoiseKind::Gaussian,
                NoiseKind::Uniform,
                NoiseKind::Mask,
                NoiseKind::Structure,
            ],
            rates: vec![0.1, 0.2, 0.3, 0.4],
            seeds: (0..5).collect(),
            train: TrainConfig::default(),
        }
    }
}

/// Noise sweep: perturb the dataset, retrain, record test accuracy.
pub fn run_robustness(cfg: &RobustnessConfig) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let sbm = SbmConfig { seed, ..cfg.sbm.clone() };
        let clean = generate_sbm(&sbm)?;
        let labels = clean.labels.as_ref().expect("labels");
        for &kind in &cfg.kinds {
            for &rate in &cfg.rates {
                let noise = NoiseConfig::new(kind, rate, seed ^ 0x0004_01ce);
                let (h, features) = match kind {
                    NoiseKind::Structure => {
                        let h = apply_structure_noise(&clean.hypergraph, &noise)?;
                        (Arc::new(h), clean.features.clone().expect("features"))
                    }
                    _ => {
                        let f = apply_feature_noise(
                            clean.features.as_ref().expect("features"),
                            &noise,
                        )?;
                        (Arc::clone(&clean.hypergraph), f)
                    }
                };
                let split = make_split(h.num_nodes(), cfg.train.split, seed);
                for (model, mk) in
                    [("rfhnd", ModelKind::Rfhnd), ("baseline", ModelKind::MeanAggBaseline)]
                {
                    let tc = TrainConfig { kind: mk, seed, ..cfg.train };
                    let (_, metrics) = train_with_split(&h, &features, labels, &tc, &split)?;
                    rows.push(RobustnessRow {
                        model: model.to_string(),
                        kind: format!("{kind:?}").to_lowercase(),
                        rate,
                        seed,
                        accuracy: metrics.test_accuracy,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Mean and population standard deviation of accuracy per
/// (model, kind, rate) group.
pub fn summarize_robustness(rows: &[RobustnessRow]) -> Vec<(String, String, f64, f64, f64)> {
    let mut keys: Vec<(String, String, f64)> =
        rows.iter().map(|r| (r.model.clone(), r.kind.clone(), r.rate)).collect();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keys.dedup();
    keys.into_iter()
        .map(|(model, kind, rate)| {
            let accs: Vec<f64> = rows
                .iter()
                .filter(|r| r.model == model && r.kind == kind && r.rate == rate)
                .map(|r| r.accuracy)
                .collect();
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            let var =
                accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64;
            (model, kind, rate, mean, var.sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityRow {
    pub m: usize,
    pub seconds_per_step: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone)]
pub struct ComplexityConfig {
    pub edge_counts: Vec<usize>,
    pub nodes_per_class: usize,
    pub edge_size: usize,
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        ComplexityConfig {
            edge_counts: vec![250, 500, 1000, 2000, 4000],
            nodes_per_class: 500,
            edge_size: 15,
            feature_dim: 16,
            seed: 0,
        }
    }
}

/// Wall time of one full analytic diffusion step (attribute weights, Forman
/// curvature, closed-form aggregation weights, update direction, Euler) as a
/// function of the hyperedge count, with bounded edge size. Returns the rows
/// and the fitted log-log slope.
pub fn run_complexity(cfg: &ComplexityConfig) -> Result<(Vec<ComplexityRow>, f64)> {
    let mut rows = Vec::new();
    for &m in &cfg.edge_counts {
        if m == 0 {
            return Err(Error::EmptyHypergraph);
        }
        let sbm = SbmConfig {
            nodes_per_class: cfg.nodes_per_class,
            num_edges: m,
            edge_size: cfg.edge_size,
            alpha: 2,
            feature_dim: cfg.feature_dim,
            seed: cfg.seed,
            ..Default::default()
        };
        let ds = generate_sbm(&sbm)?;
        let h = &ds.hypergraph;
        let x = ds.features.clone().expect("features").into_unit()?;
        let wcfg = WeightRuleConfig::default();
        let dcfg = DiffusionConfig::default();
        let ccfg = CurvatureConfig::default();
        // Repeats sized so each measurement covers ~2e7 pair operations.
        let repeats = (20_000_000 / (m * cfg.edge_size * cfg.edge_size * cfg.feature_dim))
            .clamp(3, 200);
        let _ = one_step(h, &x, &wcfg, &ccfg, &dcfg)?;
        let start = Instant::now();
        for _ in 0..repeats {
            let _ = one_step(h, &x, &wcfg, &ccfg, &dcfg)?;
        }
        let seconds_per_step = start.elapsed().as_secs_f64() / repeats as f64;
        rows.push(ComplexityRow { m, seconds_per_step, repeats });
    }
    let slope = log_log_slope(
        &rows.iter().map(|r| r.m as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.seconds_per_step).collect::<Vec<_>>(),
    );
    Ok((rows, slope))
}

fn one_step(
    h: &crate::hypergraph::Hypergraph,
    x: &crate::hypergraph::FeatureMatrix,
    wcfg: &WeightRuleConfig,
    ccfg: &CurvatureConfig,
    dcfg: &DiffusionConfig,
) -> Result<crate::hypergraph::FeatureMatrix> {
    let w = attribute_weight(h, x, wcfg)?;
    let kap = curvature(h, &w, CurvatureKind::Forman, ccfg)?;
    let kw = analytic_kprime(h, x, &kap, &w, dcfg);
    let dir = node_update_direction(h, x, &kw, dcfg.use_cosine);
    euler_step(x, &dir, 0.01, true)
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// CSV with a header row; fields are Display-formatted ('.' decimal).
pub fn write_csv(path: impl AsRef<Path>, header: &str, lines: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(lines.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Metadata sidecar next to a CSV: git hash, full config echo, seed.
pub fn write_metadata(path: impl AsRef<Path>, config: serde_json::Value, seed: u64) -> Result<()> {
    let path = path.as_ref();
    let meta = serde_json::json!({
        "git_hash": git_hash(),
        "config": config,
        "seed": seed,
    });
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Load a dataset or generate one from the alpha knob when no file is given.
pub fn dataset_or_generated(dataset: Option<&Path>, alpha: usize, seed: u64) -> Result<Dataset> {
    match dataset {
        Some(path) => Dataset::load(path),
        None => generate_sbm(&SbmConfig { alpha, seed, ..Default::default() }),
    }
}

/// Raw features are mandatory for the feature-driven commands.
pub fn require_features(ds: &Dataset) -> Result<&RawFeatures> {
    ds.features.as_ref().ok_or(Error::InvalidConfig {
        message: "dataset carries no features; generate with `gen` or add a features CSV"
            .to_string(),
    })
}
