//! Curvature-modulated feature dynamics: closed-form aggregation weights,
//! update-direction evaluation in edge-loop and matrix form, the explicit
//! Euler stepper with its stability certificate, and the diffusion driver.

use std::collections::HashMap;

use serde::Serialize;

use crate::curvature::{curvature, CurvatureConfig, CurvatureKind, CurvatureVector};
use crate::flow::{attribute_weight, dirichlet_energy, WeightRuleConfig};
use crate::hypergraph::{EdgeWeights, FeatureMatrix, Hypergraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KprimeSource {
    Analytic,
    Learned,
    Fixed,
}

/// Per-hyperedge aggregation weights kappa'.
#[derive(Debug, Clone)]
pub struct AggregationWeights {
    pub kprime: Vec<f64>,
    pub source: KprimeSource,
}

#[derive(Debug, Clone, Copy)]
pub struct DiffusionConfig {
    pub tau: f64,
    pub steps: usize,
    /// Ablation switch: with cosine off the per-pair factor is replaced by 1
    /// and the dynamics reduce to degree-normalized Laplacian smoothing.
    pub use_cosine: bool,
    /// Floor for 1 - (x^T m)^2 in the closed-form weights, in (0, 1].
    pub epsilon_denominator: f64,
    pub renormalize_each_step: bool,
    /// Run even when tau exceeds the step-0 stability bound.
    pub force: bool,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            tau: 0.1,
            steps: 10,
            use_cosine: true,
            epsilon_denominator: 0.01,
            renormalize_each_step: true,
            force: false,
        }
    }
}

/// Closed-form aggregation weights. With the scaling functions fixed to 1,
/// mu_e = -kappa_e w_e / |e|; per member i,
/// kappa'_ie = mu_e / (max(1 - (x_i^T m_ie)^2, eps) * S_e) with
/// S_e = sum_{i,j in e} 1/sqrt(d_i d_j) and m_ie the degree-weighted member
/// mean; the edge-level weight is the mean of kappa'_ie over i in e.
pub fn analytic_kprime(
    h: &Hypergraph,
    x: &FeatureMatrix,
    kappa: &CurvatureVector,
    w: &EdgeWeights,
    cfg: &DiffusionConfig,
) -> AggregationWeights {
    let d = x.d();
    let mut q = vec![0.0f64; d];
    let mut kprime = Vec::with_capacity(h.num_edges());
    for e in 0..h.num_edges() {
        q.iter_mut().for_each(|v| *v = 0.0);
        let mut s_edge = 0.0;
        for &j in h.edge(e) {
            let scale = 1.0 / f64::from(h.node_degree(j as usize)).sqrt();
            s_edge += scale;
            for (acc, v) in q.iter_mut().zip(x.row(j as usize)) {
                *acc += scale * v;
            }
        }
        let s_e = s_edge * s_edge;
        let mu = -kappa.kappa[e] * w[e] / h.edge_size(e) as f64;
        let mut acc = 0.0;
        for &i in h.edge(e) {
            let scale = 1.0 / f64::from(h.node_degree(i as usize)).sqrt();
            let dot: f64 = x.row(i as usize).iter().zip(&q).map(|(a, b)| a * b).sum();
            let xm = dot * scale / s_e;
            let den = (1.0 - xm * xm).max(cfg.epsilon_denominator);
            acc += mu / (den * s_e);
        }
        kprime.push(acc / h.edge_size(e) as f64);
    }
    AggregationWeights { kprime, source: KprimeSource::Analytic }
}

/// Independent straight-line evaluation of the closed form for one member of
/// one edge; no pooling tricks, kept as a cross-check oracle.
pub fn kprime_member_reference(
    h: &Hypergraph,
    x: &FeatureMatrix,
    kappa_e: f64,
    w_e: f64,
    e: usize,
    i: u32,
    epsilon_denominator: f64,
) -> f64 {
    let members = h.edge(e);
    let mut s_e = 0.0;
    for &a in members {
        for &b in members {
            let da = f64::from(h.node_degree(a as usize));
            let db = f64::from(h.node_degree(b as usize));
            s_e += 1.0 / (da * db).sqrt();
        }
    }
    let di = f64::from(h.node_degree(i as usize));
    let mut m_ie = vec![0.0f64; x.d()];
    for &j in members {
        let dj = f64::from(h.node_degree(j as usize));
        for (acc, v) in m_ie.iter_mut().zip(x.row(j as usize)) {
            *acc += v / (di * dj).sqrt();
        }
    }
    m_ie.iter_mut().for_each(|v| *v /= s_e);
    let xm: f64 = x.row(i as usize).iter().zip(&m_ie).map(|(a, b)| a * b).sum();
    let mu = -kappa_e * w_e / members.len() as f64;
    mu / ((1.0 - xm * xm).max(epsilon_denominator) * s_e)
}

fn cosine(xi: &[f64], xj: &[f64]) -> f64 {
    // Bitwise-equal rows short-circuit so that constant components produce
    // an exactly zero update.
    if xi == xj {
        return 1.0;
    }
    let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
    let ni: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nj: f64 = xj.iter().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (ni * nj)).clamp(-1.0, 1.0)
}

/// Update direction, edge-loop form:
/// row_i = sum_{e : i in e} -kappa'_e sum_{j in e}
///         (x_j - cos(x_i, x_j) x_i) / sqrt(d_i d_j).
/// With `use_cosine` off the cosine factor is replaced by 1.
pub fn node_update_direction(
    h: &Hypergraph,
    x: &FeatureMatrix,
    kw: &AggregationWeights,
    use_cosine: bool,
) -> Vec<f64> {
    let (n, d) = (x.n(), x.d());
    let mut out = vec![0.0f64; n * d];
    for e in 0..h.num_edges() {
        let kp = kw.kprime[e];
        if kp == 0.0 {
            continue;
        }
        let members = h.edge(e);
        for &i in members {
            let di = f64::from(h.node_degree(i as usize)).sqrt();
            let xi = x.row(i as usize);
            let row = &mut out[i as usize * d..(i as usize + 1) * d];
            for &j in members {
                let dj = f64::from(h.node_degree(j as usize)).sqrt();
                let xj = x.row(j as usize);
                let c = if use_cosine { cosine(xi, xj) } else { 1.0 };
                let scale = -kp / (di * dj);
                for (k, acc) in row.iter_mut().enumerate() {
                    *acc += scale * (xj[k] - c * xi[k]);
                }
            }
        }
    }
    out
}

/// Matrix-form operator F = diag((S o C) 1) - S with
/// S = D_v^{-1/2} H K' H^T D_v^{-1/2}, both S and C materialized only on
/// node pairs co-occurring in some hyperedge.
pub struct SparseOperator {
    pub n: usize,
    /// Upper-triangle pairs (i <= j) induced by hyperedges.
    pub pairs: Vec<(u32, u32)>,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    /// (S o C) 1 per node.
    pub diag_sc: Vec<f64>,
}

impl SparseOperator {
    /// F X = diag((S o C) 1) X - S X.
    pub fn apply(&self, x: &FeatureMatrix) -> Vec<f64> {
        let (n, d) = (x.n(), x.d());
        assert_eq!(n, self.n);
        let mut sx = vec![0.0f64; n * d];
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            let sv = self.s[idx];
            let (i, j) = (i as usize, j as usize);
            for k in 0..d {
                sx[i * d + k] += sv * x.row(j)[k];
            }
            if i != j {
                for k in 0..d {
                    sx[j * d + k] += sv * x.row(i)[k];
                }
            }
        }
        let mut out = vec![0.0f64; n * d];
        for i in 0..n {
            let g = self.diag_sc[i];
            for k in 0..d {
                out[i * d + k] = g * x.row(i)[k] - sx[i * d + k];
            }
        }
        out
    }

    /// max_i sum_j s_ij (signed row sums of S).
    pub fn max_row_sum(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            rows[i as usize] += self.s[idx];
            if i != j {
                rows[j as usize] += self.s[idx];
            }
        }
        rows.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Assemble S and C on hyperedge-induced pairs.
pub fn assemble_matrices(
    h: &Hypergraph,
    x: &FeatureMatrix,
    kw: &AggregationWeights,
    use_cosine: bool,
) -> SparseOperator {
    let n = h.num_nodes();
    let mut map: HashMap<(u32, u32), f64> = HashMap::new();
    for e in 0..h.num_edges() {
        let kp = kw.kprime[e];
        let members = h.edge(e);
        for (pa, &a) in members.iter().enumerate() {
            let da = f64::from(h.node_degree(a as usize)).sqrt();
            for &b in &members[pa..] {
                let db = f64::from(h.node_degree(b as usize)).sqrt();
                *map.entry((a, b)).or_insert(0.0) += kp / (da * db);
            }
        }
    }
    let mut pairs: Vec<(u32, u32)> = map.keys().copied().collect();
    pairs.sort_unstable();
    let mut s = Vec::with_capacity(pairs.len());
    let mut c = Vec::with_capacity(pairs.len());
    let mut diag_sc = vec![0.0f64; n];
    for &(i, j) in &pairs {
        let sv = map[&(i, j)];
        let cv = if use_cosine { cosine(x.row(i as usize), x.row(j as usize)) } else { 1.0 };
        s.push(sv);
        c.push(cv);
        diag_sc[i as usize] += sv * cv;
        if i != j {
            diag_sc[j as usize] += sv * cv;
        }
    }
    SparseOperator { n, pairs, s, c, diag_sc }
}

/// Stability certificate of the explicit Euler step: stable when
/// tau <= 1 / max_i sum_j s_ij. With mixed-sign aggregation weights the row
/// sums can be nonpositive, in which case the bound is reported as
/// inapplicable rather than guessed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityCertificate {
    pub max_row_sum: f64,
    pub tau_bound: Option<f64>,
    pub tau_used: f64,
    /// None when the bound is inapplicable.
    pub stable: Option<bool>,
}

/// Row sums of S computed directly from the incidence structure:
/// sum_j s_ij = sum_{e : i in e} kappa'_e sigma_e / sqrt(d_i) with
/// sigma_e = sum_{j in e} 1/sqrt(d_j).
pub fn stability_bound(h: &Hypergraph, kw: &AggregationWeights, tau_used: f64) -> StabilityCertificate {
    let sigma: Vec<f64> = (0..h.num_edges())
        .map(|e| {
            h.edge(e)
                .iter()
                .map(|&j| 1.0 / f64::from(h.node_degree(j as usize)).sqrt())
                .sum()
        })
        .collect();
    let mut max_row_sum = f64::NEG_INFINITY;
    for i in 0..h.num_nodes() {
        let di = f64::from(h.node_degree(i)).sqrt();
        let row: f64 =
            h.edges_of(i).iter().map(|&e| kw.kprime[e as usize] * sigma[e as usize]).sum::<f64>()
                / di;
        max_row_sum = max_row_sum.max(row);
    }
    let tau_bound = (max_row_sum > 0.0).then(|| 1.0 / max_row_sum);
    let stable = tau_bound.map(|b| tau_used <= b + 1e-15);
    StabilityCertificate { max_row_sum, tau_bound, tau_used, stable }
}

/// X <- X - tau * direction, optionally renormalizing rows afterwards.
pub fn euler_step(
    x: &FeatureMatrix,
    direction: &[f64],
    tau: f64,
    renormalize: bool,
) -> Result<FeatureMatrix> {
    assert!(tau > 0.0, "tau must be positive");
    let (n, d) = (x.n(), x.d());
    assert_eq!(direction.len(), n * d);
    let mut data = x.data().to_vec();
    for (v, g) in data.iter_mut().zip(direction) {
        *v -= tau * g;
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "euler step".to_string() });
        }
    }
    let mut out = x.clone();
    out.data_mut().copy_from_slice(&data);
    out.t = x.t + tau;
    if renormalize {
        out.renormalize_rows()?;
    }
    Ok(out)
}

/// Where the per-step aggregation weights come from.
pub enum KprimeProvider<'a> {
    /// Recompute attribute weights, curvature, and the closed form each step.
    Analytic { kind: CurvatureKind, curv: CurvatureConfig, weight: WeightRuleConfig },
    /// Constant vector (hypernet-free ablation, fuzz instances).
    Fixed(&'a [f64]),
    /// Arbitrary per-step source (the trained hypernet at inference).
    Callback(&'a mut dyn FnMut(usize, &FeatureMatrix) -> Result<AggregationWeights>),
}

/// Full record of one diffusion run.
#[derive(Debug, Clone)]
pub struct DiffusionTrace {
    pub times: Vec<f64>,
    /// Dirichlet energy at each recorded time (index 0 = initial state).
    pub energies: Vec<f64>,
    pub max_row_sums: Vec<f64>,
    /// Attribute weights per step, analytic mode only.
    pub weight_traj: Option<Vec<Vec<f64>>>,
    /// Curvature per step, analytic mode only.
    pub kappa_traj: Option<Vec<Vec<f64>>>,
    pub kprime_traj: Vec<Vec<f64>>,
    pub certificate: StabilityCertificate,
    pub snapshots: Vec<(usize, FeatureMatrix)>,
    pub final_x: FeatureMatrix,
}

impl DiffusionTrace {
    pub fn weight_min_max(&self) -> Option<Vec<(f64, f64)>> {
        self.weight_traj.as_ref().map(|traj| {
            traj.iter()
                .map(|w| {
                    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect()
        })
    }
}

/// Run `steps` Euler steps, recomputing aggregation weights each step, and
/// record energies, stability data, and requested snapshots. Refuses a step
/// size beyond the step-0 stability bound unless `force` is set; aborts on
/// divergence (norm growth beyond 1e6x) or non-finite values.
pub fn diffuse(
    h: &Hypergraph,
    x0: &FeatureMatrix,
    cfg: &DiffusionConfig,
    mut provider: KprimeProvider<'_>,
    snapshot_at: &[usize],
) -> Result<DiffusionTrace> {
    if !(cfg.epsilon_denominator > 0.0 && cfg.epsilon_denominator <= 1.0) {
        return Err(Error::InvalidConfig {
            message: format!(
                "epsilon_denominator {} outside (0, 1]",
                cfg.epsilon_denominator
            ),
        });
    }
    let mut x = x0.clone();
    let analytic = matches!(provider, KprimeProvider::Analytic { .. });
    let mut weight_traj = analytic.then(Vec::new);
    let mut kappa_traj = analytic.then(Vec::new);
    let mut kprime_traj = Vec::new();
    let mut energies = vec![dirichlet_energy(h, &x)];
    let mut times = vec![x.t];
    let mut max_row_sums = Vec::new();
    let mut snapshots = Vec::new();
    let mut certificate = None;
    let norm0: f64 = x.data().iter().map(|v| v * v).sum::<f64>().sqrt();

    if snapshot_at.contains(&0) {
        snapshots.push((0, x.clone()));
    }

    for step in 0..cfg.steps {
        let kw = match &mut provider {
            KprimeProvider::Analytic { kind, curv, weight } => {
                let w = attribute_weight(h, &x, weight)?;
                let kap = curvature(h, &w, *kind, curv)?;
                let kw = analytic_kprime(h, &x, &kap, &w, cfg);
                if let Some(traj) = weight_traj.as_mut() {
                    traj.push(w.as_slice().to_vec());
                }
                if let Some(traj) = kappa_traj.as_mut() {
                    traj.push(kap.kappa.clone());
                }
                kw
            }
            KprimeProvider::Fixed(vals) => {
                AggregationWeights { kprime: vals.to_vec(), source: KprimeSource::Fixed }
            }
            KprimeProvider::Callback(f) => f(step, &x)?,
        };
        let cert = stability_bound(h, &kw, cfg.tau);
        if step == 0 {
            if let Some(bound) = cert.tau_bound {
                if cfg.tau > bound && !cfg.force {
                    return Err(Error::UnstableTau { tau: cfg.tau, bound });
                }
            }
            certificate = Some(cert);
        }
        max_row_sums.push(cert.max_row_sum);
        kprime_traj.push(kw.kprime.clone());

        let direction = node_update_direction(h, &x, &kw, cfg.use_cosine);
        x = euler_step(&x, &direction, cfg.tau, cfg.renormalize_each_step)
            .map_err(|_| Error::Diverged { step, reason: "non-finite value".to_string() })?;

        let norm: f64 = x.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1e6 * norm0.max(1.0) {
            return Err(Error::Diverged { step, reason: format!("norm {norm}") });
        }
        energies.push(dirichlet_energy(h, &x));
        times.push(x.t);
        if snapshot_at.contains(&(step + 1)) {
            snapshots.push((step + 1, x.clone()));
        }
    }

    // Close the per-step trajectories with the terminal state so they align
    // with `times` on a common grid.
    if let (Some(wt), Some(kt)) = (weight_traj.as_mut(), kappa_traj.as_mut()) {
        if let KprimeProvider::Analytic { kind, curv, weight } = &provider {
            let w = attribute_weight(h, &x, weight)?;
            let kap = curvature(h, &w, *kind, curv)?;
            wt.push(w.as_slice().to_vec());
            kt.push(kap.kappa);
        }
    }

    let certificate = certificate.unwrap_or(StabilityCertificate {
        max_row_sum: f64::NEG_INFINITY,
        tau_bound: None,
        tau_used: cfg.tau,
        stable: None,
    });

    Ok(DiffusionTrace {
        times,
        energies,
        max_row_sums,
        weight_traj,
        kappa_traj,
        kprime_traj,
        certificate,
        snapshots,
        final_x: x,
    })
}
