//! Attribute-coupled hyperedge weights, Dirichlet energy, discrete Ricci
//! flow on the weights, and the energy/convergence certificates attached to
//! a flow trajectory.

use serde::Serialize;

use crate::curvature::{curvature, CurvatureConfig, CurvatureKind};
use crate::hypergraph::{EdgeWeights, FeatureMatrix, Hypergraph};
use crate::{Error, Result};

/// How the double sum over edge members is read in the weight rule.
/// `OrderedWithDiagonal` is the default: i and j range independently,
/// including i = j, which puts the all-identical-features case exactly at
/// 2 + epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairConvention {
    OrderedWithDiagonal,
    UnorderedStrict,
}

#[derive(Debug, Clone, Copy)]
pub struct WeightRuleConfig {
    /// Floor of the weight rule; weights live in [epsilon, 2 + epsilon].
    pub epsilon: f64,
    pub pair_convention: PairConvention,
}

impl Default for WeightRuleConfig {
    fn default() -> Self {
        WeightRuleConfig { epsilon: 0.1, pair_convention: PairConvention::OrderedWithDiagonal }
    }
}

impl WeightRuleConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        WeightRuleConfig { epsilon, ..Default::default() }
    }
}

/// Structure constants of one hyperedge under the ordered-with-diagonal
/// convention: alpha_e = (1/|e|) sum_{i,j in e} 1/sqrt(d_i d_j) and
/// c_e = sum_{i,j in e} (1/(2|e|)) (1/d_i + 1/d_j) + (1 + eps) alpha_e.
/// Both sums collapse: the first factorizes as (sum_i 1/sqrt(d_i))^2, the
/// second telescopes to sum_i 1/d_i.
pub fn edge_constants(h: &Hypergraph, e: usize, epsilon: f64) -> (f64, f64) {
    let mut sum_inv_sqrt = 0.0;
    let mut sum_inv = 0.0;
    for &i in h.edge(e) {
        let d = f64::from(h.node_degree(i as usize));
        sum_inv_sqrt += 1.0 / d.sqrt();
        sum_inv += 1.0 / d;
    }
    let alpha = sum_inv_sqrt * sum_inv_sqrt / h.edge_size(e) as f64;
    let c = sum_inv + (1.0 + epsilon) * alpha;
    (alpha, c)
}

/// Attribute weight rule:
/// w_e = (1/alpha_e) (1/|e|) sum_{i,j in e} cos(x_i, x_j)/sqrt(d_i d_j) + 1 + eps.
/// Rows of `x` must be unit-norm, which keeps w_e inside [eps, 2 + eps].
pub fn attribute_weight(
    h: &Hypergraph,
    x: &FeatureMatrix,
    cfg: &WeightRuleConfig,
) -> Result<EdgeWeights> {
    if x.n() != h.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: format!("{} feature rows for {} nodes", x.n(), h.num_nodes()),
        });
    }
    let d = x.d();
    let mut q = vec![0.0f64; d];
    let mut w = Vec::with_capacity(h.num_edges());
    for e in 0..h.num_edges() {
        q.iter_mut().for_each(|v| *v = 0.0);
        let mut sum_inv_sqrt = 0.0;
        let mut diag_cos = 0.0;
        let mut diag_norm = 0.0;
        for &i in h.edge(e) {
            let deg = f64::from(h.node_degree(i as usize));
            let scale = 1.0 / deg.sqrt();
            sum_inv_sqrt += scale;
            diag_cos += 1.0 / deg;
            diag_norm += 1.0 / deg;
            for (acc, v) in q.iter_mut().zip(x.row(i as usize)) {
                *acc += scale * v;
            }
        }
        // Ordered double sums factorize through the pooled vector q_e.
        let num = q.iter().map(|v| v * v).sum::<f64>();
        let den = sum_inv_sqrt * sum_inv_sqrt;
        let ratio = match cfg.pair_convention {
            PairConvention::OrderedWithDiagonal => num / den,
            PairConvention::UnorderedStrict => (num - diag_cos) / (den - diag_norm),
        };
        w.push(ratio + 1.0 + cfg.epsilon);
    }
    EdgeWeights::new(w)
}

/// Dirichlet energy
/// E(X) = (1/2) sum_e sum_{i,j in e} (1/|e|) || x_i/sqrt(d_i) - x_j/sqrt(d_j) ||^2,
/// evaluated per edge as sum_i ||u_i||^2 - ||sum_i u_i||^2 / |e| with
/// u_i = x_i / sqrt(d_i).
pub fn dirichlet_energy(h: &Hypergraph, x: &FeatureMatrix) -> f64 {
    dirichlet_energy_raw(h, x.data(), x.n(), x.d())
}

/// Same energy on a raw row-major buffer (rows need not be unit-norm).
pub fn dirichlet_energy_raw(h: &Hypergraph, data: &[f64], n: usize, d: usize) -> f64 {
    assert_eq!(data.len(), n * d);
    assert_eq!(n, h.num_nodes());
    let mut q = vec![0.0f64; d];
    let mut total = 0.0;
    for e in 0..h.num_edges() {
        q.iter_mut().for_each(|v| *v = 0.0);
        let mut norms = 0.0;
        for &i in h.edge(e) {
            let deg = f64::from(h.node_degree(i as usize));
            let scale = 1.0 / deg.sqrt();
            let row = &data[i as usize * d..(i as usize + 1) * d];
            let mut sq = 0.0;
            for (acc, v) in q.iter_mut().zip(row) {
                *acc += scale * v;
                sq += v * v;
            }
            norms += sq / deg;
        }
        total += norms - q.iter().map(|v| v * v).sum::<f64>() / h.edge_size(e) as f64;
    }
    total
}

/// Gap of the algebraic bridge E(X) = sum_e (c_e - alpha_e w_e(X)); exact up
/// to rounding under the ordered-with-diagonal convention.
pub fn energy_identity_gap(h: &Hypergraph, x: &FeatureMatrix, cfg: &WeightRuleConfig) -> Result<f64> {
    let w = attribute_weight(h, x, cfg)?;
    let e = dirichlet_energy(h, x);
    let mut rhs = 0.0;
    for eid in 0..h.num_edges() {
        let (alpha, c) = edge_constants(h, eid, cfg.epsilon);
        rhs += c - alpha * w[eid];
    }
    Ok((e - rhs).abs())
}

/// One explicit Euler step of the weight flow dw_e/dt = -kappa_e w_e.
/// Positivity is guarded: a step that would drive any weight nonpositive is
/// rejected with the offending edge and the largest admissible dt.
pub fn weight_flow_step(w: &EdgeWeights, kappa: &[f64], dt: f64) -> Result<EdgeWeights> {
    assert!(dt > 0.0, "dt must be positive");
    assert_eq!(w.len(), kappa.len());
    let mut max_dt = f64::INFINITY;
    for &k in kappa {
        if k > 0.0 {
            max_dt = max_dt.min(1.0 / k);
        }
    }
    let mut out = Vec::with_capacity(w.len());
    for (e, &k) in kappa.iter().enumerate() {
        let factor = 1.0 - dt * k;
        if factor <= 0.0 {
            return Err(Error::FlowStepTooLarge { edge: e, dt, max_dt });
        }
        out.push(w[e] * factor);
    }
    EdgeWeights::new(out)
}

/// Trajectory of the pure weight flow with curvature recomputed each step.
#[derive(Debug, Clone)]
pub struct WeightFlowTrace {
    pub times: Vec<f64>,
    /// weights[k][e] = w_e at times[k].
    pub weights: Vec<Vec<f64>>,
    /// kappas[k][e] = kappa_e at times[k].
    pub kappas: Vec<Vec<f64>>,
    /// Set when the positivity guard stopped the flow early.
    pub aborted: Option<String>,
}

impl WeightFlowTrace {
    pub fn max_abs_kappa(&self) -> Vec<f64> {
        self.kappas
            .iter()
            .map(|k| k.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
            .collect()
    }
}

/// Integrate dw/dt = -kappa(w) w for `steps` steps of size `dt`, recomputing
/// the chosen curvature from the current weights at every step.
pub fn simulate_weight_flow(
    h: &Hypergraph,
    w0: &EdgeWeights,
    kind: CurvatureKind,
    curv_cfg: &CurvatureConfig,
    dt: f64,
    steps: usize,
) -> Result<WeightFlowTrace> {
    let mut w = w0.clone();
    let mut trace = WeightFlowTrace {
        times: vec![0.0],
        weights: vec![w.as_slice().to_vec()],
        kappas: Vec::new(),
        aborted: None,
    };
    let k0 = curvature(h, &w, kind, curv_cfg)?;
    trace.kappas.push(k0.kappa.clone());
    let mut kappa = k0.kappa;
    for step in 0..steps {
        match weight_flow_step(&w, &kappa, dt) {
            Ok(next) => w = next,
            Err(err) => {
                trace.aborted = Some(format!("step {step}: {err}"));
                break;
            }
        }
        trace.times.push((step + 1) as f64 * dt);
        trace.weights.push(w.as_slice().to_vec());
        kappa = curvature(h, &w, kind, curv_cfg)?.kappa;
        trace.kappas.push(kappa.clone());
    }
    Ok(trace)
}

/// Which form of the energy bound a report certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundForm {
    /// All weights monotone over the window: the sharp form applies.
    Monotone,
    /// Some weight oscillates: the general bound built from the minimum
    /// monotone interval applies. Note that its derivation replaces |kappa|
    /// by its window mean inside one integral, so it is an approximate
    /// certificate.
    General,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeCertificate {
    pub rho: f64,
    pub zeta: f64,
    pub c: f64,
    pub alpha: f64,
}

/// Dirichlet-energy trajectory plus the bound certificates B1 >= mean >= B2.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Trapezoid time average of the energy over the window.
    pub mean_energy: f64,
    pub b1: f64,
    pub b2: f64,
    pub form: BoundForm,
    pub all_monotone: bool,
    /// Monotone-form lower bound; a pure structure constant, positive
    /// exactly when some hyperedge mixes node degrees.
    pub b2_structural: f64,
    pub epsilon: f64,
    pub per_edge: Vec<EdgeCertificate>,
}

/// Build the energy-bound certificate from a weight trajectory and
/// the matching energy samples on a common uniform grid.
pub fn energy_bounds(
    h: &Hypergraph,
    times: &[f64],
    weight_traj: &[Vec<f64>],
    energy_traj: &[f64],
    epsilon: f64,
) -> Result<EnergyReport> {
    if times.len() < 3 {
        return Err(Error::InvalidConfig {
            message: format!("energy window has {} samples, need at least 3", times.len()),
        });
    }
    if times.len() != weight_traj.len() || times.len() != energy_traj.len() {
        return Err(Error::DimensionMismatch {
            context: "trajectory lengths disagree".to_string(),
        });
    }
    let m = h.num_edges();
    let span = times[times.len() - 1] - times[0];
    let mut per_edge = Vec::with_capacity(m);
    let mut all_monotone = true;
    let mut sum_alpha = 0.0;
    let mut sum_inv_deg = 0.0;
    let mut rho_max: f64 = 1.0;
    let mut b1_general = 0.0;
    let mut b2_general = 0.0;
    for e in 0..m {
        let series: Vec<f64> = weight_traj.iter().map(|w| w[e]).collect();
        let (rho, zeta, monotone) = segment_stats(times, &series);
        all_monotone &= monotone;
        let (alpha, c) = edge_constants(h, e, epsilon);
        sum_alpha += alpha;
        sum_inv_deg += h.edge(e).iter().map(|&i| 1.0 / f64::from(h.node_degree(i as usize))).sum::<f64>();
        rho_max = rho_max.max(rho);
        b1_general += span * c * rho / zeta - alpha * epsilon * rho;
        b2_general += c - (2.0 + epsilon) * alpha * span / zeta;
        per_edge.push(EdgeCertificate { rho, zeta, c, alpha });
    }
    let b2_structural = sum_inv_deg - sum_alpha;
    let (b1, b2, form) = if all_monotone {
        (rho_max * (sum_inv_deg + sum_alpha), b2_structural, BoundForm::Monotone)
    } else {
        (b1_general, b2_general, BoundForm::General)
    };
    let mean_energy = trapezoid_mean(times, energy_traj);
    Ok(EnergyReport {
        times: times.to_vec(),
        energy: energy_traj.to_vec(),
        mean_energy,
        b1,
        b2,
        form,
        all_monotone,
        b2_structural,
        epsilon,
        per_edge,
    })
}

/// (rho, zeta, monotone) of one weight series: max/min ratio, shortest
/// monotone interval, and whether the whole window is monotone. Sign changes
/// are detected on discrete differences with a 1e-10 dead-band.
fn segment_stats(times: &[f64], series: &[f64]) -> (f64, f64, bool) {
    const DEAD_BAND: f64 = 1e-10;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let rho = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let mut breakpoints = vec![times[0]];
    let mut prev_sign = 0i8;
    for k in 0..series.len() - 1 {
        let diff = series[k + 1] - series[k];
        let sign = if diff > DEAD_BAND {
            1
        } else if diff < -DEAD_BAND {
            -1
        } else {
            0
        };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                breakpoints.push(times[k]);
            }
            prev_sign = sign;
        }
    }
    breakpoints.push(times[times.len() - 1]);
    let monotone = breakpoints.len() == 2;
    let mut zeta = f64::INFINITY;
    for pair in breakpoints.windows(2) {
        zeta = zeta.min(pair[1] - pair[0]);
    }
    (rho, zeta.max(f64::MIN_POSITIVE), monotone)
}

fn trapezoid_mean(times: &[f64], values: &[f64]) -> f64 {
    let span = times[times.len() - 1] - times[0];
    if span <= 0.0 {
        return values[0];
    }
    let mut acc = 0.0;
    for k in 0..values.len() - 1 {
        acc += 0.5 * (values[k] + values[k + 1]) * (times[k + 1] - times[k]);
    }
    acc / span
}

/// Convergence monitoring of |kappa_e(t)| against a threshold delta.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub delta: f64,
    pub epsilon: f64,
    /// Largest |d kappa| / |d w| ratio seen between consecutive samples; an
    /// estimate, never asserted to be the true modulus.
    pub l_estimate: Option<f64>,
    /// Constant actually used for the bound (supplied, else the estimate).
    pub l_used: Option<f64>,
    /// Whether |kappa(t2)-kappa(t1)| >= L |w(t2)-w(t1)| held on every
    /// consecutive sample pair at the used constant.
    pub hypothesis_holds: bool,
    /// Hitting-time bound ln((2L+delta)/(delta(2+eps)))/(L eps - delta);
    /// None when L eps <= delta makes it inapplicable.
    pub bound: Option<f64>,
    /// Per-edge first time |kappa_e| <= delta, linearly interpolated between
    /// samples; None when never reached.
    pub hit_times: Vec<Option<f64>>,
    pub max_abs_trace: Vec<f64>,
}

impl ConvergenceReport {
    /// Latest per-edge hit, when every edge reached the threshold.
    pub fn global_hit_time(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for h in &self.hit_times {
            worst = worst.max((*h)?);
        }
        Some(worst)
    }
}

/// Largest constant L for which |dkappa| >= L |dw| holds on every
/// consecutive sample pair of the trajectory (the empirically supported
/// reverse-Lipschitz constant). None when no pair moves.
pub fn empirical_reverse_lipschitz(kappa_traj: &[Vec<f64>], weight_traj: &[Vec<f64>]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for k in 0..kappa_traj.len().saturating_sub(1) {
        for e in 0..kappa_traj[k].len() {
            let dw = (weight_traj[k + 1][e] - weight_traj[k][e]).abs();
            let dk = (kappa_traj[k + 1][e] - kappa_traj[k][e]).abs();
            if dw > 1e-14 {
                let ratio = dk / dw;
                best = Some(match best {
                    Some(b) => b.min(ratio),
                    None => ratio,
                });
            }
        }
    }
    best
}

pub fn convergence_monitor(
    times: &[f64],
    kappa_traj: &[Vec<f64>],
    weight_traj: &[Vec<f64>],
    delta: f64,
    epsilon: f64,
    l_supplied: Option<f64>,
) -> Result<ConvergenceReport> {
    if delta <= 0.0 {
        return Err(Error::InvalidConfig { message: "delta must be positive".to_string() });
    }
    if times.len() != kappa_traj.len() {
        return Err(Error::DimensionMismatch { context: "kappa trajectory length".to_string() });
    }
    let m = kappa_traj.first().map_or(0, Vec::len);

    let mut l_estimate: Option<f64> = None;
    for k in 0..kappa_traj.len().saturating_sub(1) {
        for e in 0..m {
            let dw = (weight_traj[k + 1][e] - weight_traj[k][e]).abs();
            let dk = (kappa_traj[k + 1][e] - kappa_traj[k][e]).abs();
            if dw > 1e-14 {
                let ratio = dk / dw;
                l_estimate = Some(l_estimate.map_or(ratio, |b: f64| b.max(ratio)));
            }
        }
    }
    let l_used = l_supplied.or(l_estimate);

    let hypothesis_holds = match l_used {
        Some(l) => {
            let mut ok = true;
            'outer: for k in 0..kappa_traj.len().saturating_sub(1) {
                for e in 0..m {
                    let dw = (weight_traj[k + 1][e] - weight_traj[k][e]).abs();
                    let dk = (kappa_traj[k + 1][e] - kappa_traj[k][e]).abs();
                    if dk + 1e-12 < l * dw * (1.0 - 1e-9) {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            ok
        }
        None => false,
    };

    let bound = l_used.and_then(|l| {
        (l * epsilon > delta)
            .then(|| ((2.0 * l + delta) / (delta * (2.0 + epsilon))).ln() / (l * epsilon - delta))
    });

    let mut hit_times = Vec::with_capacity(m);
    for e in 0..m {
        let mut hit = None;
        for k in 0..kappa_traj.len() {
            let a = kappa_traj[k][e].abs();
            if a <= delta {
                hit = Some(if k == 0 {
                    times[0]
                } else {
                    let prev = kappa_traj[k - 1][e].abs();
                    if prev <= delta {
                        times[k - 1]
                    } else {
                        // Linear interpolation of the |kappa| = delta crossing.
                        times[k - 1] + (times[k] - times[k - 1]) * (prev - delta) / (prev - a)
                    }
                });
                break;
            }
        }
        hit_times.push(hit);
    }

    let max_abs_trace = kappa_traj
        .iter()
        .map(|k| k.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        .collect();

    Ok(ConvergenceReport {
        delta,
        epsilon,
        l_estimate,
        l_used,
        hypothesis_holds,
        bound,
        hit_times,
        max_abs_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::FeatureMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Hypergraph {
        Hypergraph::new(5, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![0, 4]]).unwrap()
    }

    fn random_unit_features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        FeatureMatrix::from_raw(data, n, d).unwrap()
    }

    #[test]
    fn identical_features_hit_ceiling() {
        let h = toy();
        let data: Vec<f64> = std::iter::repeat([0.6, 0.8]).take(5).flatten().collect();
        let x = FeatureMatrix::from_unit(data, 5, 2, 0.0).unwrap();
        let cfg = WeightRuleConfig::with_epsilon(0.05);
        let w = attribute_weight(&h, &x, &cfg).unwrap();
        for e in 0..h.num_edges() {
            assert!((w[e] - 2.05).abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_pair_lands_at_one_plus_eps() {
        // |e| = 2, unit degrees, antipodal features: the diagonal cosine
        // terms cancel the off-diagonal -1 terms under the ordered reading.
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let x = FeatureMatrix::from_unit(vec![1.0, 0.0, -1.0, 0.0], 2, 2, 0.0).unwrap();
        let cfg = WeightRuleConfig::with_epsilon(0.1);
        let w = attribute_weight(&h, &x, &cfg).unwrap();
        assert!((w[0] - 1.1).abs() < 1e-12);
        // The strict convention has no diagonal to cancel and hits the floor.
        let strict = WeightRuleConfig {
            epsilon: 0.1,
            pair_convention: PairConvention::UnorderedStrict,
        };
        let w = attribute_weight(&h, &x, &strict).unwrap();
        assert!((w[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn weight_range_on_random_draws() {
        let h = toy();
        let cfg = WeightRuleConfig::with_epsilon(0.1);
        for seed in 0..200 {
            let x = random_unit_features(5, 3, seed);
            let w = attribute_weight(&h, &x, &cfg).unwrap();
            for e in 0..h.num_edges() {
                assert!(w[e] >= cfg.epsilon - 1e-12 && w[e] <= 2.0 + cfg.epsilon + 1e-12);
            }
        }
    }

    #[test]
    fn energy_zero_for_identical_features_on_regular() {
        // 2-regular ring, identical rows.
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]).unwrap();
        assert!(h.is_regular());
        let data: Vec<f64> = std::iter::repeat([1.0, 0.0]).take(4).flatten().collect();
        let x = FeatureMatrix::from_unit(data, 4, 2, 0.0).unwrap();
        assert!(dirichlet_energy(&h, &x).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_pair_loop() {
        let h = toy();
        let x = random_unit_features(5, 4, 7);
        let fast = dirichlet_energy(&h, &x);
        let mut slow = 0.0;
        for e in 0..h.num_edges() {
            for &i in h.edge(e) {
                for &j in h.edge(e) {
                    let (di, dj) = (
                        f64::from(h.node_degree(i as usize)).sqrt(),
                        f64::from(h.node_degree(j as usize)).sqrt(),
                    );
                    let diff: f64 = x
                        .row(i as usize)
                        .iter()
                        .zip(x.row(j as usize))
                        .map(|(a, b)| (a / di - b / dj).powi(2))
                        .sum();
                    slow += 0.5 * diff / h.edge_size(e) as f64;
                }
            }
        }
        assert!((fast - slow).abs() < 1e-10, "fast {fast} vs loop {slow}");
    }

    #[test]
    fn energy_weight_identity() {
        let h = toy();
        let cfg = WeightRuleConfig::with_epsilon(0.07);
        for seed in 0..100 {
            let x = random_unit_features(5, 3, 1000 + seed);
            let gap = energy_identity_gap(&h, &x, &cfg).unwrap();
            assert!(gap < 1e-8, "identity gap {gap} at seed {seed}");
        }
    }

    #[test]
    fn energy_unit_norm_invariance() {
        let h = toy();
        let x = random_unit_features(5, 3, 11);
        let mut scaled = x.data().to_vec();
        scaled.iter_mut().for_each(|v| *v *= 2.0);
        let renorm = FeatureMatrix::from_raw(scaled, 5, 3).unwrap();
        assert!((dirichlet_energy(&h, &x) - dirichlet_energy(&h, &renorm)).abs() < 1e-12);
    }

    #[test]
    fn flow_step_zero_curvature_is_identity() {
        let w = EdgeWeights::new(vec![0.5, 2.0]).unwrap();
        let out = weight_flow_step(&w, &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(out.as_slice(), w.as_slice());
    }

    #[test]
    fn flow_step_geometric_decay() {
        let mut w = EdgeWeights::new(vec![1.0]).unwrap();
        let kappa = [0.5];
        for _ in 0..10 {
            w = weight_flow_step(&w, &kappa, 0.1).unwrap();
        }
        assert!((w[0] - 0.95f64.powi(10)).abs() < 1e-12);
    }

    #[test]
    fn flow_step_guard_reports_edge_and_max_dt() {
        let w = EdgeWeights::new(vec![1.0, 1.0]).unwrap();
        let err = weight_flow_step(&w, &[0.1, 4.0], 0.5).unwrap_err();
        match err {
            Error::FlowStepTooLarge { edge, max_dt, .. } => {
                assert_eq!(edge, 1);
                assert!((max_dt - 0.25).abs() < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn extrema_recover_sine_half_period() {
        // w(t) = 2 + cos(t) over one full period: interior extremum at pi,
        // so zeta is the half period, recovered within one grid step.
        let dt = 0.01;
        let steps = 628;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let series: Vec<Vec<f64>> = times.iter().map(|&t| vec![2.0 + t.cos()]).collect();
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let energy: Vec<f64> = times.iter().map(|_| 1.0).collect();
        let report = energy_bounds(&h, &times, &series, &energy, 0.1).unwrap();
        let zeta = report.per_edge[0].zeta;
        assert!(
            (zeta - std::f64::consts::PI).abs() <= 2.0 * dt,
            "zeta {zeta} vs half period {}",
            std::f64::consts::PI
        );
        assert!(!report.all_monotone);
    }

    #[test]
    fn monotone_window_uses_sharp_bounds() {
        let h = toy();
        assert!(!h.is_regular());
        let times = vec![0.0, 0.5, 1.0];
        let series = vec![vec![1.0; 4], vec![1.1; 4], vec![1.2; 4]];
        let energy = vec![2.0, 1.9, 1.8];
        let report = energy_bounds(&h, &times, &series, &energy, 0.1).unwrap();
        assert_eq!(report.form, BoundForm::Monotone);
        assert!(report.b2_structural > 0.0);
        assert_eq!(report.b2, report.b2_structural);
        assert!(report.b1 >= report.mean_energy);
    }

    #[test]
    fn regular_hypergraph_has_zero_structural_bound() {
        let h = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]).unwrap();
        let times = vec![0.0, 0.5, 1.0];
        let series = vec![vec![1.0; 4]; 3];
        let energy = vec![0.5; 3];
        let report = energy_bounds(&h, &times, &series, &energy, 0.1).unwrap();
        assert!(report.b2_structural.abs() < 1e-12);
    }

    #[test]
    fn convergence_hit_at_zero_and_interpolated() {
        let times = vec![0.0, 1.0, 2.0];
        let kappas = vec![vec![0.005, 0.4], vec![0.004, 0.2], vec![0.003, 0.05]];
        let weights = vec![vec![1.0, 1.0], vec![0.9, 0.8], vec![0.85, 0.7]];
        let report = convergence_monitor(&times, &kappas, &weights, 0.1, 0.1, None).unwrap();
        assert_eq!(report.hit_times[0], Some(0.0));
        // |kappa| crosses 0.1 between t=1 (0.2) and t=2 (0.05).
        let hit = report.hit_times[1].unwrap();
        assert!((hit - (1.0 + (0.2 - 0.1) / (0.2 - 0.05))).abs() < 1e-12);
    }

    #[test]
    fn bound_inapplicable_when_l_eps_below_delta() {
        let times = vec![0.0, 1.0];
        let kappas = vec![vec![0.5], vec![0.45]];
        let weights = vec![vec![1.0], vec![0.9]];
        let report =
            convergence_monitor(&times, &kappas, &weights, 0.2, 0.1, Some(0.5)).unwrap();
        // L*eps = 0.05 <= delta = 0.2.
        assert!(report.bound.is_none());
    }
}
