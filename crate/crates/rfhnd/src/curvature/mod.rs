//! Forman and Ollivier curvature of hyperedges on a weighted hypergraph.
//!
//! Conventions, all switchable through [`CurvatureConfig`]:
//! * the Forman neighbor sum ranges over edges other than the one being
//!   scored (an isolated unit-weight edge then has curvature |e|, keeping
//!   the community/bridge contrast);
//! * random-walk measures drop the walker's self-mass and renormalize over
//!   neighbors;
//! * Ollivier averages over unordered member pairs.

pub mod exhaustive;
pub mod metric;
pub mod transport;

use rayon::prelude::*;

use crate::hypergraph::{EdgeWeights, Hypergraph};
use crate::Result;

pub use metric::MetricOracle;
pub use transport::{wasserstein1, NodeMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CurvatureKind {
    Forman,
    Ollivier,
}

impl std::str::FromStr for CurvatureKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "forman" => Ok(CurvatureKind::Forman),
            "ollivier" => Ok(CurvatureKind::Ollivier),
            other => Err(format!("unknown curvature kind {other:?}")),
        }
    }
}

/// Per-hyperedge curvature values.
#[derive(Debug, Clone)]
pub struct CurvatureVector {
    pub kind: CurvatureKind,
    pub kappa: Vec<f64>,
}

impl CurvatureVector {
    pub fn max_abs(&self) -> f64 {
        self.kappa.iter().fold(0.0f64, |acc, k| acc.max(k.abs()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CurvatureConfig {
    /// Include the scored edge itself in the Forman neighbor sum.
    pub forman_include_self: bool,
    /// Keep the walker's mass at its own node instead of renormalizing it away.
    pub keep_self_mass: bool,
}

/// Forman curvature with unit node weights:
/// kappa_e = |e| - sum_{k in e} sum_{l contains k, l != e} w_e / sqrt(w_l).
pub fn forman_curvature(
    h: &Hypergraph,
    w: &EdgeWeights,
    cfg: &CurvatureConfig,
) -> Result<CurvatureVector> {
    let inv_sqrt: Vec<f64> = w.as_slice().iter().map(|&x| 1.0 / x.sqrt()).collect();
    let kappa = (0..h.num_edges())
        .map(|e| {
            let mut attach = 0.0;
            for &k in h.edge(e) {
                for &l in h.edges_of(k as usize) {
                    if cfg.forman_include_self || l as usize != e {
                        attach += inv_sqrt[l as usize];
                    }
                }
            }
            h.edge_size(e) as f64 - w[e] * attach
        })
        .collect();
    Ok(CurvatureVector { kind: CurvatureKind::Forman, kappa })
}

/// Two-step random-walk measure of node `i`:
/// mu_i(j) = sum_{e containing i and j} (w_e / sum_{f containing i} w_f) / |e|,
/// with the self-mass at `i` dropped and the rest renormalized unless
/// `keep_self_mass` is set.
pub fn node_measure(
    h: &Hypergraph,
    w: &EdgeWeights,
    i: usize,
    cfg: &CurvatureConfig,
) -> Result<NodeMeasure> {
    let total: f64 = h.edges_of(i).iter().map(|&e| w[e as usize]).sum();
    let mut pairs: Vec<(u32, f64)> = Vec::new();
    for &e in h.edges_of(i) {
        let share = w[e as usize] / (total * h.edge_size(e as usize) as f64);
        for &j in h.edge(e as usize) {
            pairs.push((j, share));
        }
    }
    pairs.sort_unstable_by_key(|&(j, _)| j);
    let mut support = Vec::new();
    let mut mass = Vec::new();
    for (j, m) in pairs {
        if support.last() == Some(&j) {
            *mass.last_mut().unwrap() += m;
        } else {
            support.push(j);
            mass.push(m);
        }
    }
    if !cfg.keep_self_mass {
        if let Ok(pos) = support.binary_search(&(i as u32)) {
            support.remove(pos);
            mass.remove(pos);
        }
        let rest: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= rest);
    }
    NodeMeasure::new(support, mass)
}

/// Ollivier curvature:
/// kappa_e = 1 - (2 / (|e| (|e| - 1))) sum_{i < j in e} W1(mu_i, mu_j) / d(i, j).
pub fn ollivier_curvature(
    h: &Hypergraph,
    w: &EdgeWeights,
    cfg: &CurvatureConfig,
) -> Result<CurvatureVector> {
    let metric = MetricOracle::new(h);
    ollivier_curvature_with_metric(h, w, cfg, &metric)
}

pub fn ollivier_curvature_with_metric(
    h: &Hypergraph,
    w: &EdgeWeights,
    cfg: &CurvatureConfig,
    metric: &MetricOracle,
) -> Result<CurvatureVector> {
    let measures: Vec<NodeMeasure> = (0..h.num_nodes())
        .into_par_iter()
        .map(|i| node_measure(h, w, i, cfg))
        .collect::<Result<_>>()?;
    let kappa: Vec<f64> = (0..h.num_edges())
        .into_par_iter()
        .map(|e| {
            let members = h.edge(e);
            let s = members.len();
            let mut acc = 0.0;
            for a in 0..s {
                for b in a + 1..s {
                    let (i, j) = (members[a] as usize, members[b] as usize);
                    let w1 = wasserstein1(&measures[i], &measures[j], metric)?;
                    let d = metric.distance(i, j)?;
                    acc += w1 / f64::from(d);
                }
            }
            Ok(1.0 - 2.0 * acc / (s as f64 * (s as f64 - 1.0)))
        })
        .collect::<Result<_>>()?;
    Ok(CurvatureVector { kind: CurvatureKind::Ollivier, kappa })
}

/// Dispatch on curvature kind.
pub fn curvature(
    h: &Hypergraph,
    w: &EdgeWeights,
    kind: CurvatureKind,
    cfg: &CurvatureConfig,
) -> Result<CurvatureVector> {
    match kind {
        CurvatureKind::Forman => forman_curvature(h, w, cfg),
        CurvatureKind::Ollivier => ollivier_curvature(h, w, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize) -> EdgeWeights {
        EdgeWeights::uniform(m)
    }

    #[test]
    fn forman_isolated_edge_is_size() {
        // Members of the scored edge sit in no other edge.
        let h = Hypergraph::new(5, vec![vec![0, 1, 2], vec![3, 4]]).unwrap();
        let k = forman_curvature(&h, &unit(2), &CurvatureConfig::default()).unwrap();
        assert_eq!(k.kappa[0], 3.0);
        assert_eq!(k.kappa[1], 2.0);
    }

    #[test]
    fn forman_two_edges_sharing_one_node() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let k = forman_curvature(&h, &unit(2), &CurvatureConfig::default()).unwrap();
        assert_eq!(k.kappa, vec![1.0, 1.0]);
    }

    #[test]
    fn forman_weight_scaling_scales_attachment_by_sqrt() {
        let h =
            Hypergraph::new(5, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![0, 4]]).unwrap();
        let w1 = EdgeWeights::new(vec![1.3, 0.7, 2.0, 0.4]).unwrap();
        let c = 3.7;
        let w2 = EdgeWeights::new(w1.as_slice().iter().map(|v| c * v).collect()).unwrap();
        let cfg = CurvatureConfig::default();
        let k1 = forman_curvature(&h, &w1, &cfg).unwrap();
        let k2 = forman_curvature(&h, &w2, &cfg).unwrap();
        for e in 0..4 {
            let sub1 = h.edge_size(e) as f64 - k1.kappa[e];
            let sub2 = h.edge_size(e) as f64 - k2.kappa[e];
            assert!((sub2 - c.sqrt() * sub1).abs() < 1e-12);
        }
    }

    #[test]
    fn forman_include_self_convention() {
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let cfg = CurvatureConfig { forman_include_self: true, ..Default::default() };
        let k = forman_curvature(&h, &unit(1), &cfg).unwrap();
        // Each member contributes the edge itself: kappa = 3 - 3 * 1 = 0.
        assert_eq!(k.kappa[0], 0.0);
    }

    #[test]
    fn measure_single_triangle_edge() {
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let cfg = CurvatureConfig::default();
        let mu = node_measure(&h, &unit(1), 0, &cfg).unwrap();
        assert_eq!(mu.support, vec![1, 2]);
        for m in &mu.mass {
            assert!((m - 0.5).abs() < 1e-15);
        }
        let keep = CurvatureConfig { keep_self_mass: true, ..Default::default() };
        let mu = node_measure(&h, &unit(1), 0, &keep).unwrap();
        assert_eq!(mu.support, vec![0, 1, 2]);
        for m in &mu.mass {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn measure_two_disjoint_partner_edges() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let mu = node_measure(&h, &unit(2), 0, &CurvatureConfig::default()).unwrap();
        assert_eq!(mu.support, vec![1, 2]);
        assert!((mu.mass[0] - 0.5).abs() < 1e-15);
        assert!((mu.mass[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ollivier_symmetric_isolated_edge() {
        // Neighbor measures inside a single hyperedge differ only by the
        // dropped self-mass; symmetric pairs transport at cost |W1| = pair
        // swap within distance-1 cliques.
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let k = ollivier_curvature(&h, &unit(1), &CurvatureConfig::default()).unwrap();
        // mu_0 = delta_1, mu_1 = delta_0: W1 = 1, kappa = 1 - 1 = 0.
        assert!((k.kappa[0] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn ollivier_identical_measures_give_one() {
        // Keeping self-mass, all members of an isolated edge share the same
        // uniform measure, so every transport is free.
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let cfg = CurvatureConfig { keep_self_mass: true, ..Default::default() };
        let k = ollivier_curvature(&h, &unit(1), &cfg).unwrap();
        assert!((k.kappa[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ollivier_bounded_by_one() {
        let h = Hypergraph::new(
            8,
            vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5], vec![5, 6, 7], vec![0, 7]],
        )
        .unwrap();
        let w = EdgeWeights::new(vec![0.5, 1.0, 2.0, 0.25, 1.5]).unwrap();
        let k = ollivier_curvature(&h, &w, &CurvatureConfig::default()).unwrap();
        for v in &k.kappa {
            assert!(*v <= 1.0 + 1e-12);
            assert!(v.is_finite());
        }
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let h = Hypergraph::new(4, vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        let w = unit(2);
        let cfg = CurvatureConfig::default();
        let f = curvature(&h, &w, CurvatureKind::Forman, &cfg).unwrap();
        assert_eq!(f.kappa, forman_curvature(&h, &w, &cfg).unwrap().kappa);
        let o = curvature(&h, &w, CurvatureKind::Ollivier, &cfg).unwrap();
        assert_eq!(o.kappa, ollivier_curvature(&h, &w, &cfg).unwrap().kappa);
    }
}
