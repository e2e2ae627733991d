//! Curvature cross-checks against independent pipelines.

use rfhnd::curvature::{node_measure, ollivier_curvature, CurvatureConfig};
use rfhnd::hypergraph::{EdgeWeights, Hypergraph};

/// 1-Wasserstein distance between two measures on the integer line by the
/// CDF formula: integral of |F_a - F_b|. Independent of the simplex solver.
fn w1_on_line(a: &[(i64, f64)], b: &[(i64, f64)]) -> f64 {
    let lo = a.iter().chain(b).map(|&(p, _)| p).min().unwrap();
    let hi = a.iter().chain(b).map(|&(p, _)| p).max().unwrap();
    let mut total = 0.0;
    let mut fa = 0.0;
    let mut fb = 0.0;
    for p in lo..hi {
        fa += a.iter().filter(|&&(q, _)| q == p).map(|&(_, m)| m).sum::<f64>();
        fb += b.iter().filter(|&&(q, _)| q == p).map(|&(_, m)| m).sum::<f64>();
        total += (fa - fb).abs();
    }
    total
}

/// Long chain of size-2 edges. The equivalent graph is a path; walk
/// measures of interior nodes put mass 1/2 on each side, so the line-CDF
/// oracle gives W1(mu_i, mu_{i+1}) = 1 and kappa = 0 on every edge.
#[test]
fn chain_ollivier_matches_line_oracle() {
    let len = 9usize;
    let edges: Vec<Vec<u32>> = (0..len - 1).map(|i| vec![i as u32, i as u32 + 1]).collect();
    let h = Hypergraph::new(len, edges).unwrap();
    let w = EdgeWeights::uniform(len - 1);
    let cfg = CurvatureConfig::default();
    let kappa = ollivier_curvature(&h, &w, &cfg).unwrap();

    // Line-oracle measures: interior node i -> {(i-1, 1/2), (i+1, 1/2)},
    // boundary node -> point mass on its single neighbor.
    let measure = |i: usize| -> Vec<(i64, f64)> {
        if i == 0 {
            vec![(1, 1.0)]
        } else if i == len - 1 {
            vec![(len as i64 - 2, 1.0)]
        } else {
            vec![(i as i64 - 1, 0.5), (i as i64 + 1, 0.5)]
        }
    };
    for e in 0..len - 1 {
        let (i, j) = (e, e + 1);
        let w1 = w1_on_line(&measure(i), &measure(j));
        let expected = 1.0 - w1; // |e| = 2, d(i, j) = 1.
        assert!(
            (kappa.kappa[e] - expected).abs() < 1e-12,
            "edge {e}: pipeline {} vs oracle {expected}",
            kappa.kappa[e]
        );
    }
    // Spot value from the oracle itself, plus the classic positive triangle.
    assert!((kappa.kappa[3] - 0.0).abs() < 1e-12);
    let tri = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
    let k = ollivier_curvature(&tri, &EdgeWeights::uniform(3), &CurvatureConfig::default())
        .unwrap();
    for v in &k.kappa {
        assert!((v - 0.5).abs() < 1e-12, "triangle edges have kappa 1/2, got {v}");
    }
}

/// The hypergraph measures behind the oracle comparison: interior chain
/// nodes split mass evenly over their two neighbors.
#[test]
fn chain_measures_are_half_half() {
    let edges: Vec<Vec<u32>> = (0..5).map(|i| vec![i as u32, i as u32 + 1]).collect();
    let h = Hypergraph::new(6, edges).unwrap();
    let w = EdgeWeights::uniform(5);
    let mu = node_measure(&h, &w, 2, &CurvatureConfig::default()).unwrap();
    assert_eq!(mu.support, vec![1, 3]);
    assert!((mu.mass[0] - 0.5).abs() < 1e-15);
    assert!((mu.mass[1] - 0.5).abs() < 1e-15);
}
