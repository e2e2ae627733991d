//! Property tests for the structural invariants.

use proptest::prelude::*;

use rfhnd::curvature::metric::MetricOracle;
use rfhnd::curvature::transport::{wasserstein1, NodeMeasure};
use rfhnd::curvature::{curvature, forman_curvature, node_measure, CurvatureConfig, CurvatureKind};
use rfhnd::flow::{attribute_weight, WeightRuleConfig};
use rfhnd::hypergraph::{normalize_rows, EdgeWeights, FeatureMatrix, Hypergraph};

/// Edge lists over n nodes that always produce a valid hypergraph: a chain
/// cover guarantees no isolated nodes, extra random edges add structure.
fn arb_hypergraph() -> impl Strategy<Value = Hypergraph> {
    (4usize..20).prop_flat_map(|n| {
        let extra = proptest::collection::vec(
            proptest::collection::btree_set(0..n as u32, 2..=4.min(n)),
            0..6,
        );
        extra.prop_map(move |extra| {
            let mut edges: Vec<Vec<u32>> = Vec::new();
            let mut covered = 0usize;
            while covered + 1 < n {
                let hi = (covered + 2).min(n - 1);
                edges.push((covered..=hi).map(|v| v as u32).collect());
                covered = hi;
            }
            for e in extra {
                edges.push(e.into_iter().collect());
            }
            Hypergraph::new(n, edges).expect("constructed valid")
        })
    })
}

fn arb_unit_features(n: usize, d: usize) -> impl Strategy<Value = FeatureMatrix> {
    proptest::collection::vec(-1.0f64..1.0, n * d).prop_filter_map(
        "rows must be nonzero",
        move |data| FeatureMatrix::from_raw(data, n, d).ok(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sum_matches_incidence_and_dense_oracle(h in arb_hypergraph()) {
        // Dense incidence-matrix oracle for the degree bookkeeping.
        let (n, m) = (h.num_nodes(), h.num_edges());
        let mut dense = vec![0u32; n * m];
        for e in 0..m {
            for &i in h.edge(e) {
                dense[i as usize * m + e] = 1;
            }
        }
        let (deg, sizes) = h.degrees();
        for i in 0..n {
            let row_sum: u32 = (0..m).map(|e| dense[i * m + e]).sum();
            prop_assert_eq!(deg[i], row_sum);
        }
        for e in 0..m {
            let col_sum: u32 = (0..n).map(|i| dense[i * m + e]).sum();
            prop_assert_eq!(sizes[e], col_sum);
        }
        let d_total: u32 = deg.iter().sum();
        let s_total: u32 = sizes.iter().sum();
        prop_assert_eq!(d_total, s_total);
    }

    #[test]
    fn attribute_weight_stays_in_range(h in arb_hypergraph(), seed in 0u64..1000) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = 3;
        let data: Vec<f64> = (0..h.num_nodes() * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x = FeatureMatrix::from_raw(data, h.num_nodes(), d).unwrap();
        let cfg = WeightRuleConfig::with_epsilon(0.05);
        let w = attribute_weight(&h, &x, &cfg).unwrap();
        for e in 0..h.num_edges() {
            prop_assert!(w[e] >= cfg.epsilon - 1e-12);
            prop_assert!(w[e] <= 2.0 + cfg.epsilon + 1e-12);
        }
    }

    #[test]
    fn normalize_rows_idempotent_and_scale_invariant(
        x in arb_unit_features(5, 3),
        c in 0.01f64..100.0,
    ) {
        let again = normalize_rows(&x).unwrap();
        for (a, b) in x.data().iter().zip(again.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let scaled_data: Vec<f64> = x.data().iter().map(|v| c * v).collect();
        let scaled = FeatureMatrix::from_raw(scaled_data, 5, 3).unwrap();
        for (a, b) in x.data().iter().zip(scaled.data()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn curvature_finite_both_kinds(h in arb_hypergraph(), seed in 0u64..1000) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = EdgeWeights::new(
            (0..h.num_edges()).map(|_| rng.random_range(0.2..3.0)).collect(),
        ).unwrap();
        let cfg = CurvatureConfig::default();
        for kind in [CurvatureKind::Forman, CurvatureKind::Ollivier] {
            let k = curvature(&h, &w, kind, &cfg).unwrap();
            for v in &k.kappa {
                prop_assert!(v.is_finite());
            }
            if matches!(kind, CurvatureKind::Ollivier) {
                for v in &k.kappa {
                    prop_assert!(*v <= 1.0 + 1e-12);
                }
            } else {
                for (e, v) in k.kappa.iter().enumerate() {
                    prop_assert!(*v <= h.edge_size(e) as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn node_measures_sum_to_one(h in arb_hypergraph(), seed in 0u64..1000) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = EdgeWeights::new(
            (0..h.num_edges()).map(|_| rng.random_range(0.2..3.0)).collect(),
        ).unwrap();
        for keep_self_mass in [false, true] {
            let cfg = CurvatureConfig { keep_self_mass, ..Default::default() };
            for i in 0..h.num_nodes() {
                let mu = node_measure(&h, &w, i, &cfg).unwrap();
                let total: f64 = mu.mass.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wasserstein_metric_axioms(seed in 0u64..2000) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let h = Hypergraph::new(
            8,
            vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![5, 6], vec![6, 7], vec![0, 7]],
        ).unwrap();
        let metric = MetricOracle::new(&h);
        let make = |rng: &mut rand_chacha::ChaCha8Rng| {
            let k = rng.random_range(1..4usize);
            let mut support: Vec<u32> = rand::seq::index::sample(rng, 8, k)
                .into_iter().map(|v| v as u32).collect();
            support.sort_unstable();
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.1).collect();
            let total: f64 = raw.iter().sum();
            NodeMeasure::new(support, raw.into_iter().map(|v| v / total).collect()).unwrap()
        };
        let a = make(&mut rng);
        let b = make(&mut rng);
        let c = make(&mut rng);
        let aa = wasserstein1(&a, &a, &metric).unwrap();
        let ab = wasserstein1(&a, &b, &metric).unwrap();
        let ba = wasserstein1(&b, &a, &metric).unwrap();
        let bc = wasserstein1(&b, &c, &metric).unwrap();
        let ac = wasserstein1(&a, &c, &metric).unwrap();
        prop_assert!(aa.abs() < 1e-12);
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn forman_responds_linearly_to_small_weight_perturbations(
        h in arb_hypergraph(),
        seed in 0u64..500,
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..h.num_edges()).map(|_| rng.random_range(0.5..2.0)).collect();
        let w = EdgeWeights::new(base.clone()).unwrap();
        let cfg = CurvatureConfig::default();
        let k0 = forman_curvature(&h, &w, &cfg).unwrap();
        // Two-sided probe: the finite-difference slope must stay bounded as
        // the perturbation shrinks (continuity in the weights).
        let target = rng.random_range(0..h.num_edges());
        let mut slopes = Vec::new();
        for delta in [1e-3, 1e-4] {
            let mut bumped = base.clone();
            bumped[target] += delta;
            let k1 = forman_curvature(&h, &EdgeWeights::new(bumped).unwrap(), &cfg).unwrap();
            let diff: f64 = k1
                .kappa
                .iter()
                .zip(&k0.kappa)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            slopes.push(diff / delta);
        }
        // Analytic bound on |d kappa / d w|: attachments are O(m / sqrt(w_min)).
        let bound = 4.0 * h.incidence_size() as f64 * h.num_edges() as f64;
        for s in slopes {
            prop_assert!(s <= bound, "slope {s} exceeds bound {bound}");
        }
    }
}
