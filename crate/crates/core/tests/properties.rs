use isosample::alias::SamplingDistribution;
use isosample::exact::subdivide;
use isosample::exact::verify::{verify_kl_contraction, verify_point_negcorr, verify_subset_bound_all};
use isosample::logspace::log_sum_exp;
use isosample::subset::{binomial, for_each_subset, BinomialTable};
use isosample::{DistTable, DppDensity, ExactTable, ExplicitDensity, LogDensityOracle};
use proptest::prelude::*;

fn diag_dpp() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..7).prop_flat_map(|n| (prop::collection::vec(0.1f64..5.0, n), 1..=n.min(3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_unrank_roundtrip(n in 1usize..12, k in 0usize..5) {
        prop_assume!(k <= n);
        let table = BinomialTable::new(n, k);
        let mut seen = 0usize;
        let mut out = Vec::new();
        for_each_subset(n, k, |s| {
            let r = table.rank(s);
            assert_eq!(r, seen);
            table.unrank_into(r, k, &mut out);
            assert_eq!(out.as_slice(), s);
            seen += 1;
        });
        prop_assert_eq!(seen as u128, binomial(n, k));
    }

    #[test]
    fn alias_reproduces_weights(weights in prop::collection::vec(0.0f64..10.0, 1..40)) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let p = SamplingDistribution::build(&weights, None).unwrap();
        let total: f64 = weights.iter().sum();
        for (got, w) in p.implied_probs().iter().zip(&weights) {
            prop_assert!((got - w / total).abs() < 1e-12);
        }
    }

    #[test]
    fn alias_floor_is_met(weights in prop::collection::vec(0.0f64..10.0, 2..40), frac in 0.0f64..1.0) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let floor = frac / weights.len() as f64;
        let p = SamplingDistribution::build(&weights, Some(floor)).unwrap();
        prop_assert!(p.min_prob() >= floor * (1.0 - 1e-12));
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&xs) - direct).abs() < 1e-9);
    }

    #[test]
    fn product_measures_are_negatively_dependent((diag, k) in diag_dpp()) {
        let d = DppDensity::diagonal(&diag, k).unwrap();
        let t = ExactTable::enumerate(&d).unwrap();
        prop_assert!((t.marginals().iter().sum::<f64>() - k as f64).abs() < 1e-9);
        prop_assert!(verify_point_negcorr(&t).holds());
        prop_assert!(verify_subset_bound_all(&t).unwrap().holds());
    }

    #[test]
    fn subdivision_preserves_partition((diag, k) in diag_dpp(), seed in 0u64..1000) {
        let d = DppDensity::diagonal(&diag, k).unwrap();
        let mult: Vec<usize> = (0..diag.len()).map(|i| 1 + ((seed >> i) % 3) as usize).collect();
        let sub = subdivide(&d, &mult).unwrap();
        let a = ExactTable::enumerate(&d).unwrap();
        let b = ExactTable::enumerate(&sub.density).unwrap();
        prop_assert!((a.log_partition() - b.log_partition()).abs() < 1e-9);
    }

    #[test]
    fn kl_contracts_under_down((diag, k) in diag_dpp(), ws in prop::collection::vec(0.0f64..1.0, 84)) {
        prop_assume!(k >= 2);
        let d = DppDensity::diagonal(&diag, k).unwrap();
        let t = ExactTable::enumerate(&d).unwrap();
        let m = t.probs().len();
        let mut w: Vec<f64> = ws[..m].to_vec();
        w[0] += 0.01;
        let nu = DistTable::from_weights(diag.len(), k, w).unwrap();
        for l in 1..k {
            let c = verify_kl_contraction(&t, &nu, l).unwrap();
            prop_assert!(c.report.holds(), "{:?}", c);
        }
    }

    #[test]
    fn explicit_tables_roundtrip(entries in prop::collection::btree_map((0usize..6, 0usize..6), 0.1f64..4.0, 1..10)) {
        let pairs: Vec<(Vec<usize>, f64)> = entries
            .into_iter()
            .filter(|((a, b), _)| a != b)
            .map(|((a, b), w)| (vec![a.min(b), a.max(b)], w))
            .collect::<std::collections::BTreeMap<_, _>>()
            .into_iter()
            .collect();
        prop_assume!(!pairs.is_empty());
        let d = ExplicitDensity::new(6, 2, pairs.clone()).unwrap();
        let t = ExactTable::enumerate(&d).unwrap();
        let total: f64 = pairs.iter().map(|(_, w)| w).sum();
        prop_assert!((t.partition() - total).abs() < 1e-9 * total);
        for (s, w) in &pairs {
            prop_assert!((t.prob_of(s) - w / total).abs() < 1e-12);
        }
        prop_assert_eq!(d.queries(), binomial(6, 2) as u64);
    }
}
