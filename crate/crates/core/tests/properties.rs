use acev::components::{count_zero_eigenvalues, single_linkage};
use acev::evalkit::{ari, nmi};
use acev::geometry::{angle_differ, intrinsic_dim, knn_query};
use acev::traversal::{ema_update, EmaVector};
use acev::PointMatrix;
use proptest::prelude::*;

fn labels(max_class: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..max_class, 2..60)
}

fn label_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(0usize..6, n),
            prop::collection::vec(0usize..6, n),
        )
    })
}

fn cloud() -> impl Strategy<Value = PointMatrix> {
    (2usize..40, 1usize..5).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d)
            .prop_map(move |data| PointMatrix::new(data, n, d).unwrap())
    })
}

proptest! {
    #[test]
    fn ari_is_symmetric_and_bounded((a, b) in label_pair()) {
        let x = ari(&a, &b).unwrap();
        let y = ari(&b, &a).unwrap();
        prop_assert!((x - y).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x));
    }

    #[test]
    fn nmi_is_symmetric_and_in_unit_interval((a, b) in label_pair()) {
        let x = nmi(&a, &b).unwrap();
        prop_assert!((x - nmi(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn scores_ignore_label_renaming(a in labels(6), shift in 1usize..50) {
        let renamed: Vec<usize> = a.iter().map(|&x| (x * 7 + shift) % 1000).collect();
        prop_assert_eq!(ari(&a, &renamed).unwrap(), 1.0);
        prop_assert_eq!(nmi(&a, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn knn_is_sorted_excludes_self_and_caps(pts in cloud(), k in 1usize..50, pick in 0usize..40) {
        let i = pick % pts.n();
        let nb = knn_query(&pts, i, k).unwrap();
        prop_assert_eq!(nb.len(), k.min(pts.n() - 1));
        prop_assert!(!nb.neighbors.contains(&i));
        prop_assert!(nb.distances.windows(2).all(|w| w[0] <= w[1]));
        let mut uniq = nb.neighbors.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), nb.len());
    }

    #[test]
    fn angles_lie_in_zero_to_half_pi(
        a in prop::collection::vec(-1.0f64..1.0, 3),
        b in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(na > 1e-3 && nb > 1e-3);
        let a: Vec<f64> = a.iter().map(|x| x / na).collect();
        let b: Vec<f64> = b.iter().map(|x| x / nb).collect();
        let t = angle_differ(&a, &b).unwrap();
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t));
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        prop_assert!((t - angle_differ(&a, &neg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ema_moves_toward_the_observation(
        prev in prop::collection::vec(0.0f64..1.6, 3),
        obs in prop::collection::vec(0.0f64..1.6, 3),
        alpha in 0.01f64..0.99,
    ) {
        let next = ema_update(&EmaVector(prev.clone()), &obs, alpha);
        for d in 0..3 {
            let lo = prev[d].min(obs[d]) - 1e-12;
            let hi = prev[d].max(obs[d]) + 1e-12;
            prop_assert!(next.0[d] >= lo && next.0[d] <= hi);
        }
    }

    #[test]
    fn intrinsic_dim_is_bounded(vals in prop::collection::vec(0.0f64..5.0, 1..8), eta in 0.0f64..0.5) {
        let mut vals = vals;
        vals.sort_by(|a, b| b.total_cmp(a));
        let d = intrinsic_dim(&vals, eta);
        prop_assert!(d <= vals.len());
        prop_assert!(intrinsic_dim(&vals, eta / 2.0) >= d);
    }

    #[test]
    fn zero_count_is_at_least_one(spec in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let m = count_zero_eigenvalues(&spec, 1e-8);
        prop_assert!(m >= 1 && m <= spec.len());
    }

    #[test]
    fn single_linkage_yields_m_nonempty_clusters(pts in cloud(), m in 1usize..6) {
        let m = m.min(pts.n());
        let cl = single_linkage(&pts, m);
        prop_assert_eq!(cl.m, m);
        prop_assert!(cl.members().iter().all(|c| !c.is_empty()));
        prop_assert_eq!(cl.labels[0], 0);
    }
}
