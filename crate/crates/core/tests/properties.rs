//! Property tests for the detector and clustering metrics.

use lace::clustering::{cosine_distance, purity};
use lace::detector::{replay, Decision, DetectorConfig};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = DetectorConfig> {
    (1usize..20, 1.1f64..4.0, 1usize..4, 0usize..30, 0usize..40).prop_map(
        |(window, spike_ratio, confirm, cooldown, warmup)| DetectorConfig {
            window,
            spike_ratio,
            confirm,
            cooldown,
            warmup,
            sustained: None,
        },
    )
}

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![4 => 0.1f64..1.0, 1 => 2.0f64..20.0], 0..300)
}

proptest! {
    #[test]
    fn expansions_respect_cooldown_and_arming(cfg in config(), ls in losses()) {
        let d = replay(cfg, &ls).unwrap();
        let fired: Vec<usize> = d.iter().enumerate().filter(|(_, x)| x.is_expand()).map(|(i, _)| i).collect();
        for &s in &fired {
            prop_assert!(s >= cfg.warmup.max(cfg.window));
        }
        for w in fired.windows(2) {
            prop_assert!(w[1] - w[0] > cfg.cooldown);
        }
    }

    #[test]
    fn decisions_are_scale_invariant(cfg in config(), ls in losses(), k in 0.01f64..100.0) {
        // Scaling by a power of two is exact, so spike comparisons cannot flip.
        let k = 2f64.powi(k.log2().round() as i32);
        let scaled: Vec<f64> = ls.iter().map(|l| l * k).collect();
        prop_assert_eq!(replay(cfg, &ls).unwrap(), replay(cfg, &scaled).unwrap());
    }

    #[test]
    fn flat_streams_never_fire(cfg in config(), level in 0.01f64..10.0, n in 0usize..300) {
        let d = replay(cfg, &vec![level; n]).unwrap();
        prop_assert!(d.iter().all(|x| *x == Decision::None));
    }

    #[test]
    fn purity_is_bounded_and_label_permutation_invariant(
        pairs in prop::collection::vec((0usize..6, 0usize..5), 1..200),
        shift in 1usize..5,
    ) {
        let (a, l): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let r = purity(&a, &l).unwrap();
        let k = a.iter().collect::<std::collections::BTreeSet<_>>().len();
        prop_assert_eq!(r.k, k);
        prop_assert!(r.purity > 0.0 && r.purity <= 1.0);
        let relabeled: Vec<usize> = l.iter().map(|x| (x + shift) % 5).collect();
        prop_assert_eq!(purity(&a, &relabeled).unwrap().purity, r.purity);
    }

    #[test]
    fn cosine_distance_is_symmetric_and_bounded(
        v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..16),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        prop_assume!(a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0));
        let d = cosine_distance(&a, &b).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&d));
        prop_assert_eq!(d, cosine_distance(&b, &a).unwrap());
        prop_assert!(cosine_distance(&a, &a).unwrap().abs() < 1e-12);
    }
}
