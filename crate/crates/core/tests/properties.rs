use proptest::prelude::*;

use thdkit::hierarchy::{linkage_thd, LinkageMode};
use thdkit::metric::{hausdorff, offset_components, PointCloud};
use thdkit::subset::SubsetId;
use thdkit::thd::ThdPoset;

fn cloud() -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..12)
        .prop_map(|points| PointCloud::from_points(points).unwrap())
}

fn subset(n: usize) -> impl Strategy<Value = SubsetId> {
    prop::collection::vec(any::<bool>(), n).prop_map(|mask| SubsetId::from_mask(&mask))
}

proptest! {
    #[test]
    fn offset_components_partition_the_subset(c in cloud(), eps in 0.0f64..4.0) {
        let all = c.all();
        let blocks = offset_components(&c, &all, eps).unwrap();
        let mut seen: Vec<usize> = blocks.iter().flat_map(|b| b.iter()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, all.members().to_vec());
        // a larger radius only merges blocks
        let coarse = offset_components(&c, &all, eps * 2.0).unwrap();
        for b in &blocks {
            prop_assert!(coarse.iter().any(|k| b.is_subset(k)));
        }
    }

    #[test]
    fn hausdorff_is_a_metric_on_nonempty_subsets(
        (c, s, t, u) in cloud().prop_flat_map(|c| {
            let n = c.len();
            (Just(c), subset(n), subset(n), subset(n))
        })
    ) {
        prop_assume!(!s.is_empty() && !t.is_empty() && !u.is_empty());
        let st = hausdorff(&c, &s, &t).unwrap();
        prop_assert_eq!(st, hausdorff(&c, &t, &s).unwrap());
        prop_assert_eq!(hausdorff(&c, &s, &s).unwrap(), 0.0);
        let su = hausdorff(&c, &s, &u).unwrap();
        let ut = hausdorff(&c, &u, &t).unwrap();
        prop_assert!(st <= su + ut + 1e-9);
    }

    #[test]
    fn linkage_heights_are_ordered(c in cloud()) {
        let single = linkage_thd(&c, LinkageMode::Single).unwrap();
        let complete = linkage_thd(&c, LinkageMode::Complete).unwrap();
        prop_assert!(single.heights.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(complete.heights.windows(2).all(|w| w[0] < w[1]));
        let top = |t: &[f64]| t.last().copied().unwrap_or(0.0);
        prop_assert!(top(&single.heights) <= top(&complete.heights) + 1e-12);
        prop_assert_eq!(single.partition_at(f64::INFINITY).len(), 1);
    }

    #[test]
    fn thd_json_round_trips(c in cloud()) {
        let tree = linkage_thd(&c, LinkageMode::Single).unwrap();
        let back = ThdPoset::from_json_value(&tree.thd.to_json_value()).unwrap();
        prop_assert_eq!(back, tree.thd);
    }
}
