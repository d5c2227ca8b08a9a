use proptest::prelude::*;

use iss_core::lattice::{build_lattice, discordance};
use iss_core::stats::{
    entropy_bits, joint_entropy_bits, mutual_information_bits, normalized_mi, pearson, permutation_pvalue, spearman,
    DiscretePair, PairedSample, PermutationStatistic,
};
use iss_core::{Aggregator, Rational, Score};

fn symbols(max: u8) -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (2..60usize).prop_flat_map(move |n| (prop::collection::vec(0..max, n), prop::collection::vec(0..max, n)))
}

proptest! {
    #[test]
    fn mi_is_nonnegative_symmetric_and_bounded((xs, ys) in symbols(6)) {
        let p = DiscretePair::new(xs.clone(), ys.clone()).unwrap();
        let mi: f64 = mutual_information_bits(&p);
        let hx: f64 = entropy_bits(&xs);
        let hy: f64 = entropy_bits(&ys);
        let hxy: f64 = joint_entropy_bits(&p);
        prop_assert!(mi >= 0.0);
        prop_assert!((mi - mutual_information_bits::<f64, _, _>(&p.swapped())).abs() < 1e-12);
        prop_assert!(mi <= hx.min(hy) + 1e-12);
        prop_assert!((mi - (hx + hy - hxy)).abs() < 1e-9 || mi == 0.0);
        if let Ok(nmi) = normalized_mi::<f64, _, _>(&p) {
            prop_assert!((0.0..=1.0).contains(&nmi));
        }
    }

    #[test]
    fn nmi_of_a_variable_with_itself_is_one((xs, _) in symbols(5)) {
        prop_assume!(xs.iter().any(|x| *x != xs[0]));
        let nmi: f64 = normalized_mi(&DiscretePair::new(xs.clone(), xs).unwrap()).unwrap();
        prop_assert!((nmi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_ignores_relabelling((xs, ys) in symbols(4)) {
        let p = DiscretePair::new(xs.clone(), ys.clone()).unwrap();
        let relabelled = DiscretePair::new(xs.iter().map(|x| 100 - u32::from(*x) * 7).collect(), ys).unwrap();
        let a: f64 = mutual_information_bits(&p);
        let b: f64 = mutual_information_bits(&relabelled);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_affine_invariant_in_f32_and_f64(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.5f64..4.0,
        b in -10.0f64..10.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let Ok(r) = pearson(&PairedSample::new(xs.clone(), ys.clone()).unwrap()) else { return Ok(()) };
        let moved: f64 = pearson(&PairedSample::new(xs.iter().map(|x| a * x + b).collect(), ys.clone()).unwrap()).unwrap();
        prop_assert!((r - moved).abs() < 1e-9);
        let flipped: f64 = pearson(&PairedSample::new(xs.iter().map(|x| -a * x).collect(), ys.clone()).unwrap()).unwrap();
        prop_assert!((r + flipped).abs() < 1e-9);
        let xs32: Vec<f32> = xs.iter().map(|&x| x as f32).collect();
        let ys32: Vec<f32> = ys.iter().map(|&y| y as f32).collect();
        if let Ok(r32) = pearson(&PairedSample::new(xs32, ys32).unwrap()) {
            prop_assert!((f64::from(r32) - r).abs() < 1e-3);
        }
    }

    #[test]
    fn spearman_is_invariant_under_increasing_maps(xs in prop::collection::hash_set(-1000i32..1000, 3..30), seed in any::<u64>()) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() * 10.0 + ((seed >> (i % 60)) & 7) as f64).collect();
        let (r1, _) = spearman(&PairedSample::new(xs.clone(), ys.clone()).unwrap()).unwrap_or((0.0, true));
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + 3.0 * x).collect();
        let (r2, _) = spearman(&PairedSample::new(cubed, ys).unwrap()).unwrap_or((0.0, true));
        prop_assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn increasing_rescaling_preserves_lattice_and_discordance(a in 1i64..50, b in 0i64..100, square in any::<bool>()) {
        let warp = move |s: Score| {
            let r = s.ratio();
            let r = if square { r * r } else { r };
            Score::from_ratio(r * a + Rational::from_integer(b))
        };
        for base in [Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES] {
            let warped = base.map_scores("warped", warp).unwrap();
            let (l1, l2) = (build_lattice(&base).unwrap(), build_lattice(&warped).unwrap());
            prop_assert_eq!(l1.len(), l2.len());
            for (e1, e2) in l1.entries().zip(l2.entries()) {
                prop_assert_eq!(e1.rank, e2.rank);
                prop_assert_eq!(e1.triples, e2.triples);
            }
            for other in [Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES] {
                prop_assert_eq!(discordance(&base, &other).unwrap().count, discordance(&warped, &other).unwrap().count);
            }
            prop_assert_eq!(discordance(&base, &warped).unwrap().count, 0);
        }
    }

    #[test]
    fn permutation_pvalues_are_deterministic_and_valid((xs, ys) in symbols(3), seed in any::<u64>()) {
        let p = DiscretePair::new(xs, ys).unwrap();
        let a: f64 = permutation_pvalue(&p, PermutationStatistic::MutualInformation, 300, seed).unwrap();
        let b: f64 = permutation_pvalue(&p, PermutationStatistic::MutualInformation, 300, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((1.0 / 301.0..=1.0).contains(&a));
    }
}

#[test]
fn discordance_is_symmetric_and_consistent() {
    let aggs = [Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES, Aggregator::power_sum(4).unwrap()];
    for f in &aggs {
        for g in &aggs {
            let (fg, gf) = (discordance(f, g).unwrap(), discordance(g, f).unwrap());
            assert_eq!(fg.count, gf.count);
            assert_eq!(fg.count, 2 * fg.unordered_count);
            assert_eq!(fg.discordant_pairs.len(), fg.unordered_count);
            assert_eq!(fg.total_pairs, 1485);
        }
    }
}
