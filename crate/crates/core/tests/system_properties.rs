use std::collections::BTreeSet;

use num_integer::Integer;
use proptest::prelude::*;
use ubiq::systems::{bucket, gen_badic, gen_nalpha, gen_rationals, gen_uniform, AlphaSpec, LambdaRule, RadiusMode, DEFAULT_BUDGET};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn buckets_partition_indices(gamma in 0.1f64..4.0, n in 1usize..3000, seed in any::<u64>()) {
        let s = gen_uniform(&LambdaRule::Harmonic { gamma }, n, 1, seed).unwrap();
        let b = bucket(&s);
        let mut all: Vec<usize> = b.buckets.values().flatten().copied().collect();
        prop_assert_eq!(all.len(), s.len());
        // Buckets in class order concatenate to the input order.
        let flat = all.clone();
        all.sort_unstable();
        prop_assert_eq!(&flat, &all);
        prop_assert!(all.iter().enumerate().all(|(i, &n)| i == n));
    }

    #[test]
    fn irreducible_rationals_are_farey(q_max in 1u64..100) {
        let s = gen_rationals(q_max, 1, true, RadiusMode::Standard, DEFAULT_BUDGET).unwrap();
        let got: BTreeSet<(u64, u64)> = s.pairs.iter().map(|(x, _)| {
            let q = (1..=q_max).find(|&q| ((x[0] * q as f64).round() - x[0] * q as f64).abs() < 1e-9).unwrap();
            ((x[0] * q as f64).round() as u64, q)
        }).collect();
        let want: BTreeSet<(u64, u64)> = (1..=q_max)
            .flat_map(|q| (0..=q).filter(move |p| p.gcd(&q) == 1).map(move |p| (p, q)))
            .collect();
        prop_assert_eq!(got.len(), s.len());
        prop_assert_eq!(got, want);
    }

    #[test]
    fn orbit_gaps_take_three_values(head in 0u64..3, period in proptest::collection::vec(1u64..6, 1..4), n in 2u64..2000) {
        let alpha = AlphaSpec::Periodic { head: vec![head], period };
        let s = gen_nalpha(&alpha, n, DEFAULT_BUDGET).unwrap();
        let mut xs: Vec<f64> = s.pairs.iter().map(|p| p.0[0]).collect();
        xs.push(0.0);
        xs.push(1.0);
        xs.sort_by(f64::total_cmp);
        let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(f64::total_cmp);
        let mut distinct: Vec<f64> = Vec::new();
        for g in gaps {
            if distinct.last().is_none_or(|&l| g - l > 1e-9) {
                distinct.push(g);
            }
        }
        prop_assert!(distinct.len() <= 3, "{distinct:?}");
    }
}

#[test]
fn badic_half_balls_cover_a_fine_grid() {
    let j_max = 8;
    let s = gen_badic(2, 1, j_max, DEFAULT_BUDGET).unwrap();
    let b = bucket(&s);
    for j in 1..j_max as i32 - 1 {
        let members: Vec<usize> = (j - 1..=j + 1).flat_map(|k| b.get(k).to_vec()).collect();
        for i in 0..10_000 {
            let y = i as f64 / 10_000.0;
            let hit = members.iter().any(|&n| (y - s.point(n)[0]).abs() < s.lambda(n) / 2.0);
            assert!(hit, "j={j} y={y}");
        }
    }
}
