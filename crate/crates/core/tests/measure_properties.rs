use proptest::prelude::*;
use ubiq::cgrid::CAdicBox;
use ubiq::measures::{ball_mass, build_cascade, build_cpc, build_multinomial, CascadeSpec, CpcSpec, Generator, MultinomialSpec};
use ubiq::spectrum::{q_grid, tau_fit};

fn weights(c: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.05f64..1.0, c).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

/// Mean and standard error of the total mass over seeds.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multinomial_is_additive_and_normalized(w in weights(3), j in 2u32..9) {
        let mu = build_multinomial(&MultinomialSpec::new(3, vec![w]).unwrap(), j).unwrap();
        prop_assert!(mu.additivity_defect() <= 1e-9);
        prop_assert!(mu.total_log_mass().abs() <= 1e-9);
    }

    #[test]
    fn base_two_and_four_agree(w in weights(2)) {
        let mu = build_multinomial(&MultinomialSpec::new(2, vec![w]).unwrap(), 14).unwrap();
        let grid = q_grid(-3.0, 3.0, 0.5);
        let t2 = tau_fit(&mu, &grid, (2, 14)).unwrap();
        let t4 = tau_fit(&mu.rebase(2).unwrap(), &grid, (1, 7)).unwrap();
        for (a, b) in t2.tau.iter().zip(&t4.tau) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn ball_bracket_contains_true_mass(w in weights(2), x in 0.0f64..1.0, r in 0.01f64..0.3, margin in 1u32..6) {
        let j_max = 14;
        let mu = build_multinomial(&MultinomialSpec::new(2, vec![w.clone()]).unwrap(), j_max).unwrap();
        let br = ball_mass(&mu, &[x], r, margin).unwrap();
        prop_assert!(br.lower <= br.upper + 1e-12);
        // The ball's mass from the finest generation, counting partial boxes by their overlap.
        let h = 0.5f64.powi(j_max as i32);
        let level = mu.level(j_max).unwrap();
        let exact: f64 = (0..level.len())
            .map(|k| {
                let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
                let overlap = (b.min(x + r) - a.max(x - r)).max(0.0) / h;
                overlap * level[k].exp()
            })
            .sum();
        let slack = 2.0 * (w[0].max(w[1]).powi(j_max as i32));
        prop_assert!(exact <= br.upper.exp() + slack && exact >= br.lower.exp() - slack);
        let finer = ball_mass(&mu, &[x], r, margin + 1).unwrap();
        prop_assert!(finer.upper - finer.lower <= br.upper - br.lower + 1e-9);
    }

    #[test]
    fn cascades_are_deterministic(seed in 0u64..1000) {
        let spec = CascadeSpec { c: 2, d: 1, generator: Generator::Gaussian { mean: 0.0, variance: 0.3 }, depth: 8, seed };
        prop_assert_eq!(build_cascade(&spec).unwrap(), build_cascade(&spec).unwrap());
    }
}

#[test]
fn cascade_mean_mass_is_one() {
    let masses: Vec<f64> = (0..1000)
        .map(|seed| {
            let spec = CascadeSpec { c: 2, d: 1, generator: Generator::Gaussian { mean: 0.0, variance: 0.3 }, depth: 6, seed };
            build_cascade(&spec).unwrap().total_log_mass().exp()
        })
        .collect();
    let (m, se) = mean_se(&masses);
    assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn cpc_mean_mass_is_one() {
    let masses: Vec<f64> = (0..1000)
        .map(|seed| build_cpc(&CpcSpec::new(0.3, 0.05, seed), 6).unwrap().total_log_mass().exp())
        .collect();
    let (m, se) = mean_se(&masses);
    assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn box_masses_match_digit_products() {
    let spec = MultinomialSpec::new(2, vec![vec![0.7, 0.3]]).unwrap();
    let mu = build_multinomial(&spec, 8).unwrap();
    for k in 0..256u64 {
        let b = CAdicBox { c: 2, j: 8, k: vec![k] };
        let want: f64 = b.digits(0).iter().map(|&g| if g == 0 { 0.7f64.ln() } else { 0.3f64.ln() }).sum();
        assert!((mu.box_mass(&b).unwrap() - want).abs() < 1e-12);
    }
}
