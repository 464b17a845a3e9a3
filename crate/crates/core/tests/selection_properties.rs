use proptest::prelude::*;
use ubiq::measures::{build_multinomial, MultinomialSpec};
use ubiq::selection::{limsup_boxcount, select, BoxCountOptions, EpsSpec, SelectionSpec};
use ubiq::systems::{gen_badic, DEFAULT_BUDGET};

/// log μ of the generation-j box k from its binary digits.
fn log_box(w: &[f64; 2], j: u32, k: u64) -> f64 {
    (0..j).map(|i| w[((k >> i) & 1) as usize].ln()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn selection_equals_digit_filter(p in 0.55f64..0.9, alpha in 0.3f64..1.6, eps in 0.01f64..0.3) {
        let w = [p, 1.0 - p];
        let sys = gen_badic(2, 1, 10, DEFAULT_BUDGET).unwrap();
        let mu = build_multinomial(&MultinomialSpec::new(2, vec![w.to_vec()]).unwrap(), 14).unwrap();
        let spec = SelectionSpec { rho: 1.0, alpha, eps: EpsSpec::Constant { value: eps }, delta: 1.0, margin: 3 };
        let sel = select(&sys, &mu, &spec).unwrap();
        prop_assert!(sel.indeterminate.is_empty());
        let mut want = Vec::new();
        for n in 0..sys.len() {
            // Point k 2^{-j} with λ = 2^{1−j}: the open ball is the union of boxes k−2..k+1 of generation j.
            let x = sys.point(n)[0];
            let lambda = sys.lambda(n);
            let j = (2.0 / lambda).log2().round() as u32;
            let k = (x * (1u64 << j) as f64).round() as i64;
            let hi = (1i64 << j) - 1;
            let mass: f64 = (k - 2..=k + 1).filter(|&m| (0..=hi).contains(&m)).map(|m| log_box(&w, j, m as u64).exp()).sum();
            let e = mass.ln() / lambda.ln();
            if (e - alpha).abs() <= eps {
                want.push(n);
            }
        }
        prop_assert_eq!(sel.selected_indices(), want);
    }

    #[test]
    fn counts_shrink_with_delta_and_tail(p in 0.55f64..0.9, d1 in 1.0f64..2.0, step in 0.0f64..1.0) {
        let w = [p, 1.0 - p];
        let sys = gen_badic(2, 1, 12, DEFAULT_BUDGET).unwrap();
        let mu = build_multinomial(&MultinomialSpec::new(2, vec![w.to_vec()]).unwrap(), 16).unwrap();
        let h = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        let spec = SelectionSpec { rho: 1.0, alpha: h, eps: EpsSpec::Constant { value: 0.2 }, delta: d1, margin: 3 };
        let sel = select(&sys, &mu, &spec).unwrap();
        let opts = BoxCountOptions { tails: vec![0, 50, 500, 5000], j_top: Some(14), tau_star: h, ..Default::default() };
        let a = limsup_boxcount(&sys, &sel, &opts);
        let mut sel2 = sel.clone();
        sel2.spec.delta = d1 + step;
        let b = limsup_boxcount(&sys, &sel2, &opts);
        for (ta, tb) in a.tails.iter().zip(&b.tails) {
            for (ca, cb) in ta.union_counts.iter().zip(&tb.union_counts) {
                prop_assert_eq!(ca.0, cb.0);
                prop_assert!(cb.1 <= ca.1);
            }
        }
        for pair in a.tails.windows(2) {
            for (c0, c1) in pair[0].union_counts.iter().zip(&pair[1].union_counts) {
                prop_assert!(c1.1 <= c0.1);
            }
        }
    }
}

#[test]
fn lebesgue_double_contraction_slope_is_half() {
    let sys = gen_badic(2, 1, 20, DEFAULT_BUDGET).unwrap();
    let mu = build_multinomial(&MultinomialSpec::uniform(2, 1), 23).unwrap();
    let spec = SelectionSpec { rho: 1.0, alpha: 1.0, eps: EpsSpec::default(), delta: 2.0, margin: 3 };
    let sel = select(&sys, &mu, &spec).unwrap();
    assert_eq!(sel.selected.len() + sel.errors.len(), sys.len());
    let est = limsup_boxcount(&sys, &sel, &BoxCountOptions { j_top: Some(18), tau_star: 1.0, ..Default::default() });
    let slope = est.slope.unwrap();
    assert!((slope - 0.5).abs() <= 0.1, "{slope}");
}
