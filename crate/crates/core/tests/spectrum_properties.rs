use proptest::prelude::*;
use ubiq::measures::{build_multinomial, MultinomialSpec};
use ubiq::spectrum::{dim_formula, legendre_point, q_grid, tau_fit};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn legendre_duality(p in 0.55f64..0.95) {
        let w = [p, 1.0 - p];
        let mu = build_multinomial(&MultinomialSpec::new(2, vec![w.to_vec()]).unwrap(), 12).unwrap();
        let grid = q_grid(-5.0, 5.0, 0.1);
        let t = tau_fit(&mu, &grid, (1, 12)).unwrap();
        prop_assert!(t.concavity_violations.is_empty());
        for &q in &grid {
            let z: f64 = w.iter().map(|v| v.powf(q)).sum();
            let tau = -z.log2();
            let dz: f64 = w.iter().map(|v| v.powf(q) * v.ln()).sum();
            let a = -dz / (z * 2f64.ln());
            let lhs = legendre_point(&t.q_grid, &t.tau, a);
            prop_assert!((lhs - (q * a - tau)).abs() <= 1e-6, "q={q}: {lhs} vs {}", q * a - tau);
        }
        let zero = grid.iter().position(|q| q.abs() < 1e-12).unwrap();
        prop_assert!((t.tau[zero] + 1.0).abs() <= 1e-6);
    }

    #[test]
    fn dim_formula_is_non_increasing(beta in 0.0f64..1.0, rho in 0.05f64..1.0, d1 in 1.0f64..5.0, step in 0.0f64..3.0) {
        let a = dim_formula(beta, rho, d1, 1).value;
        let b = dim_formula(beta, rho, d1 + step, 1).value;
        prop_assert!(b <= a);
        prop_assert_eq!(dim_formula(beta, rho, 1.0, 1).value, beta);
    }
}
