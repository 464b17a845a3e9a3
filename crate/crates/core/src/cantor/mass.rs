use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{domain, Result};
use crate::measures::MultinomialSpec;

/// Exact rational weights: each weight is read from its shortest decimal form,
/// the last one completes the row to 1.
pub fn exact_weights(spec: &MultinomialSpec) -> Result<Vec<Vec<BigRational>>> {
    spec.weights
        .iter()
        .map(|row| {
            let mut out: Vec<BigRational> = row[..row.len() - 1].iter().map(|&w| decimal_rational(w)).collect::<Result<_>>()?;
            let rest = BigRational::one() - out.iter().fold(BigRational::zero(), |a, b| a + b);
            if rest <= BigRational::zero() {
                return domain("exact weights leave no mass for the last digit");
            }
            out.push(rest);
            Ok(out)
        })
        .collect()
}

fn decimal_rational(w: f64) -> Result<BigRational> {
    let s = format!("{w}");
    if s.contains('e') {
        return domain(format!("weight {s} has no short decimal form"));
    }
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let num: BigInt = format!("{int}{frac}").parse().map_err(|_| crate::Error::Invalid(s.clone()))?;
    Ok(BigRational::new(num, BigInt::from(10u32).pow(frac.len() as u32)))
}

/// Product of exact weights over the `depth` base-c digits of u.
pub(crate) fn rel_exact_mass(w: &[BigRational], u: u128, depth: u32, c: u32) -> BigRational {
    let mut v = u;
    let mut s = BigRational::one();
    for _ in 0..depth {
        s *= &w[(v % c as u128) as usize];
        v /= c as u128;
    }
    s
}
