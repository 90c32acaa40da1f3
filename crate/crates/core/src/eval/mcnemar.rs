//! McNemar's paired significance test for two classifiers.
//!
//! Small disagreement counts (`b + c < 25`) take the exact two-sided
//! binomial route; larger counts use the continuity-corrected chi-square
//! statistic with its 1-df tail computed through the complementary error
//! function.

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McNemarMethod {
    Exact,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McNemarResult {
    /// Items A got right and B got wrong.
    pub b: usize,
    /// Items A got wrong and B got right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub method: McNemarMethod,
    pub no_disagreements: bool,
}

/// Runs McNemar's test on aligned predictions.
pub fn mcnemar(gold: &[u8], pred_a: &[u8], pred_b: &[u8]) -> Result<McNemarResult, EvalError> {
    if gold.len() != pred_a.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred_a.len()));
    }
    if gold.len() != pred_b.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred_b.len()));
    }
    let mut b = 0usize;
    let mut c = 0usize;
    for i in 0..gold.len() {
        let a_right = pred_a[i] == gold[i];
        let b_right = pred_b[i] == gold[i];
        match (a_right, b_right) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let n = b + c;
    if n == 0 {
        return Ok(McNemarResult {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
            method: McNemarMethod::Exact,
            no_disagreements: true,
        });
    }
    if n < 25 {
        let m = b.min(c);
        let p = (2.0 * binomial_cdf_half(n, m)).min(1.0);
        Ok(McNemarResult {
            b,
            c,
            statistic: m as f64,
            p_value: p,
            method: McNemarMethod::Exact,
            no_disagreements: false,
        })
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let diff = diff.max(0.0);
        let statistic = diff * diff / n as f64;
        let p_value = chi_square_tail_1df(statistic);
        Ok(McNemarResult {
            b,
            c,
            statistic,
            p_value,
            method: McNemarMethod::ChiSquare,
            no_disagreements: false,
        })
    }
}

/// `P(X <= m)` for `X ~ Binomial(n, 1/2)`. Every term is an exact dyadic
/// rational for the `n < 25` range this test uses.
fn binomial_cdf_half(n: usize, m: usize) -> f64 {
    let half_pow = 0.5f64.powi(n as i32);
    let mut coeff: u128 = 1;
    let mut total = 0.0f64;
    for i in 0..=m {
        if i > 0 {
            coeff = coeff * (n as u128 - i as u128 + 1) / i as u128;
        }
        total += coeff as f64 * half_pow;
    }
    total
}

/// `P(X > s)` for chi-square with 1 degree of freedom: `erfc(sqrt(s/2))`.
fn chi_square_tail_1df(statistic: f64) -> f64 {
    erfc((statistic / 2.0).sqrt())
}

/// Complementary error function via the Chebyshev-fitted rational
/// approximation; fractional error below 1.2e-7 over the real line.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_disagreement_p_is_one() {
        // b = c = 5 via constructed predictions
        let gold = vec![1u8; 10];
        let mut pred_a = vec![1u8; 10];
        let mut pred_b = vec![1u8; 10];
        for i in 0..5 {
            pred_b[i] = 0; // A right, B wrong
        }
        for i in 5..10 {
            pred_a[i] = 0; // A wrong, B right
        }
        let r = mcnemar(&gold, &pred_a, &pred_b).unwrap();
        assert_eq!((r.b, r.c), (5, 5));
        assert_eq!(r.method, McNemarMethod::Exact);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn exact_path_fixture_b15_c5() {
        let gold = vec![1u8; 30];
        let mut pred_a = vec![1u8; 30];
        let mut pred_b = vec![1u8; 30];
        for i in 0..15 {
            pred_b[i] = 0;
        }
        for i in 15..20 {
            pred_a[i] = 0;
        }
        let r = mcnemar(&gold, &pred_a, &pred_b).unwrap();
        assert_eq!((r.b, r.c), (15, 5));
        assert_eq!(r.method, McNemarMethod::Exact);
        // 2 * sum_{i<=5} C(20,i) / 2^20 = 43400 / 1048576
        let expected = 2.0 * 21700.0 / 1048576.0;
        assert!((r.p_value - expected).abs() < 1e-15);
        assert!((r.p_value - 0.0414).abs() < 1e-4);
    }

    #[test]
    fn chi_square_path_fixture_b40_c10() {
        let gold = vec![1u8; 60];
        let mut pred_a = vec![1u8; 60];
        let mut pred_b = vec![1u8; 60];
        for i in 0..40 {
            pred_b[i] = 0;
        }
        for i in 40..50 {
            pred_a[i] = 0;
        }
        let r = mcnemar(&gold, &pred_a, &pred_b).unwrap();
        assert_eq!((r.b, r.c), (40, 10));
        assert_eq!(r.method, McNemarMethod::ChiSquare);
        assert!((r.statistic - 16.82).abs() < 1e-12);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn no_disagreements_flagged() {
        let gold = [1u8, 0, 1];
        let pred = [1u8, 1, 1];
        let r = mcnemar(&gold, &pred, &pred).unwrap();
        assert!(r.no_disagreements);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn swapping_models_swaps_b_and_c() {
        let gold = [1u8, 1, 1, 0, 0, 1, 0, 1];
        let pred_a = [1u8, 0, 1, 0, 1, 1, 0, 0];
        let pred_b = [0u8, 1, 1, 0, 0, 0, 1, 1];
        let r1 = mcnemar(&gold, &pred_a, &pred_b).unwrap();
        let r2 = mcnemar(&gold, &pred_b, &pred_a).unwrap();
        assert_eq!(r1.b, r2.c);
        assert_eq!(r1.c, r2.b);
        assert_eq!(r1.p_value, r2.p_value);
    }

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285).abs() < 1e-7);
        assert!((erfc(2.0) - 0.004_677_734_981_063_1).abs() < 1e-8);
        assert!((erfc(-1.0) - (2.0 - 0.157_299_207_050_285)).abs() < 1e-7);
    }
}
