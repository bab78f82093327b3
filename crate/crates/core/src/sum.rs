//! Deterministic compensated summation.
//!
//! Every reduction over grid nodes goes through [`fsum`] so that results do not
//! depend on thread scheduling and stay accurate for long sums of small terms.

/// Neumaier-compensated sum in iteration order.
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Weighted sum `Σ w_i x_i`.
pub fn dot(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    fsum(weights.iter().zip(values).map(|(w, x)| w * x))
}

/// `log Σ w_i exp(x_i)` for non-negative weights, without overflow.
pub fn log_sum_exp(weights: &[f64], exponents: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), exponents.len());
    let max = weights
        .iter()
        .zip(exponents)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, x)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s = fsum(
        weights
            .iter()
            .zip(exponents)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, x)| w * (x - max).exp()),
    );
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0e16, 1.0, -1.0e16];
        v.extend(std::iter::repeat(1.0e-3).take(1000));
        assert!((fsum(v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_matches_direct_and_survives_overflow() {
        let w = [0.25, 0.75];
        let x = [1.0, 2.0];
        let direct = (0.25 * 1.0_f64.exp() + 0.75 * 2.0_f64.exp()).ln();
        assert!((log_sum_exp(&w, &x) - direct).abs() < 1e-14);
        let big = [1000.0, 1000.0];
        assert!((log_sum_exp(&w, &big) - 1000.0).abs() < 1e-12);
    }
}
