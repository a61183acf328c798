//! Log-domain arithmetic helpers and compensated summation.

/// log(exp(a) + exp(b)) without overflow; -inf is an absorbing zero summand.
#[inline]
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// count * ln(p) with the conventions 0 * ln(0) = 0 and count * ln(0) = -inf.
#[inline]
pub fn ln_pow(p: f64, count: u32) -> f64 {
    if count == 0 {
        0.0
    } else if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::from(count) * p.ln()
    }
}

/// Kahan compensated accumulator, used where sums of many exponentiated
/// terms must stay accurate to ~1e-15 regardless of term count.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_naive_in_safe_range() {
        let cases: [(f64, f64); 3] = [(0.5, 2.0), (-3.0, -4.5), (0.0, 0.0)];
        for (a, b) in cases {
            let expected = (a.exp() + b.exp()).ln();
            assert!((log_sum_exp(a, b) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn log_sum_exp_survives_large_magnitudes() {
        // log(e^1234 + e^1232) = 1232 + log(e^2 + 1); naive overflows.
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_sum_exp(1234.0, 1232.0) - expected).abs() < 1e-9);
        assert!((1234f64.exp() + 1232f64.exp()).ln().is_infinite());
    }

    #[test]
    fn neg_infinity_is_absorbing_zero() {
        assert_eq!(log_sum_exp(f64::NEG_INFINITY, -2.0), -2.0);
        assert_eq!(log_sum_exp(-2.0, f64::NEG_INFINITY), -2.0);
        assert_eq!(
            log_sum_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn ln_pow_conventions() {
        assert_eq!(ln_pow(0.0, 0), 0.0);
        assert_eq!(ln_pow(0.0, 3), f64::NEG_INFINITY);
        assert!((ln_pow(0.5, 2) - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(ln_pow(1.0, 5), 0.0);
    }

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
