//! Log-gamma based combinatorics and compensated summation.

#[allow(unused_imports)]
use num_traits::Float;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln binom(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `binom(n, k)` as a float, exact while it fits in 53 bits.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    if acc < 9.0e15 {
        acc.round()
    } else {
        acc
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl core::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// `ln Σ exp(x_i)`, stable; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + sum_compensated(xs.iter().map(|&x| (x - m).exp())).ln()
}

/// `log_M(x) = max(ln x, -M)`.
pub fn log_m(x: f64, m: f64) -> f64 {
    if x <= 0.0 {
        -m
    } else {
        x.ln().max(-m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_and_binomials() {
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert_eq!(binomial(10, 5), 252.0);
        assert_eq!(binomial(2, 1), 2.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert!((ln_binomial(50, 25) - binomial(50, 25).ln()).abs() < 1e-10);
        assert_eq!(ln_binomial(7, 0), 0.0);
    }

    #[test]
    fn gamma_half() {
        let g = ln_gamma(1.5).exp();
        assert!((g - core::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum_compensated(xs.iter().cloned()), 2.0);
    }

    #[test]
    fn lse_matches_direct() {
        let xs = [0.1, -2.0, 3.5];
        let direct = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn truncated_log() {
        assert_eq!(log_m(0.0, 5.0), -5.0);
        assert_eq!(log_m(1.0, 5.0), 0.0);
        assert_eq!(log_m(1e-10, 5.0), -5.0);
    }
}
