//! Sample statistics for chain validation: two-sample Kolmogorov–Smirnov,
//! permutation tests, integrated autocorrelation and Gelman–Rubin.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;

use crate::rng::Rng;
use crate::special::NeumaierSum;

/// Sample mean (compensated).
pub fn mean(x: &[f64]) -> f64 {
    x.iter().copied().collect::<NeumaierSum>().value() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).collect::<NeumaierSum>().value() / (x.len() as f64 - 1.0)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample KS statistic `sup |F_a - F_b|` on sorted inputs.
fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    ks_sorted(&sorted(a), &sorted(b))
}

/// Kolmogorov tail `Q(λ) = P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, fast for small λ.
        let y = (-PI * PI / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..6).map(|j| y.powi((2 * j + 1) * (2 * j + 1))).sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let s: f64 = (1..=6).map(|j: i32| if j % 2 == 1 { 1.0 } else { -1.0 } * x.powi(j * j)).sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// How a p-value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PValueMethod {
    Asymptotic,
    Permutation { permutations: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Samples whose effective size `n_a n_b / (n_a + n_b)` is below this use
/// the permutation test.
pub const PERMUTATION_THRESHOLD: f64 = 25.0;

/// Two-sample KS with the asymptotic p-value and the small-sample
/// correction `λ = (√m + 0.12 + 0.11/√m) D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be nonempty");
    let d = ks_statistic(a, b);
    let m = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sm = m.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_q((sm + 0.12 + 0.11 / sm) * d), method: PValueMethod::Asymptotic }
}

/// Permutation p-value `(1 + #{D* ≥ D}) / (1 + permutations)`.
pub fn ks_permutation<R: Rng + ?Sized>(a: &[f64], b: &[f64], permutations: usize, rng: &mut R) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be nonempty");
    let d = ks_statistic(a, b);
    let mut pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut hits = 0usize;
    for _ in 0..permutations {
        pool.shuffle(rng);
        let (x, y) = pool.split_at(a.len());
        if ks_statistic(x, y) >= d - 1e-14 {
            hits += 1;
        }
    }
    KsResult {
        statistic: d,
        p_value: (1 + hits) as f64 / (1 + permutations) as f64,
        method: PValueMethod::Permutation { permutations },
    }
}

/// KS test choosing the permutation fallback for small samples.
pub fn ks_test<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> KsResult {
    let m = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    if m < PERMUTATION_THRESHOLD {
        ks_permutation(a, b, 2000, rng)
    } else {
        ks_two_sample(a, b)
    }
}

/// Integrated autocorrelation time `τ = 1 + 2 Σ_{t≤W} ρ_t` with Sokal's
/// automatic window `W ≥ c τ(W)`, `c = 5`. Returns 1 for constant series.
pub fn integrated_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let y: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0 = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for t in 1..n / 2 {
        let ct = y[..n - t].iter().zip(&y[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Potential scale reduction factor over equal-length chains.
pub fn gelman_rubin(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    assert!(m >= 2, "need at least two chains");
    let l = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    assert!(l >= 2, "chains too short");
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..l])).collect();
    let vars: Vec<f64> = chains.iter().map(|c| variance(&c[..l])).collect();
    let grand = mean(&means);
    let lf = l as f64;
    let b = lf / (m as f64 - 1.0) * means.iter().map(|v| (v - grand) * (v - grand)).sum::<f64>();
    let w = mean(&vars);
    let v = (lf - 1.0) / lf * w + b / lf;
    (v / w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal, stream_rng};

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|v| v + 1e4).collect();
        let r = ks_two_sample(&a, &b);
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-100);
        let mut rng = stream_rng(1, 0);
        let small = [1.0, 2.0, 3.0];
        assert_eq!(ks_test(&small, &small, &mut rng).p_value, 1.0);
        let p = ks_test(&small, &[10.0, 11.0, 12.0], &mut rng);
        assert!(matches!(p.method, PValueMethod::Permutation { .. }));
        assert!(p.p_value < 0.15);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        for l in [1.0, 1.1, 1.18, 1.3] {
            let y = (-PI * PI / (8.0 * l * l)).exp();
            let s: f64 = (0..8).map(|j| y.powi((2 * j + 1) * (2 * j + 1))).sum();
            let a = 1.0 - (2.0 * PI).sqrt() / l * s;
            let x = (-2.0 * l * l).exp();
            let b: f64 = 2.0 * (1..=8).map(|j: i32| if j % 2 == 1 { 1.0 } else { -1.0 } * x.powi(j * j)).sum::<f64>();
            assert!((a - b).abs() < 1e-12);
            assert!((kolmogorov_q(l) - b).abs() < 1e-12);
        }
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn ks_null_is_calibrated() {
        let mut rng = stream_rng(3, 0);
        let mut rejections = 0;
        for _ in 0..400 {
            let a: Vec<f64> = (0..200).map(|_| normal(&mut rng)).collect();
            let b: Vec<f64> = (0..300).map(|_| normal(&mut rng)).collect();
            if ks_two_sample(&a, &b).p_value < 0.05 {
                rejections += 1;
            }
        }
        assert!((5..=40).contains(&rejections), "{rejections}");
    }

    #[test]
    fn iat_of_ar1() {
        let mut rng = stream_rng(4, 0);
        let rho: f64 = 0.8;
        let mut x = 0.0;
        let s: Vec<f64> = (0..200_000)
            .map(|_| {
                x = rho * x + (1.0 - rho * rho).sqrt() * normal(&mut rng);
                x
            })
            .collect();
        let tau = integrated_autocorrelation(&s);
        let exact = (1.0 + rho) / (1.0 - rho);
        assert!((tau - exact).abs() < 0.1 * exact, "{tau}");
        assert_eq!(integrated_autocorrelation(&[2.0; 100]), 1.0);
    }

    #[test]
    fn gelman_rubin_detects_separation() {
        let mut rng = stream_rng(5, 0);
        let a: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
        let b: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
        let c: Vec<f64> = (0..2000).map(|_| 3.0 + normal(&mut rng)).collect();
        assert!(gelman_rubin(&[&a, &b]) < 1.01);
        assert!(gelman_rubin(&[&a, &c]) > 1.5);
    }
}
