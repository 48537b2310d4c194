//! Closed-form root laws: normalizing constants, log-densities of the
//! complex gas and of the real mixture, Bernstein–Markov checks and the
//! elliptic inner products.
//!
//! Conventions. The complex density is taken with respect to Lebesgue
//! measure on labelled roots in `C^n`, so `Z_n = π^n |A_n|²`. The real
//! mixture density of the component with `k` conjugate pairs is taken with
//! respect to Lebesgue measure on labelled real roots in `R^{n-2k}` times
//! labelled pair representatives in the upper half-plane, with
//! `Z_{n,k} = k!(n-2k)! π^{(n+1)/2} |A_n| / (2^k Γ((n+1)/2))`. Here
//! `|A_n|² = Π |C_kk|²` is the Jacobian of the orthonormal change of basis
//! (one for Kac, `Π (n+1)·binom(n,k)` for elliptic).

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::ensembles::{conjugate_pairing, BasisTag, ComplexPolynomial, ModelSpec};
use crate::functionals::hamiltonian;
use crate::geometry::PlanePoint;
use crate::quadrature::integrate_half_line;
use crate::special::{binomial, ln_factorial, ln_gamma, NeumaierSum};

/// Tolerance on the conjugation layout of mixture states.
pub const PAIR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExactLawError {
    #[error("two particles coincide")]
    CoincidentParticles,
    #[error("configuration does not have {reals} real particles followed by {pairs} conjugate pairs")]
    BadMixtureStructure { reals: usize, pairs: usize },
    #[error("state has {got} particles, model degree is {want}")]
    WrongLength { got: usize, want: usize },
}

/// `log Z_{n,k}` for `k = 0..=⌊n/2⌋`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureConstants {
    pub n: usize,
    pub log_z: Vec<f64>,
}

impl MixtureConstants {
    /// `max_k |log Z_{n,k}| / n²`.
    pub fn uniform_control(&self) -> f64 {
        let n2 = (self.n * self.n) as f64;
        self.log_z.iter().map(|v| v.abs()).fold(0.0, f64::max) / n2
    }
}

/// `log Z_{n,k}` for the Kac basis (`|A_n| = 1`).
pub fn log_z_kac(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    ln_factorial(k) + ln_factorial(n - 2 * k) + 0.5 * (nf + 1.0) * PI.ln()
        - k as f64 * core::f64::consts::LN_2
        - ln_gamma(0.5 * (nf + 1.0))
}

/// The table of `log Z_{n,k}` for a model.
pub fn mixture_constants(spec: &ModelSpec) -> MixtureConstants {
    let n = spec.n;
    let shift = 0.5 * spec.log_abs_a2();
    MixtureConstants { n, log_z: (0..=n / 2).map(|k| log_z_kac(n, k) + shift).collect() }
}

/// `log Z_n = n log π + log |A_n|²`.
pub fn log_z_complex(spec: &ModelSpec) -> f64 {
    spec.n as f64 * PI.ln() + spec.log_abs_a2()
}

/// A log-density evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityValue {
    /// `-β_n H` (complex) or `-(β_n/2) H` (real).
    pub log_unnormalized: f64,
    /// Normalized log-density; meaningful as a root law at `β_n = n²`.
    pub log_density: f64,
    /// Number of conjugate pairs (real case).
    pub k: Option<usize>,
}

fn check_len(state: &[Complex64], spec: &ModelSpec) -> Result<(), ExactLawError> {
    if state.len() != spec.n {
        return Err(ExactLawError::WrongLength { got: state.len(), want: spec.n });
    }
    Ok(())
}

/// Log-density of labelled complex roots: `-β_n H - log Z_n`.
pub fn complex_root_logdensity(state: &[Complex64], spec: &ModelSpec) -> Result<DensityValue, ExactLawError> {
    check_len(state, spec)?;
    let h = hamiltonian(state, spec);
    if h == f64::INFINITY {
        return Err(ExactLawError::CoincidentParticles);
    }
    let lu = -spec.beta * h;
    Ok(DensityValue { log_unnormalized: lu, log_density: lu - log_z_complex(spec), k: None })
}

/// Validate and snap a mixture layout: `n - 2k` reals, then `k` pairs
/// `(z, z̄)` with `Im z > 0`. Returns the exact configuration.
pub fn snap_mixture_layout(state: &[Complex64], k: usize) -> Result<Vec<Complex64>, ExactLawError> {
    let n = state.len();
    let bad = ExactLawError::BadMixtureStructure { reals: n.saturating_sub(2 * k), pairs: k };
    if 2 * k > n {
        return Err(bad);
    }
    let r = n - 2 * k;
    let tol = |z: Complex64| PAIR_TOL * z.norm().max(1.0);
    let mut out = Vec::with_capacity(n);
    for &z in &state[..r] {
        if z.im.abs() > tol(z) {
            return Err(bad);
        }
        out.push(Complex64::new(z.re, 0.0));
    }
    for p in state[r..].chunks(2) {
        let (z, w) = (p[0], p[1]);
        if z.im <= tol(z) || (z - w.conj()).norm() > tol(z) {
            return Err(bad);
        }
        out.push(z);
        out.push(z.conj());
    }
    Ok(out)
}

/// Arrange the roots of a real polynomial as a mixture layout.
pub fn mixture_layout(roots: &[PlanePoint]) -> Option<(Vec<Complex64>, usize)> {
    let (reals, pairs) = conjugate_pairing(roots, PAIR_TOL)?;
    let mut out: Vec<Complex64> = reals.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for z in &pairs {
        out.push(*z);
        out.push(z.conj());
    }
    Some((out, pairs.len()))
}

/// Log-density of the `k`-pair component: `-(β_n/2) H - log Z_{n,k}`.
pub fn real_mixture_logdensity(state: &[Complex64], k: usize, spec: &ModelSpec) -> Result<DensityValue, ExactLawError> {
    check_len(state, spec)?;
    let exact = snap_mixture_layout(state, k)?;
    let h = hamiltonian(&exact, spec);
    if h == f64::INFINITY {
        return Err(ExactLawError::CoincidentParticles);
    }
    let lu = -0.5 * spec.beta * h;
    let lz = mixture_constants(spec).log_z[k];
    Ok(DensityValue { log_unnormalized: lu, log_density: lu - lz, k: Some(k) })
}

/// One Bernstein–Markov comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernsteinMarkovReport {
    /// Grid supremum: `max |P|` on the circle, or `max |P|²/(1+|z|²)^n`.
    pub sup_value: f64,
    /// `‖P‖` (circle) or `‖P‖²` (elliptic).
    pub l2_norm: f64,
    pub ratio: f64,
    /// `√(N+1)` (circle) or `n+1` (elliptic).
    pub bound: f64,
    pub pass: bool,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Compare a grid supremum against the Bernstein–Markov bound.
///
/// Kac: `sup_{S¹} |P| ≤ √(N+1) ‖P‖_{L²(ν_S)}` on `16(N+1)` circle points.
/// Elliptic: `sup |P|²/(1+|z|²)^n ≤ (n+1) ‖P‖²` on `16(N+1)` points of a
/// height × longitude sphere grid. The grid supremum is a lower bound of the
/// true one, so a failure is a genuine violation.
pub fn bernstein_markov_check(p: &ComplexPolynomial) -> BernsteinMarkovReport {
    let c = p.normalized_coefficients();
    let nd = p.degree();
    let pts = 16 * (nd + 1);
    match p.basis() {
        BasisTag::Elliptic => {
            let n = nd as i32;
            let l2: f64 = c
                .iter()
                .enumerate()
                .map(|(k, ck)| ck.norm_sqr() / ((nd + 1) as f64 * binomial(nd, k)))
                .collect::<NeumaierSum>()
                .value();
            let nt = 2 * (nd + 1);
            let gl = crate::quadrature::GaussLegendre::new(nt);
            let mut sup = 0.0f64;
            for &t in &gl.nodes {
                let r = ((1.0 + t) / (1.0 - t)).sqrt();
                for j in 0..8 {
                    let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / 8.0);
                    sup = sup.max(horner(&c, z).norm_sqr() / (1.0 + r * r).powi(n));
                }
            }
            let bound = (nd + 1) as f64;
            let ratio = sup / l2;
            BernsteinMarkovReport { sup_value: sup, l2_norm: l2, ratio, bound, pass: ratio <= bound * (1.0 + 1e-12) }
        }
        _ => {
            let l2 = c.iter().map(|ck| ck.norm_sqr()).collect::<NeumaierSum>().value().sqrt();
            let sup = (0..pts)
                .map(|j| horner(&c, Complex64::from_polar(1.0, 2.0 * PI * j as f64 / pts as f64)).norm())
                .fold(0.0, f64::max);
            let bound = ((nd + 1) as f64).sqrt();
            let ratio = sup / l2;
            BernsteinMarkovReport { sup_value: sup, l2_norm: l2, ratio, bound, pass: ratio <= bound * (1.0 + 1e-12) }
        }
    }
}

/// `⟨X^k, X^k⟩ = ∫ |z|^{2k} (1+|z|²)^{-n} dA(z) / (π(1+|z|²)²) = 1/((n+1)·binom(n,k))`.
pub fn elliptic_inner_product(k: usize, n: usize) -> f64 {
    assert!(k <= n, "k must not exceed n");
    1.0 / ((n + 1) as f64 * binomial(n, k))
}

/// The same inner product by adaptive quadrature of `∫_0^∞ u^k (1+u)^{-n-2} du`.
pub fn elliptic_inner_product_quadrature(k: usize, n: usize) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    integrate_half_line(
        |u| if u == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { (kf * u.ln() - (nf + 2.0) * u.ln_1p()).exp() },
        1e-300,
        1e-13,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{find_roots, sample_coefficients, sample_with, CoefficientField};
    use crate::quadrature::integrate_adaptive;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mixture_constant_examples() {
        assert!((log_z_kac(2, 1) - PI.ln()).abs() < 1e-14);
        assert!((log_z_kac(2, 0) - (4.0 * PI).ln()).abs() < 1e-14);
        let small = mixture_constants(&ModelSpec::kac(CoefficientField::RealGaussian, 2));
        assert_eq!(small.log_z.len(), 2);
        let s200 = mixture_constants(&ModelSpec::kac(CoefficientField::RealGaussian, 200)).uniform_control();
        let s100 = mixture_constants(&ModelSpec::kac(CoefficientField::RealGaussian, 100)).uniform_control();
        let s400 = mixture_constants(&ModelSpec::kac(CoefficientField::RealGaussian, 400)).uniform_control();
        assert!(s200 < 0.05);
        assert!(s400 < s100);
        assert!(mixture_constants(&ModelSpec::elliptic(CoefficientField::RealGaussian, 400)).log_z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn complex_density_examples() {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 2);
        let d = complex_root_logdensity(&[c(1.0, 0.0), c(-1.0, 0.0)], &spec).unwrap();
        assert!((d.log_unnormalized + core::f64::consts::LN_2).abs() < 1e-14);
        let z = [c(0.3, 0.4), c(-1.2, 0.1)];
        let a = complex_root_logdensity(&z, &spec).unwrap().log_density;
        let b = complex_root_logdensity(&[z[1], z[0]], &spec).unwrap().log_density;
        assert_eq!(a, b);
        let rot = Complex64::from_polar(1.0, 0.7);
        let r = complex_root_logdensity(&[z[0] * rot, z[1] * rot], &spec).unwrap().log_density;
        assert!((a - r).abs() < 1e-9);
        assert_eq!(
            complex_root_logdensity(&[c(1.0, 0.0), c(1.0, 0.0)], &spec),
            Err(ExactLawError::CoincidentParticles)
        );
    }

    /// `∫_C density = 1` at n = 1 for Kac and elliptic.
    #[test]
    fn complex_density_normalizes_at_n1() {
        for spec in [
            ModelSpec::kac(CoefficientField::ComplexGaussian, 1),
            ModelSpec::elliptic(CoefficientField::ComplexGaussian, 1),
        ] {
            let total = integrate_half_line(
                |r| {
                    let d = complex_root_logdensity(&[c(r, 0.0)], &spec).unwrap().log_density.exp();
                    2.0 * PI * r * d
                },
                1e-14,
                1e-12,
            );
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
    }

    /// `Σ_k ∫ density_k = 1` at n = 2 for the real Kac mixture.
    #[test]
    fn real_mixture_normalizes_at_n2() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 2);
        let dens = |z: [Complex64; 2], k| real_mixture_logdensity(&z, k, &spec).map(|d| d.log_density.exp()).unwrap_or(0.0);
        let t = |u: f64| u / (1.0 - u * u);
        let jt = |u: f64| (1.0 + u * u) / ((1.0 - u * u) * (1.0 - u * u));
        let m0 = integrate_adaptive(
            |u| {
                let x = t(u);
                jt(u) * integrate_adaptive(|v| jt(v) * dens([c(x, 0.0), c(t(v), 0.0)], 0), -1.0, 1.0, 1e-12, 1e-10)
            },
            -1.0,
            1.0,
            1e-11,
            1e-9,
        );
        let m1 = integrate_adaptive(
            |u| {
                let x = t(u);
                jt(u) * integrate_half_line(|y| dens([c(x, y), c(x, -y)], 1), 1e-13, 1e-10)
            },
            -1.0,
            1.0,
            1e-11,
            1e-9,
        );
        assert!((m0 + m1 - 1.0).abs() < 1e-6, "{m0} {m1}");
        // P(complex roots) for iid N(0, 1/2) coefficients.
        assert!((m1 - 0.3515).abs() < 1e-3, "{m1}");
    }

    #[test]
    fn mixture_structure() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 3);
        let ok = [c(0.5, 0.0), c(0.1, 0.7), c(0.1, -0.7)];
        assert!(real_mixture_logdensity(&ok, 1, &spec).is_ok());
        let bad = [c(0.5, 0.0), c(0.1, 0.7), c(0.2, -0.7)];
        assert!(matches!(real_mixture_logdensity(&bad, 1, &spec), Err(ExactLawError::BadMixtureStructure { .. })));
        let d = real_mixture_logdensity(&[c(0.5, 0.0), c(-1.0, 0.0), c(2.0, 0.0)], 0, &spec).unwrap();
        let h = hamiltonian(&[c(0.5, 0.0), c(-1.0, 0.0), c(2.0, 0.0)], &spec);
        assert!((d.log_unnormalized + 0.5 * 9.0 * h).abs() < 1e-12);
    }

    #[test]
    fn bernstein_markov_examples() {
        let mono = |n: usize, f: &dyn Fn(usize) -> f64| {
            let cs: Vec<Complex64> = (0..=n).map(|k| c(f(k), 0.0)).collect();
            ComplexPolynomial::from_monomial(BasisTag::Kac, &cs)
        };
        let r = bernstein_markov_check(&mono(10, &|k| if k == 10 { 1.0 } else { 0.0 }));
        assert!((r.ratio - 1.0).abs() < 1e-12 && r.pass);
        let r = bernstein_markov_check(&mono(10, &|_| 1.0));
        assert!((r.sup_value - 11.0).abs() < 1e-12);
        assert!((r.ratio - 11f64.sqrt()).abs() < 1e-12 && r.pass, "{r:?}");
        let mut rng = stream_rng(8, 0);
        for i in 0..200 {
            let n = 1 + i % 30;
            let p = sample_with(&ModelSpec::elliptic(CoefficientField::ComplexGaussian, n), &mut rng).unwrap();
            assert!(bernstein_markov_check(&p).pass);
        }
    }

    #[test]
    fn elliptic_inner_products() {
        assert_eq!(elliptic_inner_product(0, 0), 1.0);
        assert_eq!(elliptic_inner_product(0, 1), 0.5);
        assert!((elliptic_inner_product(1, 2) - 1.0 / 6.0).abs() < 1e-16);
        for n in 0..=20 {
            for k in 0..=n {
                let e = elliptic_inner_product(k, n);
                let q = elliptic_inner_product_quadrature(k, n);
                assert!((q - e).abs() <= 1e-8 * e, "k={k} n={n} {q} {e}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn real_roots_fit_mixture_layout(seed in 0u64..10_000, n in 1usize..30) {
            let spec = ModelSpec::kac(CoefficientField::RealGaussian, n);
            let p = sample_coefficients(&spec, seed).unwrap();
            let roots = find_roots(&p).unwrap();
            let (layout, k) = mixture_layout(roots.atoms()).unwrap();
            prop_assert!(real_mixture_logdensity(&layout, k, &spec).is_ok());
        }

        #[test]
        fn density_is_gibbs_form(seed in 0u64..10_000, n in 1usize..12) {
            let spec = ModelSpec::elliptic(CoefficientField::ComplexGaussian, n);
            let p = sample_coefficients(&spec, seed).unwrap();
            let z = find_roots(&p).unwrap().into_atoms();
            let d = complex_root_logdensity(&z, &spec).unwrap();
            let h = hamiltonian(&z, &spec);
            prop_assert!((d.log_unnormalized + spec.beta * h).abs() <= 1e-12 * (1.0 + d.log_unnormalized.abs()));
        }
    }
}
