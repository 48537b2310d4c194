//! Random polynomial ensembles: bases, Gaussian coefficients and roots.
//!
//! A degree-`n` model is `P = Σ a_k R_k` with i.i.d. Gaussian `a_k`:
//! complex `a_k = b_k + i c_k` with `(b_k, c_k) ~ N(0, I/2)`, or real
//! `a_k ~ N(0, 1/2)`. The basis `R_k` is `X^k` (Kac), `√binom(n,k) X^k`
//! (elliptic) or the orthonormal basis of `⟨P, Q⟩ = ∫ P Q̄ e^{-nφ} dν` for a
//! user-supplied discretized pair `(ν, φ)`.

pub mod eigen;
pub mod roots;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::PlanePoint;
use crate::measures::EmpiricalMeasure;
use crate::rng::{normal, stream_rng, Rng};
use crate::special::{ln_binomial, NeumaierSum};
pub use roots::{monic_from_roots, reconstruction_error, roots_of, RootError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("sampled leading coefficient is exactly zero twice")]
    DegenerateLeading,
    #[error("discretized Gram matrix is numerically singular at degree {degree}")]
    SingularGram { degree: usize },
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Which basis the Gaussian coefficients multiply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Kac,
    Elliptic,
    Orthogonal,
}

/// A discretized pair `(ν, φ)`: support points, `ν` weights summing to one and `φ` values.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalData {
    pub support: Vec<PlanePoint>,
    pub nu: Vec<f64>,
    pub phi: Vec<f64>,
}

impl OrthogonalData {
    pub fn new(support: Vec<PlanePoint>, nu: Vec<f64>, phi: Vec<f64>) -> Result<Self, EnsembleError> {
        if support.is_empty() || support.len() != nu.len() || support.len() != phi.len() {
            return Err(EnsembleError::InvalidSpec("support, weights and phi must be nonempty and of equal length".into()));
        }
        if nu.iter().any(|&w| !(w >= 0.0)) || phi.iter().any(|p| !p.is_finite()) {
            return Err(EnsembleError::InvalidSpec("weights must be nonnegative and phi finite".into()));
        }
        if support.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(EnsembleError::InvalidSpec("support points must be finite".into()));
        }
        let total: f64 = nu.iter().cloned().collect::<NeumaierSum>().value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(EnsembleError::InvalidSpec(alloc::format!("weights sum to {total}, not 1")));
        }
        Ok(Self { support, nu, phi })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Kac,
    Elliptic,
    Orthogonal(Arc<OrthogonalData>),
}

impl Basis {
    pub fn tag(&self) -> BasisTag {
        match self {
            Basis::Kac => BasisTag::Kac,
            Basis::Elliptic => BasisTag::Elliptic,
            Basis::Orthogonal(_) => BasisTag::Orthogonal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientField {
    RealGaussian,
    ComplexGaussian,
}

/// Ensemble, field, degree and speed `β_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub basis: Basis,
    pub field: CoefficientField,
    pub n: usize,
    pub beta: f64,
    change: Option<Arc<BasisChange>>,
}

impl ModelSpec {
    /// Model with the default speed `β_n = n²`.
    pub fn new(basis: Basis, field: CoefficientField, n: usize) -> Result<Self, EnsembleError> {
        Self::with_beta(basis, field, n, (n * n) as f64)
    }

    pub fn with_beta(basis: Basis, field: CoefficientField, n: usize, beta: f64) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::InvalidSpec("degree must be at least 1".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(EnsembleError::InvalidSpec("speed must be positive".into()));
        }
        let change = match &basis {
            Basis::Orthogonal(d) => Some(Arc::new(gram_schmidt_basis(&d.support, &d.nu, &d.phi, n)?)),
            _ => None,
        };
        Ok(Self { basis, field, n, beta, change })
    }

    pub fn kac(field: CoefficientField, n: usize) -> Self {
        Self::new(Basis::Kac, field, n).expect("valid Kac model")
    }

    pub fn elliptic(field: CoefficientField, n: usize) -> Self {
        Self::new(Basis::Elliptic, field, n).expect("valid elliptic model")
    }

    /// Whether `β_n = n²`, the only speed validated for real coefficients.
    pub fn is_default_speed(&self) -> bool {
        self.beta == (self.n * self.n) as f64
    }

    /// Orthonormal change of basis for the orthogonal model.
    pub fn basis_change(&self) -> Option<&BasisChange> {
        self.change.as_deref()
    }

    /// `log |A_n|²`: zero for Kac, `Σ log((n+1)·binom(n,k))` for elliptic.
    pub fn log_abs_a2(&self) -> f64 {
        match &self.basis {
            Basis::Kac => 0.0,
            Basis::Elliptic => (0..=self.n)
                .map(|k| ((self.n + 1) as f64).ln() + ln_binomial(self.n, k))
                .collect::<NeumaierSum>()
                .value(),
            Basis::Orthogonal(_) => self.change.as_ref().expect("computed at construction").log_abs_a2,
        }
    }
}

/// Lower-triangular change of basis: `R_k = Σ_{j ≤ k} C_kj X^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisChange {
    n: usize,
    c: Vec<Complex64>,
    pub log_abs_a2: f64,
}

impl BasisChange {
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn entry(&self, k: usize, j: usize) -> Complex64 {
        self.c[k * (self.n + 1) + j]
    }

    /// Monomial coefficients of `Σ a_k R_k`.
    pub fn to_monomial(&self, a: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, &ak) in a.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                *o += ak * self.entry(k, j);
            }
        }
        out
    }
}

/// Threshold on `|residual|² / |monomial|²` below which the Gram matrix is
/// declared singular (a condition number of `1e12`).
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Orthonormalize `1, X, …, X^n` for `⟨P, Q⟩ = Σ_p ν_p P(z_p) conj(Q(z_p)) e^{-nφ_p}`.
///
/// Modified Gram–Schmidt with one reorthogonalization pass, carried out on
/// polynomial values over the support and mirrored on coefficients.
pub fn gram_schmidt_basis(support: &[PlanePoint], nu: &[f64], phi: &[f64], n: usize) -> Result<BasisChange, EnsembleError> {
    let m = support.len();
    if m == 0 || nu.len() != m || phi.len() != m {
        return Err(EnsembleError::InvalidSpec("support, weights and phi must be nonempty and of equal length".into()));
    }
    let sw: Vec<f64> = nu.iter().zip(phi).map(|(&w, &f)| (w * (-(n as f64) * f).exp()).sqrt()).collect();
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for (a, b) in u.iter().zip(v) {
            let p = a * b.conj();
            re.add(p.re);
            im.add(p.im);
        }
        Complex64::new(re.value(), im.value())
    };
    let size = n + 1;
    let mut c = alloc::vec![Complex64::new(0.0, 0.0); size * size];
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(size);
    let mut log_abs_a2 = NeumaierSum::new();
    for j in 0..size {
        let mut u: Vec<Complex64> = support.iter().zip(&sw).map(|(z, &s)| z.powu(j as u32) * s).collect();
        let norm0 = dot(&u, &u).re.sqrt();
        let mut coef = alloc::vec![Complex64::new(0.0, 0.0); size];
        coef[j] = Complex64::new(1.0, 0.0);
        for _pass in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = dot(&u, qk);
                for (a, b) in u.iter_mut().zip(qk) {
                    *a -= proj * b;
                }
                for i in 0..=k {
                    coef[i] -= proj * c[k * size + i];
                }
            }
        }
        let norm = dot(&u, &u).re.sqrt();
        if !(norm > 0.0) || !(norm0 > 0.0) || (norm / norm0).powi(2) * GRAM_CONDITION_LIMIT < 1.0 {
            return Err(EnsembleError::SingularGram { degree: j });
        }
        for a in &mut u {
            *a /= norm;
        }
        for i in 0..=j {
            c[j * size + i] = coef[i] / norm;
        }
        log_abs_a2.add(-2.0 * norm.ln());
        q.push(u);
    }
    Ok(BasisChange { n, c, log_abs_a2: log_abs_a2.value() })
}

/// A polynomial with coefficients in the monomial basis stored as
/// `(log|c_k|, c_k/|c_k|)`, plus the Gaussian coefficients it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial {
    basis: BasisTag,
    log_mag: Vec<f64>,
    phase: Vec<Complex64>,
    gaussians: Vec<Complex64>,
}

impl ComplexPolynomial {
    /// From monomial coefficients (low to high).
    pub fn from_monomial(basis: BasisTag, coeffs: &[Complex64]) -> Self {
        let (log_mag, phase) = coeffs.iter().map(|&c| split_polar(c)).unzip();
        Self { basis, log_mag, phase, gaussians: coeffs.to_vec() }
    }

    fn from_parts(basis: BasisTag, log_mag: Vec<f64>, phase: Vec<Complex64>, gaussians: Vec<Complex64>) -> Self {
        Self { basis, log_mag, phase, gaussians }
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn degree(&self) -> usize {
        self.log_mag.len() - 1
    }

    /// The sampled `a_k` (coefficients in the model's basis).
    pub fn gaussians(&self) -> &[Complex64] {
        &self.gaussians
    }

    pub fn log_magnitudes(&self) -> &[f64] {
        &self.log_mag
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phase
    }

    /// Monomial coefficient `c_k`; may overflow for huge binomials.
    pub fn coefficient(&self, k: usize) -> Complex64 {
        self.phase[k] * self.log_mag[k].exp()
    }

    /// Monomial coefficients divided by the largest magnitude.
    pub fn normalized_coefficients(&self) -> Vec<Complex64> {
        let top = self.log_mag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.log_mag.iter().zip(&self.phase).map(|(&l, &p)| p * (l - top).exp()).collect()
    }

    /// Coefficients of the monic polynomial with the same roots.
    pub fn monic_coefficients(&self) -> Vec<Complex64> {
        let n = self.degree();
        let (ln, pn) = (self.log_mag[n], self.phase[n]);
        self.log_mag.iter().zip(&self.phase).map(|(&l, &p)| (p / pn) * (l - ln).exp()).collect()
    }

    /// Whether every coefficient is exactly real.
    pub fn is_real(&self) -> bool {
        self.phase.iter().all(|p| p.im == 0.0)
    }

    /// Multiply every coefficient by a nonzero constant.
    pub fn scaled(&self, lambda: Complex64) -> Self {
        let (ll, lp) = split_polar(lambda);
        Self {
            basis: self.basis,
            log_mag: self.log_mag.iter().map(|l| l + ll).collect(),
            phase: self.phase.iter().map(|p| p * lp).collect(),
            gaussians: self.gaussians.iter().map(|g| g * lambda).collect(),
        }
    }
}

fn split_polar(c: Complex64) -> (f64, Complex64) {
    let r = c.norm();
    if r == 0.0 {
        (f64::NEG_INFINITY, Complex64::new(1.0, 0.0))
    } else if c.im == 0.0 {
        (r.ln(), Complex64::new(c.re.signum(), 0.0))
    } else {
        (r.ln(), c / r)
    }
}

fn draw<R: Rng>(field: CoefficientField, rng: &mut R) -> Complex64 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    match field {
        CoefficientField::RealGaussian => Complex64::new(s * normal(rng), 0.0),
        CoefficientField::ComplexGaussian => Complex64::new(s * normal(rng), s * normal(rng)),
    }
}

/// Draw `a_0..a_n` for `spec` from the stream `seed` and fold the basis in.
pub fn sample_coefficients(spec: &ModelSpec, seed: u64) -> Result<ComplexPolynomial, EnsembleError> {
    let mut rng = stream_rng(seed, 0);
    sample_with(spec, &mut rng)
}

/// Same as [`sample_coefficients`] with a caller-owned generator.
pub fn sample_with<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<ComplexPolynomial, EnsembleError> {
    let n = spec.n;
    let mut a: Vec<Complex64> = (0..=n).map(|_| draw(spec.field, rng)).collect();
    if a[n].norm() == 0.0 {
        a[n] = draw(spec.field, rng);
        if a[n].norm() == 0.0 {
            return Err(EnsembleError::DegenerateLeading);
        }
    }
    let tag = spec.basis.tag();
    Ok(match &spec.basis {
        Basis::Kac => {
            let (l, p) = a.iter().map(|&c| split_polar(c)).unzip();
            ComplexPolynomial::from_parts(tag, l, p, a)
        }
        Basis::Elliptic => {
            let (l, p): (Vec<f64>, Vec<Complex64>) = a
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let (lm, ph) = split_polar(c);
                    (lm + 0.5 * ln_binomial(n, k), ph)
                })
                .unzip();
            ComplexPolynomial::from_parts(tag, l, p, a)
        }
        Basis::Orthogonal(_) => {
            let change = spec.basis_change().expect("computed at construction");
            let mono = change.to_monomial(&a);
            let (l, p) = mono.iter().map(|&c| split_polar(c)).unzip();
            ComplexPolynomial::from_parts(tag, l, p, a)
        }
    })
}

/// The `n` roots with multiplicity, sorted by `(Re, Im)`.
pub fn find_roots(p: &ComplexPolynomial) -> Result<EmpiricalMeasure<PlanePoint>, EnsembleError> {
    let roots = roots_of(&p.normalized_coefficients())?;
    Ok(EmpiricalMeasure::new(roots).expect("finite roots"))
}

/// Whether the atoms are closed under conjugation, pairing greedily by
/// nearest conjugate with tolerance `1e-8·max(1, |z|)`.
pub fn real_symmetry_check(mu: &EmpiricalMeasure<PlanePoint>) -> bool {
    conjugate_pairing(mu.atoms(), 1e-8).is_some()
}

/// Split atoms into real ones and upper-half-plane representatives of
/// conjugate pairs; `None` if some atom has no conjugate partner.
pub fn conjugate_pairing(atoms: &[PlanePoint], tol: f64) -> Option<(Vec<f64>, Vec<PlanePoint>)> {
    let scale = |z: &PlanePoint| tol * z.norm().max(1.0);
    let mut used = alloc::vec![false; atoms.len()];
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        let z = atoms[i];
        if z.im.abs() <= scale(&z) {
            used[i] = true;
            reals.push(z.re);
            continue;
        }
        let target = z.conj();
        let mut best = None;
        let mut bd = f64::INFINITY;
        for (j, w) in atoms.iter().enumerate() {
            if j != i && !used[j] {
                let d = (w - target).norm();
                if d < bd {
                    bd = d;
                    best = Some(j);
                }
            }
        }
        let j = best?;
        if bd > scale(&z) {
            return None;
        }
        used[i] = true;
        used[j] = true;
        let rep = if z.im > 0.0 { z } else { atoms[j] };
        // Average the pair so the stored representative is exactly self-conjugate.
        let w = atoms[j];
        pairs.push(Complex64::new(0.5 * (rep.re + if rep == z { w.re } else { z.re }), 0.5 * (z.im.abs() + w.im.abs())));
    }
    reals.sort_by(f64::total_cmp);
    pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Some((reals, pairs))
}
