//! Simultaneous root extraction: Aberth–Ehrlich iteration seeded by
//! companion-matrix eigenvalues (degree ≤ 60) or by Newton-polygon radii.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::eigen::Matrix;

/// Relative size of the Aberth correction at which a root is accepted.
pub const STEP_TOL: f64 = 1e-13;
/// Sweep budget per attempt.
pub const MAX_SWEEPS: usize = 200;
/// Largest degree seeded from companion eigenvalues.
pub const COMPANION_MAX_DEGREE: usize = 60;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("coefficient is not finite")]
    NonFinite,
    #[error("root iteration did not converge after {sweeps} sweeps and one restart")]
    Convergence { sweeps: usize },
}

/// Horner evaluation of `p` and `p'`, with a running bound `Σ|c_k||z|^k`.
#[inline]
fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let n = c.len() - 1;
    let mut p = c[n];
    let mut d = Complex64::new(0.0, 0.0);
    let mut bound = c[n].norm();
    let az = z.norm();
    for k in (0..n).rev() {
        d = d * z + p;
        p = p * z + c[k];
        bound = bound * az + c[k].norm();
    }
    (p, d, bound)
}

/// Newton ratio `p(z)/p'(z)` and a flag telling whether `|p(z)|` is at the
/// rounding level. Evaluates the reversed polynomial for `|z| > 1`.
fn newton_ratio(c: &[Complex64], rev: &[Complex64], z: Complex64) -> (Complex64, bool) {
    let m = (c.len() - 1) as f64;
    let tiny = 4.0 * m * f64::EPSILON;
    if z.norm() <= 1.0 {
        let (p, d, bound) = horner(c, z);
        (p / d, p.norm() <= tiny * bound)
    } else {
        let y = z.inv();
        let (q, dq, bound) = horner(rev, y);
        // p(z) = z^m q(1/z)  ⇒  p/p' = z / (m - y q'/q).
        let den = q * m - y * dq;
        (z * q / den, q.norm() <= tiny * bound)
    }
}

fn newton_polygon_start(c: &[Complex64], phase: f64) -> Vec<Complex64> {
    let m = c.len() - 1;
    let logs: Vec<f64> = c.iter().map(|a| if a.norm() > 0.0 { a.norm().ln() } else { f64::NEG_INFINITY }).collect();
    // Upper convex hull of (k, log|c_k|).
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..=m {
        if logs[k] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b as f64 - a as f64) * (logs[k] - logs[a]) - (k as f64 - a as f64) * (logs[b] - logs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut z = Vec::with_capacity(m);
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cnt = b - a;
        let r = ((logs[a] - logs[b]) / cnt as f64).exp();
        for j in 0..cnt {
            let ang = 2.0 * PI * (j as f64 / cnt as f64 + a as f64 / m as f64) + phase;
            z.push(Complex64::from_polar(r, ang));
        }
    }
    z
}

fn companion_start(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let m = c.len() - 1;
    let lead = c[m];
    let monic: Vec<Complex64> = c[..m].iter().map(|a| a / lead).collect();
    let mut h = Matrix::companion(&monic);
    h.balance();
    h.hessenberg_eigenvalues()
}

fn aberth(c: &[Complex64], rev: &[Complex64], z: &mut [Complex64]) -> bool {
    let m = z.len();
    let mut done = alloc::vec![false; m];
    let mut finished_sweeps = 0;
    for _ in 0..MAX_SWEEPS {
        let mut all = true;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let (ratio, small) = newton_ratio(c, rev, z[i]);
            if small {
                done[i] = true;
                continue;
            }
            if !(ratio.re.is_finite() && ratio.im.is_finite()) {
                return false;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..m {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm_sqr() == 0.0 {
                        return false;
                    }
                    s += d.inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !(w.re.is_finite() && w.im.is_finite()) {
                return false;
            }
            z[i] -= w;
            if w.norm() <= STEP_TOL * z[i].norm() {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            finished_sweeps += 1;
            if finished_sweeps == 2 {
                return true;
            }
            // One more full sweep to polish every root.
            done.iter_mut().for_each(|d| *d = false);
        }
    }
    false
}

/// Roots of `Σ c_k X^k` (coefficients low to high), sorted by `(Re, Im)`.
pub fn roots_of(coeffs: &[Complex64]) -> Result<Vec<Complex64>, RootError> {
    if coeffs.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(RootError::NonFinite);
    }
    let n = coeffs.len().saturating_sub(1);
    if coeffs.is_empty() || coeffs[n].norm() == 0.0 {
        return Err(RootError::ZeroLeading);
    }
    let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut c: Vec<Complex64> = coeffs.iter().map(|a| a / scale).collect();
    let mut roots = Vec::with_capacity(n);
    let zeros = c.iter().take_while(|a| a.norm() == 0.0).count();
    roots.extend(core::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
    c.drain(..zeros);
    let m = c.len() - 1;
    match m {
        0 => {}
        1 => roots.push(-c[0] / c[1]),
        _ => {
            let rev: Vec<Complex64> = c.iter().rev().cloned().collect();
            let mut z = if m <= COMPANION_MAX_DEGREE {
                companion_start(&c).unwrap_or_else(|| newton_polygon_start(&c, 0.4))
            } else {
                newton_polygon_start(&c, 0.4)
            };
            if !aberth(&c, &rev, &mut z) {
                z = newton_polygon_start(&c, 1.3);
                if !aberth(&c, &rev, &mut z) {
                    return Err(RootError::Convergence { sweeps: MAX_SWEEPS });
                }
            }
            roots.extend(z);
        }
    }
    sort_roots(&mut roots);
    Ok(roots)
}

/// Canonical `(Re, Im)` lexicographic order.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Coefficients (low to high) of `Π (X - z_i)`.
pub fn monic_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut b = alloc::vec![Complex64::new(0.0, 0.0); roots.len() + 1];
    b[0] = Complex64::new(1.0, 0.0);
    for (k, &z) in roots.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            b[j] = b[j - 1] - z * b[j];
        }
        b[0] = -z * b[0];
    }
    b
}

/// Normwise relative error `max_k |b_k - b̂_k| / max_k |b_k|` between the
/// monic form of `coeffs` and the monic polynomial rebuilt from `roots`.
///
/// The rebuilt coefficients are the discrete Fourier transform of
/// `Π (ω - z_i)` over the `(n+1)`-th roots of unity `ω`, which avoids the
/// intermediate growth of expanding the product term by term.
pub fn reconstruction_error(coeffs: &[Complex64], roots: &[Complex64]) -> f64 {
    let n = coeffs.len() - 1;
    assert_eq!(roots.len(), n, "root count must equal the degree");
    let lead = coeffs[n];
    let b: Vec<Complex64> = coeffs.iter().map(|a| a / lead).collect();
    let m = n + 1;
    let omegas: Vec<Complex64> = (0..m).map(|l| Complex64::from_polar(1.0, 2.0 * PI * l as f64 / m as f64)).collect();
    let values: Vec<Complex64> = omegas.iter().map(|&w| roots.iter().fold(Complex64::new(1.0, 0.0), |acc, &z| acc * (w - z))).collect();
    let mut err = 0.0f64;
    for (k, bk) in b.iter().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (l, v) in values.iter().enumerate() {
            s += v * omegas[(m - (k * l) % m) % m];
        }
        err = err.max((s / m as f64 - bk).norm());
    }
    let norm = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    err / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_examples() {
        let r = roots_of(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-14 && (r[1] - c(1.0, 0.0)).norm() < 1e-14);
        let r = roots_of(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14 && (r[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_roots_and_errors() {
        let r = roots_of(&[c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert_eq!(roots_of(&[c(1.0, 0.0), c(0.0, 0.0)]), Err(RootError::ZeroLeading));
        assert_eq!(roots_of(&[c(f64::NAN, 0.0), c(1.0, 0.0)]), Err(RootError::NonFinite));
    }

    #[test]
    fn wilkinson_like_and_high_degree() {
        let want: Vec<Complex64> = (1..=12).map(|k| c(k as f64, 0.0)).collect();
        let coeffs = monic_from_roots(&want);
        let got = roots_of(&coeffs).unwrap();
        assert!(reconstruction_error(&coeffs, &got) < 1e-12);
        // X^200 - 1 exercises the Newton-polygon start.
        let mut coeffs = alloc::vec![c(0.0, 0.0); 201];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[200] = c(1.0, 0.0);
        let got = roots_of(&coeffs).unwrap();
        assert!(got.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(reconstruction_error(&coeffs, &got) < 1e-12);
    }

    #[test]
    fn monic_expansion() {
        let b = monic_from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(b, alloc::vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }
}
