//! Eigenvalues of a complex upper Hessenberg matrix by shifted QR.
//!
//! Used only to seed the simultaneous root iteration, so it returns
//! eigenvalues (no vectors) and gives up rather than iterating forever.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Dense square matrix, row major.
pub struct Matrix {
    n: usize,
    a: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: alloc::vec![Complex64::new(0.0, 0.0); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    /// Companion matrix of the monic polynomial `X^m + b_{m-1}X^{m-1} + … + b_0`
    /// (`monic` lists `b_0..b_{m-1}`), in upper Hessenberg form.
    pub fn companion(monic: &[Complex64]) -> Self {
        let m = monic.len();
        let mut c = Self::zeros(m);
        for j in 0..m {
            c.set(0, j, -monic[m - 1 - j]);
        }
        for i in 1..m {
            c.set(i, i - 1, Complex64::new(1.0, 0.0));
        }
        c
    }

    /// Diagonal similarity by powers of two equalizing row and column norms.
    pub fn balance(&mut self) {
        let n = self.n;
        let radix = 2.0f64;
        let mut done = false;
        let mut sweeps = 0;
        while !done && sweeps < 100 {
            done = true;
            sweeps += 1;
            for i in 0..n {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 0..n {
                    if j != i {
                        c += self.get(j, i).l1_norm();
                        r += self.get(i, j).l1_norm();
                    }
                }
                if c == 0.0 || r == 0.0 {
                    continue;
                }
                let s = c + r;
                let mut f = 1.0;
                let mut cc = c;
                let g = r / radix;
                while cc < g {
                    f *= radix;
                    cc *= radix * radix;
                }
                let g = r * radix;
                while cc > g {
                    f /= radix;
                    cc /= radix * radix;
                }
                if (cc + r / f) / f < 0.95 * s {
                    done = false;
                    let inv = 1.0 / f;
                    for j in 0..n {
                        let v = self.get(i, j) * inv;
                        self.set(i, j, v);
                    }
                    for j in 0..n {
                        let v = self.get(j, i) * f;
                        self.set(j, i, v);
                    }
                }
            }
        }
    }

    /// Eigenvalues of an upper Hessenberg matrix; `None` if QR stalls.
    pub fn hessenberg_eigenvalues(mut self) -> Option<Vec<Complex64>> {
        let n = self.n;
        let mut eig = alloc::vec![Complex64::new(0.0, 0.0); n];
        if n == 0 {
            return Some(eig);
        }
        let eps = f64::EPSILON;
        let mut hi = n - 1;
        let mut iter = 0usize;
        let mut total = 0usize;
        let mut rot: Vec<(f64, Complex64)> = alloc::vec![(0.0, Complex64::new(0.0, 0.0)); n];
        while hi > 0 {
            let mut l = hi;
            while l > 0 {
                let s = self.get(l - 1, l - 1).l1_norm() + self.get(l, l).l1_norm();
                if self.get(l, l - 1).l1_norm() <= eps * s {
                    self.set(l, l - 1, Complex64::new(0.0, 0.0));
                    break;
                }
                l -= 1;
            }
            if l == hi {
                eig[hi] = self.get(hi, hi);
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if total > 60 * n {
                return None;
            }
            let a = self.get(hi - 1, hi - 1);
            let b = self.get(hi - 1, hi);
            let c = self.get(hi, hi - 1);
            let d = self.get(hi, hi);
            let mu = if iter.is_multiple_of(10) {
                // Exceptional shift to break cycles.
                d + Complex64::new(0.75 * c.norm(), 0.0)
            } else {
                let half = (a - d) * 0.5;
                let disc = (half * half + b * c).sqrt();
                let e1 = (a + d) * 0.5 + disc;
                let e2 = (a + d) * 0.5 - disc;
                if (e1 - d).norm() <= (e2 - d).norm() { e1 } else { e2 }
            };
            for k in l..=hi {
                let v = self.get(k, k) - mu;
                self.set(k, k, v);
            }
            for k in l..hi {
                let x = self.get(k, k);
                let y = self.get(k + 1, k);
                let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
                let (cg, sg) = if r == 0.0 {
                    (1.0, Complex64::new(0.0, 0.0))
                } else if x.norm() == 0.0 {
                    (0.0, y.conj() / r)
                } else {
                    (x.norm() / r, (x / x.norm()) * y.conj() / r)
                };
                rot[k] = (cg, sg);
                for j in k..=hi {
                    let u = self.get(k, j);
                    let w = self.get(k + 1, j);
                    self.set(k, j, u * cg + sg * w);
                    self.set(k + 1, j, -sg.conj() * u + w * cg);
                }
            }
            for k in l..hi {
                let (cg, sg) = rot[k];
                let top = (k + 2).min(hi);
                for i in l..=top {
                    let u = self.get(i, k);
                    let w = self.get(i, k + 1);
                    self.set(i, k, u * cg + sg.conj() * w);
                    self.set(i, k + 1, -sg * u + w * cg);
                }
            }
            for k in l..=hi {
                let v = self.get(k, k) + mu;
                self.set(k, k, v);
            }
        }
        eig[0] = self.get(0, 0);
        if eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Some(eig)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn companion_of_known_polynomials() {
        // (X-1)(X-2)(X-3) = X³ - 6X² + 11X - 6
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut m = Matrix::companion(&[c(-6.0), c(11.0), c(-6.0)]);
        m.balance();
        let e = sorted(m.hessenberg_eigenvalues().unwrap());
        for (k, z) in e.iter().enumerate() {
            assert!((z - c(k as f64 + 1.0)).norm() < 1e-10, "{z}");
        }
        // X² + 1
        let e = sorted(Matrix::companion(&[c(1.0), c(0.0)]).hessenberg_eigenvalues().unwrap());
        assert!((e[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((e[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_of_unity() {
        let n = 40;
        let mut b = alloc::vec![Complex64::new(0.0, 0.0); n];
        b[0] = Complex64::new(-1.0, 0.0);
        let e = Matrix::companion(&b).hessenberg_eigenvalues().unwrap();
        for z in e {
            assert!((z.norm() - 1.0).abs() < 1e-8);
            assert!((z.powu(n as u32) - 1.0).norm() < 1e-7);
        }
    }
}
