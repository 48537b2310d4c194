//! Inverse stereographic projection onto the sphere of center `(0, 0, 1/2)`
//! and radius `1/2`, and the metric identities relating plane and sphere.
//!
//! `T(z) = (Re z, Im z, |z|²) / (1 + |z|²)` and for all `z, w`:
//!
//! * `|z - w|² = |T(z) - T(w)|² / ((1 - |T(z)|²)(1 - |T(w)|²))`,
//! * `1 - |T(z)|² = 1 / (1 + |z|²)`.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// A point of the complex plane.
pub type PlanePoint = Complex64;

/// Tolerance of the sphere equation for points built by this crate.
pub const SPHERE_TOL: f64 = 1e-12;

/// A point of the sphere `x1² + x2² + (x3 - 1/2)² = 1/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

/// The north pole `(0, 0, 1)`, image of the point at infinity.
pub const NORTH_POLE: SpherePoint = SpherePoint { x1: 0.0, x2: 0.0, x3: 1.0 };

/// The south pole `(0, 0, 0)`, image of the origin.
pub const SOUTH_POLE: SpherePoint = SpherePoint { x1: 0.0, x2: 0.0, x3: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("the north pole has no finite preimage")]
    NorthPole,
    #[error("point is not finite")]
    NonFinite,
}

impl SpherePoint {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    /// Point with height parameter `t = 2·x3 - 1 ∈ [-1, 1]` and longitude `phi`.
    pub fn from_height_angle(t: f64, phi: f64) -> Self {
        let t = t.clamp(-1.0, 1.0);
        let rho = 0.5 * ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        Self { x1: rho * c, x2: rho * s, x3: 0.5 * (1.0 + t) }
    }

    /// Height parameter `t = 2·x3 - 1`.
    pub fn height(&self) -> f64 {
        2.0 * self.x3 - 1.0
    }

    /// Longitude in `(-π, π]`.
    pub fn longitude(&self) -> f64 {
        self.x2.atan2(self.x1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    /// `1 - |x|²` computed without cancellation near the north pole.
    ///
    /// On the sphere `|x|² = x3`, so `1 - |x|² = 1 - x3 = (x1² + x2²) / x3`.
    pub fn one_minus_norm_sqr(&self) -> f64 {
        if self.x3 > 0.5 {
            (self.x1 * self.x1 + self.x2 * self.x2) / self.x3
        } else {
            1.0 - self.x3
        }
    }

    /// Residual of the sphere equation.
    pub fn sphere_residual(&self) -> f64 {
        let d = self.x3 - 0.5;
        (self.x1 * self.x1 + self.x2 * self.x2 + d * d - 0.25).abs()
    }

    pub fn is_on_sphere(&self) -> bool {
        self.is_finite() && self.sphere_residual() <= SPHERE_TOL
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    pub fn is_north_pole(&self) -> bool {
        *self == NORTH_POLE
    }

    /// Mirror image across the plane `x2 = 0`, the image of conjugation.
    pub fn mirror(&self) -> Self {
        Self { x1: self.x1, x2: -self.x2, x3: self.x3 }
    }

    /// Squared Euclidean distance in `R³`, accurate for nearby points close to the north pole.
    pub fn dist_sqr(&self, other: &SpherePoint) -> f64 {
        let d1 = self.x1 - other.x1;
        let d2 = self.x2 - other.x2;
        let d3 = if self.x3 > 0.5 && other.x3 > 0.5 {
            other.one_minus_norm_sqr() - self.one_minus_norm_sqr()
        } else {
            self.x3 - other.x3
        };
        d1 * d1 + d2 * d2 + d3 * d3
    }

    pub fn dist(&self, other: &SpherePoint) -> f64 {
        self.dist_sqr(other).sqrt()
    }
}

/// `T(z)`, total on finite inputs and never the north pole.
pub fn project(z: PlanePoint) -> SpherePoint {
    let r = z.norm();
    if r <= 1.0 {
        let d = 1.0 + z.norm_sqr();
        SpherePoint { x1: z.re / d, x2: z.im / d, x3: z.norm_sqr() / d }
    } else {
        // Divide through by |z|² so that nothing overflows for huge |z|.
        let u = z / r;
        let inv = 1.0 / r;
        let d = inv * inv + 1.0;
        SpherePoint { x1: u.re * inv / d, x2: u.im * inv / d, x3: 1.0 / d }
    }
}

/// `T⁻¹(x)`; the north pole has no preimage.
pub fn unproject(x: SpherePoint) -> Result<PlanePoint, GeometryError> {
    if !x.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if x.is_north_pole() {
        return Err(GeometryError::NorthPole);
    }
    let z = if x.x3 > 0.5 {
        // z = x3 / (x1 - i x2): avoids 1 - x3 cancellation near the pole.
        // Scaled so that tiny x1, x2 do not underflow when squared.
        let s = x.x1.abs().max(x.x2.abs());
        if s == 0.0 {
            return Err(GeometryError::NorthPole);
        }
        let (a, b) = (x.x1 / s, x.x2 / s);
        Complex64::new(a, b) * (x.x3 / s / (a * a + b * b))
    } else {
        Complex64::new(x.x1, x.x2) / (1.0 - x.x3)
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(GeometryError::NorthPole)
    }
}

/// `log(1 + |z|²)`, with the large-`|z|` branch free of overflow.
pub fn log_one_plus_norm_sqr(z: PlanePoint) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        z.norm_sqr().ln_1p()
    } else {
        2.0 * r.ln() + (1.0 / (r * r)).ln_1p()
    }
}

/// `| |z-w|² - |Tz-Tw|² / ((1-|Tz|²)(1-|Tw|²)) |`.
pub fn chordal_identity_residual(z: PlanePoint, w: PlanePoint) -> f64 {
    let lhs = (z - w).norm_sqr();
    let tz = project(z);
    let tw = project(w);
    let rhs = tz.dist_sqr(&tw) / (tz.one_minus_norm_sqr() * tw.one_minus_norm_sqr());
    (lhs - rhs).abs()
}

/// `| (1 - |T(z)|²) - 1/(1+|z|²) |`.
pub fn norm_identity_residual(z: PlanePoint) -> f64 {
    let lhs = project(z).one_minus_norm_sqr();
    let rhs = 1.0 / (1.0 + z.norm_sqr());
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: SpherePoint, b: SpherePoint) -> bool {
        (a.x1 - b.x1).abs() < 1e-15 && (a.x2 - b.x2).abs() < 1e-15 && (a.x3 - b.x3).abs() < 1e-15
    }

    #[test]
    fn projection_examples() {
        assert!(close(project(Complex64::new(0.0, 0.0)), SOUTH_POLE));
        assert!(close(project(Complex64::new(1.0, 0.0)), SpherePoint::new(0.5, 0.0, 0.5)));
        assert!(close(project(Complex64::new(0.0, 1.0)), SpherePoint::new(0.0, 0.5, 0.5)));
    }

    #[test]
    fn unprojection_examples() {
        assert_eq!(unproject(SOUTH_POLE).unwrap(), Complex64::new(0.0, 0.0));
        let one = unproject(SpherePoint::new(0.5, 0.0, 0.5)).unwrap();
        assert!((one - 1.0).norm() < 1e-15);
        assert_eq!(unproject(NORTH_POLE), Err(GeometryError::NorthPole));
    }

    #[test]
    fn identity_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert!(chordal_identity_residual(one, -one) < 1e-15);
        assert_eq!(chordal_identity_residual(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), 0.0);
        assert_eq!(norm_identity_residual(Complex64::new(0.0, 0.0)), 0.0);
        assert!(norm_identity_residual(one) < 1e-16);
    }

    #[test]
    fn huge_inputs_stay_finite() {
        let z = Complex64::new(1e200, -3e200);
        let x = project(z);
        assert!(x.is_on_sphere());
        assert!(!x.is_north_pole());
        let back = unproject(x).unwrap();
        assert!((back - z).norm() / z.norm() < 1e-12);
    }

    fn plane_point() -> impl Strategy<Value = Complex64> {
        (-6.0f64..6.0, 0.0f64..(2.0 * core::f64::consts::PI))
            .prop_map(|(e, a)| Complex64::from_polar(10f64.powf(e), a))
    }

    proptest! {
        #[test]
        fn projection_lands_on_sphere(z in plane_point()) {
            let x = project(z);
            prop_assert!(x.sphere_residual() <= 1e-12);
            prop_assert!(!x.is_north_pole());
        }

        #[test]
        fn round_trip(z in plane_point()) {
            let back = unproject(project(z)).unwrap();
            prop_assert!((back - z).norm() <= 1e-12 * z.norm().max(1e-300));
        }

        #[test]
        fn sphere_round_trip(t in -1.0f64..0.999, phi in -3.1f64..3.1) {
            let x = SpherePoint::from_height_angle(t, phi);
            let y = project(unproject(x).unwrap());
            prop_assert!(x.dist(&y) <= 1e-12);
        }

        #[test]
        fn chordal_identity(z in plane_point(), w in plane_point()) {
            let tol = 1e-10 * (1.0 + (z - w).norm_sqr());
            prop_assert!(chordal_identity_residual(z, w) <= tol);
        }

        #[test]
        fn norm_identity(z in plane_point()) {
            prop_assert!(norm_identity_residual(z) <= 1e-12);
        }

        #[test]
        fn equator_image(a in 0.0f64..(2.0 * core::f64::consts::PI)) {
            let x = project(Complex64::from_polar(1.0, a));
            prop_assert!((x.x3 - 0.5).abs() <= 1e-14);
        }

        #[test]
        fn conjugation_mirrors(z in plane_point()) {
            prop_assert_eq!(project(z.conj()), project(z).mirror());
        }
    }
}
