//! Zeros of random Gaussian polynomials and the Coulomb gases that describe them.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! * [`geometry`]: the inverse stereographic projection onto the sphere of
//!   center `(0, 0, 1/2)` and radius `1/2`, and the metric identities it satisfies;
//! * [`ensembles`]: Kac, elliptic and general orthonormal bases, Gaussian
//!   coefficient sampling and root extraction;
//! * [`measures`]: empirical and grid measures, bounded-Lipschitz distances;
//! * [`functionals`]: logarithmic potentials and energies, Hamiltonians and
//!   rate functions on the plane and on the sphere;
//! * [`exactlaws`]: closed-form root densities, normalizing constants and
//!   Bernstein–Markov checks;
//! * [`gibbs`]: Metropolis and reversible-jump samplers for the gases;
//! * [`equilibrium`]: Frank–Wolfe minimization of rate functions over grids.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]
// Float math comes from `num_traits::Float`; when a dependency links std its
// inherent methods take over and those imports go unused, hence the allows.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ensembles;
pub mod equilibrium;
pub mod exactlaws;
pub mod functionals;
pub mod geometry;
pub mod gibbs;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use num_complex::Complex64;

pub use ensembles::{Basis, ComplexPolynomial, CoefficientField, ModelSpec};
pub use geometry::{PlanePoint, SpherePoint};
pub use measures::{EmpiricalMeasure, GridMeasure};
