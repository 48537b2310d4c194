//! Empirical and grid probability measures on the plane and on the sphere.

pub mod cells;
pub mod transport;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Debug;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{project, unproject, GeometryError, PlanePoint, SpherePoint};
use crate::quadrature::GaussLegendre;
use crate::special::NeumaierSum;
pub use cells::Cell;
pub use transport::{bl_distance, BlDistance, BlMode};

/// Which space a measure lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Plane,
    Sphere,
}

/// A point type usable as an atom or grid location.
pub trait Point: Copy + Debug + PartialEq + Send + Sync + 'static {
    const SPACE: Space;
    fn dist(&self, other: &Self) -> f64;
    fn conj(&self) -> Self;
    fn is_valid(&self) -> bool;
    fn to_sphere(&self) -> SpherePoint;
    /// Cartesian coordinates; the plane uses `(re, im, 0)`.
    fn coords(&self) -> [f64; 3];
    /// The point of this space corresponding to a sphere point, if any.
    fn from_sphere(x: SpherePoint) -> Option<Self>;
}

impl Point for PlanePoint {
    const SPACE: Space = Space::Plane;
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn is_valid(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_sphere(&self) -> SpherePoint {
        project(*self)
    }
    fn coords(&self) -> [f64; 3] {
        [self.re, self.im, 0.0]
    }
    fn from_sphere(x: SpherePoint) -> Option<Self> {
        unproject(x).ok()
    }
}

impl Point for SpherePoint {
    const SPACE: Space = Space::Sphere;
    fn dist(&self, other: &Self) -> f64 {
        SpherePoint::dist(self, other)
    }
    fn conj(&self) -> Self {
        self.mirror()
    }
    fn is_valid(&self) -> bool {
        self.is_on_sphere()
    }
    fn to_sphere(&self) -> SpherePoint {
        *self
    }
    fn coords(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }
    fn from_sphere(x: SpherePoint) -> Option<Self> {
        Some(x)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("a measure needs at least one atom")]
    Empty,
    #[error("atom {0} is not a valid point of its space")]
    InvalidAtom(usize),
    #[error("weights must be nonnegative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("support and weights differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("grid support is not closed under conjugation")]
    AsymmetricSupport,
    #[error("measures live on different spaces")]
    SpaceMismatch,
    #[error("invalid grid cell {0}")]
    InvalidCell(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `(1/n) Σ δ_{x_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure<P: Point> {
    atoms: Vec<P>,
}

impl<P: Point> EmpiricalMeasure<P> {
    pub fn new(atoms: Vec<P>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        if let Some(i) = atoms.iter().position(|a| !a.is_valid()) {
            return Err(MeasureError::InvalidAtom(i));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[P] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn into_atoms(self) -> Vec<P> {
        self.atoms
    }

    /// The same measure as a grid measure with atom cells.
    pub fn to_grid_measure(&self) -> GridMeasure<P> {
        let n = self.atoms.len() as f64;
        let grid = Grid::atoms(self.atoms.clone()).expect("atoms already validated");
        GridMeasure { grid: Arc::new(grid), weights: alloc::vec![1.0 / n; self.atoms.len()] }
    }
}

impl EmpiricalMeasure<PlanePoint> {
    /// Push-forward by `T`, atom by atom.
    pub fn pushforward(&self) -> EmpiricalMeasure<SpherePoint> {
        EmpiricalMeasure { atoms: self.atoms.iter().map(|&z| project(z)).collect() }
    }
}

impl EmpiricalMeasure<SpherePoint> {
    /// Push-forward by `T⁻¹`; fails if an atom is the north pole.
    pub fn pullback(&self) -> Result<EmpiricalMeasure<PlanePoint>, MeasureError> {
        let atoms = self.atoms.iter().map(|&x| unproject(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(EmpiricalMeasure { atoms })
    }
}

/// `T*μ` for an empirical measure on the plane.
pub fn pushforward_measure(mu: &EmpiricalMeasure<PlanePoint>) -> EmpiricalMeasure<SpherePoint> {
    mu.pushforward()
}

/// A fixed support: one representative point and one cell per location.
#[derive(Clone, Debug)]
pub struct Grid<P: Point> {
    points: Vec<P>,
    cells: Vec<Cell>,
    conj: Option<Vec<usize>>,
}

impl<P: Point> Grid<P> {
    /// Grid from points and cells; computes the conjugation map when the
    /// support is closed under conjugation.
    pub fn new(points: Vec<P>, cells: Vec<Cell>) -> Result<Self, MeasureError> {
        if points.is_empty() {
            return Err(MeasureError::Empty);
        }
        if points.len() != cells.len() {
            return Err(MeasureError::LengthMismatch(points.len(), cells.len()));
        }
        if let Some(i) = points.iter().position(|a| !a.is_valid()) {
            return Err(MeasureError::InvalidAtom(i));
        }
        if let Some(i) = cells.iter().position(|c| !c.validate()) {
            return Err(MeasureError::InvalidCell(i));
        }
        let conj = conjugation_map(&points, &cells);
        Ok(Self { points, cells, conj })
    }

    /// Grid whose cells are the atoms themselves.
    pub fn atoms(points: Vec<P>) -> Result<Self, MeasureError> {
        let cells = points.iter().map(|p| Cell::Atom(p.to_sphere())).collect();
        Self::new(points, cells)
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the conjugate of each location, if the support is closed.
    pub fn conjugation(&self) -> Option<&[usize]> {
        self.conj.as_deref()
    }

    /// Largest distance from a representative point to its own cell boundary.
    pub fn mesh(&self) -> f64 {
        let mut worst = 0.0f64;
        for (p, c) in self.points.iter().zip(&self.cells) {
            for x in corner_points(c) {
                let d = P::from_sphere(x).map_or(f64::INFINITY, |q| q.dist(p));
                worst = worst.max(d);
            }
        }
        worst
    }
}

fn corner_points(c: &Cell) -> Vec<SpherePoint> {
    match *c {
        Cell::Atom(x) => alloc::vec![x],
        Cell::Arc { t, phi0, phi1 } => alloc::vec![
            SpherePoint::from_height_angle(t, phi0),
            SpherePoint::from_height_angle(t, phi1)
        ],
        Cell::Patch { t0, t1, phi0, phi1 } => {
            let pm = 0.5 * (phi0 + phi1);
            alloc::vec![
                SpherePoint::from_height_angle(t0, phi0),
                SpherePoint::from_height_angle(t0, phi1),
                SpherePoint::from_height_angle(t1, phi0),
                SpherePoint::from_height_angle(t1, phi1),
                SpherePoint::from_height_angle(t0, pm),
                SpherePoint::from_height_angle(t1, pm),
            ]
        }
    }
}

fn conjugation_map<P: Point>(points: &[P], cells: &[Cell]) -> Option<Vec<usize>> {
    const TOL: f64 = 1e-9;
    let n = points.len();
    // Bucket by height so that matching is near linear for product grids.
    let key = |c: &Cell| -> i64 {
        let t = match *c {
            Cell::Atom(x) => x.height(),
            Cell::Arc { t, .. } => t,
            Cell::Patch { t0, .. } => t0,
        };
        (t * 1e6).round() as i64
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| key(&cells[i]));
    let mut map = alloc::vec![usize::MAX; n];
    for &i in &order {
        if map[i] != usize::MAX {
            continue;
        }
        let target = cells[i].mirror();
        let tp = points[i].conj();
        let k = key(&target);
        let start = order.partition_point(|&j| key(&cells[j]) < k - 1);
        let mut found = None;
        for &j in &order[start..] {
            if key(&cells[j]) > k + 1 {
                break;
            }
            if map[j] == usize::MAX && cells[j].same_as(&target, TOL) && points[j].dist(&tp) <= TOL {
                found = Some(j);
                break;
            }
        }
        let j = found?;
        map[i] = j;
        map[j] = i;
    }
    Some(map)
}

/// Nonnegative weights on a fixed grid, summing to one.
#[derive(Clone, Debug)]
pub struct GridMeasure<P: Point> {
    grid: Arc<Grid<P>>,
    weights: Vec<f64>,
}

/// Tolerance on the total mass of a grid measure.
pub const MASS_TOL: f64 = 1e-12;

impl<P: Point> GridMeasure<P> {
    pub fn new(grid: Arc<Grid<P>>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if weights.len() != grid.len() {
            return Err(MeasureError::LengthMismatch(grid.len(), weights.len()));
        }
        let total = weights.iter().cloned().collect::<NeumaierSum>().value();
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) || (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::BadWeights(total));
        }
        Ok(Self { grid, weights })
    }

    /// Rescale nonnegative masses to total one.
    pub fn normalized(grid: Arc<Grid<P>>, mut masses: Vec<f64>) -> Result<Self, MeasureError> {
        let total = masses.iter().cloned().collect::<NeumaierSum>().value();
        if !(total > 0.0) || masses.iter().any(|&w| !(w >= 0.0)) {
            return Err(MeasureError::BadWeights(total));
        }
        for w in &mut masses {
            *w /= total;
        }
        Self::new(grid, masses)
    }

    /// Uniform weight on every grid location.
    pub fn uniform(grid: Arc<Grid<P>>) -> Self {
        let n = grid.len();
        Self { grid, weights: alloc::vec![1.0 / n as f64; n] }
    }

    /// All mass on location `i`.
    pub fn dirac(grid: Arc<Grid<P>>, i: usize) -> Self {
        let mut weights = alloc::vec![0.0; grid.len()];
        weights[i] = 1.0;
        Self { grid, weights }
    }

    pub fn grid(&self) -> &Arc<Grid<P>> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> &[P] {
        self.grid.points()
    }

    pub fn cells(&self) -> &[Cell] {
        self.grid.cells()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `∫ f dμ` using representative points.
    pub fn integrate<F: FnMut(&P) -> f64>(&self, f: F) -> f64 {
        crate::quadrature::weighted_quadrature(self.grid.points(), &self.weights, f)
    }

    /// `t·self + (1-t)·other` on the same grid.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid.len() == other.grid.len());
        let weights = self.weights.iter().zip(&other.weights).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        Self { grid: self.grid.clone(), weights }
    }

    /// Whether `w(z) = w(z̄)` for every location, within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> Result<bool, MeasureError> {
        let conj = self.grid.conjugation().ok_or(MeasureError::AsymmetricSupport)?;
        Ok(self.weights.iter().zip(conj).all(|(&w, &j)| (w - self.weights[j]).abs() <= tol))
    }

    /// `w'(z) = (w(z) + w(z̄)) / 2`.
    pub fn symmetrize(&self) -> Result<Self, MeasureError> {
        let conj = self.grid.conjugation().ok_or(MeasureError::AsymmetricSupport)?;
        let weights = (0..self.weights.len())
            .map(|i| {
                // Addition is commutative, so both members of a pair get identical bits.
                0.5 * (self.weights[i] + self.weights[conj[i]])
            })
            .collect();
        Ok(Self { grid: self.grid.clone(), weights })
    }
}

impl GridMeasure<PlanePoint> {
    /// Push-forward by `T`: same cells, projected points.
    pub fn pushforward(&self) -> GridMeasure<SpherePoint> {
        let points = self.grid.points.iter().map(|&z| project(z)).collect();
        let grid = Grid { points, cells: self.grid.cells.clone(), conj: self.grid.conj.clone() };
        GridMeasure { grid: Arc::new(grid), weights: self.weights.clone() }
    }
}

/// Symmetrize a planar grid measure under `z ↦ z̄`.
pub fn symmetrize(mu: &GridMeasure<PlanePoint>) -> Result<GridMeasure<PlanePoint>, MeasureError> {
    mu.symmetrize()
}

/// Move each atom's mass to its nearest grid location (lowest index on ties).
pub fn to_grid<P: Point>(mu: &EmpiricalMeasure<P>, grid: Arc<Grid<P>>) -> GridMeasure<P> {
    let n = mu.len();
    let mut counts = alloc::vec![0usize; grid.len()];
    for a in mu.atoms() {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (j, p) in grid.points().iter().enumerate() {
            let d = a.dist(p);
            if d < bd {
                bd = d;
                best = j;
            }
        }
        counts[best] += 1;
    }
    let weights = counts.into_iter().map(|c| c as f64 / n as f64).collect();
    GridMeasure { grid, weights }
}

/// Heights and areas of the Gauss–Legendre product grid on the sphere.
fn product_rows(nt: usize) -> (GaussLegendre, Vec<(f64, f64)>) {
    let gl = GaussLegendre::new(nt);
    let mut rows = Vec::with_capacity(nt);
    let mut t0 = -1.0;
    for i in 0..nt {
        let t1 = if i + 1 == nt { 1.0 } else { (t0 + gl.weights[i]).min(1.0) };
        rows.push((t0, t1));
        t0 = t1;
    }
    (gl, rows)
}

/// Longitude centers `(j + 1/2)·2π/n`, a set closed under `φ ↦ -φ`.
fn longitudes(n: usize) -> impl Iterator<Item = (f64, f64, f64)> {
    let h = PI / n as f64;
    (0..n).map(move |j| {
        let c = 2.0 * PI * (j as f64 + 0.5) / n as f64;
        (c, c - h, c + h)
    })
}

impl Grid<SpherePoint> {
    /// Gauss–Legendre (height) × uniform (longitude) grid of `nt·nphi` area patches.
    ///
    /// The cell areas equal the product-rule weights, so
    /// [`GridMeasure::uniform_area`] is the normalized surface measure.
    pub fn sphere_product(nt: usize, nphi: usize) -> Self {
        let (gl, rows) = product_rows(nt);
        let mut points = Vec::with_capacity(nt * nphi);
        let mut cells = Vec::with_capacity(nt * nphi);
        for (i, &(t0, t1)) in rows.iter().enumerate() {
            for (c, phi0, phi1) in longitudes(nphi) {
                points.push(SpherePoint::from_height_angle(gl.nodes[i], c));
                cells.push(Cell::Patch { t0, t1, phi0, phi1 });
            }
        }
        Self::new(points, cells).expect("product grid is valid")
    }

    /// Arcs tiling the equator `T(S)`.
    pub fn equator_arcs(m: usize) -> Self {
        let cells = cells::ring_arcs(0.0, m);
        let points = cells.iter().map(|c| c.center()).collect();
        Self::new(points, cells).expect("ring grid is valid")
    }

    /// Horizontal rings of arcs at the given heights, `m` arcs per ring.
    pub fn rings(heights: &[f64], m: usize) -> Self {
        let mut cells = Vec::new();
        for &t in heights {
            cells.extend(cells::ring_arcs(t, m));
        }
        let points = cells.iter().map(|c| c.center()).collect();
        Self::new(points, cells).expect("ring grid is valid")
    }
}

impl Grid<PlanePoint> {
    /// Arcs tiling the unit circle, centered at the `m`-th roots of unity.
    pub fn circle_arcs(m: usize) -> Self {
        let cells = cells::ring_arcs(0.0, m);
        let points = crate::quadrature::circle_nodes(m);
        Self::new(points, cells).expect("circle grid is valid")
    }

    /// Preimage of the sphere product grid; uniform area weights give the
    /// Fubini–Study measure `dA / (π(1+|z|²)²)`.
    pub fn fubini_study(nt: usize, nphi: usize) -> Self {
        let s = Grid::<SpherePoint>::sphere_product(nt, nphi);
        let points = s.points.iter().map(|&x| unproject(x).expect("nodes avoid the pole")).collect();
        Self { points, cells: s.cells, conj: s.conj }
    }
}

impl<P: Point> GridMeasure<P> {
    /// Weights proportional to cell area (arcs count by angular length,
    /// atoms by one); the uniform measure of the tiled set.
    pub fn uniform_area(grid: Arc<Grid<P>>) -> Self {
        let masses: Vec<f64> = grid
            .cells()
            .iter()
            .map(|c| match *c {
                Cell::Atom(_) => 1.0,
                Cell::Arc { phi0, phi1, .. } => phi1 - phi0,
                Cell::Patch { t0, t1, phi0, phi1 } => (t1 - t0) * (phi1 - phi0),
            })
            .collect();
        Self::normalized(grid, masses).expect("positive cell sizes")
    }
}

/// `ν_S` on an `m`-arc circle grid.
pub fn circle_uniform(m: usize) -> GridMeasure<PlanePoint> {
    GridMeasure::uniform(Arc::new(Grid::circle_arcs(m)))
}

/// Fubini–Study measure on an `nt × nphi` grid.
pub fn fubini_study(nt: usize, nphi: usize) -> GridMeasure<PlanePoint> {
    GridMeasure::uniform_area(Arc::new(Grid::fubini_study(nt, nphi)))
}

/// Normalized surface measure on an `nt × nphi` sphere grid.
pub fn sphere_uniform(nt: usize, nphi: usize) -> GridMeasure<SpherePoint> {
    GridMeasure::uniform_area(Arc::new(Grid::sphere_product(nt, nphi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pushforward_examples() {
        let mu = EmpiricalMeasure::new(alloc::vec![c(0.0, 0.0)]).unwrap();
        assert_eq!(mu.pushforward().atoms()[0], SpherePoint::new(0.0, 0.0, 0.0));
        let mu = EmpiricalMeasure::new(alloc::vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let s = mu.pushforward();
        assert_eq!(s.atoms()[0], SpherePoint::new(0.5, 0.0, 0.5));
        assert_eq!(s.atoms()[1], SpherePoint::new(-0.5, 0.0, 0.5));
        let back = s.pullback().unwrap();
        assert!(back.atoms().iter().zip(mu.atoms()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn empirical_rejects_bad_input() {
        assert_eq!(EmpiricalMeasure::<PlanePoint>::new(Vec::new()), Err(MeasureError::Empty));
        assert_eq!(EmpiricalMeasure::new(alloc::vec![c(f64::NAN, 0.0)]), Err(MeasureError::InvalidAtom(0)));
        let off = SpherePoint::new(1.0, 1.0, 1.0);
        assert_eq!(EmpiricalMeasure::new(alloc::vec![off]), Err(MeasureError::InvalidAtom(0)));
    }

    #[test]
    fn symmetrize_examples() {
        let grid = Arc::new(Grid::atoms(alloc::vec![c(0.0, 1.0), c(0.0, -1.0)]).unwrap());
        let mu = GridMeasure::dirac(grid.clone(), 0);
        let s = mu.symmetrize().unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        assert_eq!(s.symmetrize().unwrap().weights(), s.weights());
        let lone = Arc::new(Grid::atoms(alloc::vec![c(0.0, 1.0)]).unwrap());
        assert_eq!(GridMeasure::uniform(lone).symmetrize().unwrap_err(), MeasureError::AsymmetricSupport);
    }

    #[test]
    fn product_grids_are_conjugation_closed() {
        let g = Grid::sphere_product(7, 10);
        let conj = g.conjugation().expect("closed");
        for (i, &j) in conj.iter().enumerate() {
            assert!(g.points()[j].dist(&g.points()[i].mirror()) < 1e-12);
        }
        assert!(Grid::circle_arcs(16).conjugation().is_some());
        assert!(Grid::fubini_study(6, 8).conjugation().is_some());
    }

    #[test]
    fn uniform_area_integrates_smooth_functions() {
        let mu = sphere_uniform(16, 32);
        // ∫ x3 dσ = 1/2 and ∫ x3² dσ = 1/3 on the radius-1/2 sphere.
        assert!((mu.integrate(|x| x.x3) - 0.5).abs() < 1e-12);
        assert!((mu.integrate(|x| x.x3 * x.x3) - 1.0 / 3.0).abs() < 1e-12);
        let fs = fubini_study(16, 32);
        // ∫ 1/(1+|z|²) dFS = 1/2.
        assert!((fs.integrate(|z| 1.0 / (1.0 + z.norm_sqr())) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn to_grid_examples() {
        let grid = Arc::new(Grid::atoms(alloc::vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        let mu = EmpiricalMeasure::new(alloc::vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(to_grid(&mu, grid).weights(), &[0.0, 1.0]);
        let one = Arc::new(Grid::atoms(alloc::vec![c(5.0, 0.0)]).unwrap());
        let mu = EmpiricalMeasure::new(alloc::vec![c(0.0, 0.0), c(1.0, 1.0)]).unwrap();
        assert_eq!(to_grid(&mu, one).weights(), &[1.0]);
        // Equidistant atom goes to the lowest index.
        let grid = Arc::new(Grid::atoms(alloc::vec![c(-1.0, 0.0), c(1.0, 0.0)]).unwrap());
        let mu = EmpiricalMeasure::new(alloc::vec![c(0.0, 0.0)]).unwrap();
        assert_eq!(to_grid(&mu, grid).weights(), &[1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn symmetrize_is_idempotent(ws in proptest::collection::vec(0.0f64..1.0, 16)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.1);
            let grid = Arc::new(Grid::circle_arcs(16));
            let mu = GridMeasure::normalized(grid, ws).unwrap();
            let s = mu.symmetrize().unwrap();
            prop_assert!(s.is_symmetric(0.0).unwrap());
            let ss = s.symmetrize().unwrap();
            prop_assert_eq!(ss.weights(), s.weights());
            let total: f64 = s.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn to_grid_preserves_mass(pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..40)) {
            let atoms: Vec<_> = pts.iter().map(|&(a, b)| c(a, b)).collect();
            let mu = EmpiricalMeasure::new(atoms).unwrap();
            let g = to_grid(&mu, Arc::new(Grid::fubini_study(8, 12)));
            let total: f64 = g.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
