//! Support cells of grid measures and the logarithmic integrals over them.
//!
//! A grid measure spreads the mass of each support point uniformly over a
//! cell: an atom, an arc of a horizontal circle of the sphere (a centered
//! circle of the plane), or a `(height, longitude)` rectangle of the sphere.
//! Arcs and patches make tilings of circles and of the sphere whose energies
//! match the continuous measures they discretize, so grid values converge to
//! continuum values instead of carrying an `O(log N / N)` atomic bias.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{project, unproject, SpherePoint};
use crate::quadrature::{integrate_with_breaks, GaussLegendre};
use crate::special::NeumaierSum;

/// Geometry of one support cell, in sphere coordinates.
///
/// Heights are `t = 2·x3 - 1 ∈ [-1, 1]`; longitudes are radians with
/// `phi0 < phi1 ≤ phi0 + 2π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Atom(SpherePoint),
    /// Uniform measure in longitude on the circle of height `t`.
    Arc { t: f64, phi0: f64, phi1: f64 },
    /// Uniform area measure on `[t0, t1] × [phi0, phi1]`.
    Patch { t0: f64, t1: f64, phi0: f64, phi1: f64 },
}

impl Cell {
    pub fn center(&self) -> SpherePoint {
        match *self {
            Cell::Atom(x) => x,
            Cell::Arc { t, phi0, phi1 } => SpherePoint::from_height_angle(t, 0.5 * (phi0 + phi1)),
            Cell::Patch { t0, t1, phi0, phi1 } => {
                SpherePoint::from_height_angle(0.5 * (t0 + t1), 0.5 * (phi0 + phi1))
            }
        }
    }

    /// Mirror image under `x2 ↦ -x2` (conjugation in the plane).
    pub fn mirror(&self) -> Cell {
        match *self {
            Cell::Atom(x) => Cell::Atom(x.mirror()),
            Cell::Arc { t, phi0, phi1 } => Cell::Arc { t, phi0: -phi1, phi1: -phi0 },
            Cell::Patch { t0, t1, phi0, phi1 } => Cell::Patch { t0, t1, phi0: -phi1, phi1: -phi0 },
        }
    }

    /// Whether two cells describe the same set, longitudes compared modulo 2π.
    pub fn same_as(&self, other: &Cell, tol: f64) -> bool {
        let ang = |a: f64, b: f64| {
            let d = num_traits::Euclid::rem_euclid(&(a - b), &(2.0 * PI));
            d.min(2.0 * PI - d) <= tol
        };
        match (*self, *other) {
            (Cell::Atom(x), Cell::Atom(y)) => x.dist(&y) <= tol,
            (Cell::Arc { t, phi0, phi1 }, Cell::Arc { t: s, phi0: q0, phi1: q1 }) => {
                (t - s).abs() <= tol && ang(phi0, q0) && ang(phi1, q1)
            }
            (
                Cell::Patch { t0, t1, phi0, phi1 },
                Cell::Patch { t0: s0, t1: s1, phi0: q0, phi1: q1 },
            ) => (t0 - s0).abs() <= tol && (t1 - s1).abs() <= tol && ang(phi0, q0) && ang(phi1, q1),
            _ => false,
        }
    }

    pub fn validate(&self) -> bool {
        match *self {
            Cell::Atom(x) => x.is_on_sphere(),
            Cell::Arc { t, phi0, phi1 } => {
                t > -1.0 && t < 1.0 && phi1 > phi0 && phi1 - phi0 <= 2.0 * PI + 1e-12
            }
            Cell::Patch { t0, t1, phi0, phi1 } => {
                -1.0 <= t0 && t0 < t1 && t1 <= 1.0 && phi1 > phi0 && phi1 - phi0 <= 2.0 * PI + 1e-12
            }
        }
    }

    fn boundary_samples(&self) -> Vec<SpherePoint> {
        match *self {
            Cell::Atom(x) => alloc::vec![x],
            Cell::Arc { t, phi0, phi1 } => (0..=8)
                .map(|k| SpherePoint::from_height_angle(t, phi0 + (phi1 - phi0) * k as f64 / 8.0))
                .collect(),
            Cell::Patch { t0, t1, phi0, phi1 } => {
                let mut v = Vec::with_capacity(32);
                for k in 0..=8 {
                    let phi = phi0 + (phi1 - phi0) * k as f64 / 8.0;
                    v.push(SpherePoint::from_height_angle(t0, phi));
                    v.push(SpherePoint::from_height_angle(t1, phi));
                }
                for k in 1..8 {
                    let t = t0 + (t1 - t0) * k as f64 / 8.0;
                    v.push(SpherePoint::from_height_angle(t, phi0));
                    v.push(SpherePoint::from_height_angle(t, phi1));
                }
                v
            }
        }
    }
}

/// The metric space in which cell integrals are evaluated.
pub trait KernelSpace {
    type Pt: Copy + Send + Sync;
    fn map(x: SpherePoint) -> Self::Pt;
    fn dist(a: &Self::Pt, b: &Self::Pt) -> f64;
    /// Radius and axial offset of the image of the circle of height `t`.
    fn circle(t: f64) -> (f64, f64);
}

/// Chordal distance on the sphere; equals the spherical kernel
/// `|z - w| / sqrt((1+|z|²)(1+|w|²))` of the plane.
pub struct Chordal;

/// Euclidean distance of the plane, through `T⁻¹`.
pub struct Planar;

impl KernelSpace for Chordal {
    type Pt = SpherePoint;
    fn map(x: SpherePoint) -> SpherePoint {
        x
    }
    fn dist(a: &SpherePoint, b: &SpherePoint) -> f64 {
        a.dist(b)
    }
    fn circle(t: f64) -> (f64, f64) {
        (0.5 * ((1.0 - t) * (1.0 + t)).max(0.0).sqrt(), 0.5 * (1.0 + t))
    }
}

impl KernelSpace for Planar {
    type Pt = Complex64;
    fn map(x: SpherePoint) -> Complex64 {
        unproject(x).unwrap_or(Complex64::new(f64::INFINITY, 0.0))
    }
    fn dist(a: &Complex64, b: &Complex64) -> f64 {
        (a - b).norm()
    }
    fn circle(t: f64) -> (f64, f64) {
        (((1.0 + t) / (1.0 - t)).sqrt(), 0.0)
    }
}

/// Gauss–Legendre orders by separation level; the last one also drives the
/// height integrals of touching cells.
const ORDERS: [usize; 5] = [2, 4, 6, 8, 12];
/// Nodes per height piece in the semi-analytic integrals.
const HEIGHT_ORDER: usize = 6;
const INNER_ABS_TOL: f64 = 1e-11;
const INNER_REL_TOL: f64 = 1e-9;

/// Product-rule level for a separation ratio (gap between bounding balls
/// over the larger diameter); `None` asks for the semi-analytic integral.
fn level_for(ratio: f64, point_eval: bool) -> Option<usize> {
    let level = if ratio >= 4.0 {
        0
    } else if ratio >= 1.5 {
        1
    } else if ratio >= 0.6 {
        2
    } else if ratio >= 0.3 {
        3
    } else {
        return None;
    };
    Some((level + usize::from(point_eval)).min(ORDERS.len() - 1))
}

/// Nodes and normalized weights of a cell for a given rule.
fn nodes<K: KernelSpace>(cell: &Cell, rule: &GaussLegendre) -> Vec<(K::Pt, f64)> {
    match *cell {
        Cell::Atom(x) => alloc::vec![(K::map(x), 1.0)],
        Cell::Arc { t, phi0, phi1 } => {
            let len = phi1 - phi0;
            rule.on(phi0, phi1)
                .map(|(phi, w)| (K::map(SpherePoint::from_height_angle(t, phi)), w / len))
                .collect()
        }
        Cell::Patch { t0, t1, phi0, phi1 } => {
            let area = (t1 - t0) * (phi1 - phi0);
            let mut v = Vec::with_capacity(rule.len() * rule.len());
            for (t, wt) in rule.on(t0, t1) {
                for (phi, wp) in rule.on(phi0, phi1) {
                    v.push((K::map(SpherePoint::from_height_angle(t, phi)), wt * wp / area));
                }
            }
            v
        }
    }
}

#[derive(Clone, Debug)]
struct Bounds<P> {
    center: P,
    radius: f64,
}

fn bounds<K: KernelSpace>(cell: &Cell) -> Bounds<K::Pt> {
    let center = K::map(cell.center());
    let radius = cell
        .boundary_samples()
        .into_iter()
        .map(|x| K::dist(&center, &K::map(x)))
        .fold(0.0, f64::max);
    Bounds { center, radius: radius * 1.05 }
}

fn ratio<P>(a: &Bounds<P>, b: &Bounds<P>, d: f64) -> f64 {
    let diam = 2.0 * a.radius.max(b.radius);
    if diam == 0.0 {
        return f64::INFINITY;
    }
    (d - a.radius - b.radius) / diam
}

fn product_sum<K: KernelSpace>(a: &[(K::Pt, f64)], b: &[(K::Pt, f64)]) -> f64 {
    let mut s = NeumaierSum::new();
    for (x, wx) in a {
        let mut inner = 0.0;
        for (y, wy) in b {
            inner += wy * K::dist(x, y).ln();
        }
        s.add(wx * inner);
    }
    s.value()
}

/// Squared distance between points of two coaxial circles at longitude
/// difference `u` is `c + q·sin²(u/2)`; returns `(c, q)`.
fn circle_pair<K: KernelSpace>(t: f64, s: f64) -> (f64, f64) {
    let (ra, ha) = K::circle(t);
    let (rb, hb) = K::circle(s);
    ((ra - rb) * (ra - rb) + (ha - hb) * (ha - hb), 4.0 * ra * rb)
}

fn half_log(c: f64, q: f64, u: f64) -> f64 {
    let s = (0.5 * u).sin();
    0.5 * (c + q * s * s).ln()
}

fn two_pi_multiples(lo: f64, hi: f64, shift: f64, out: &mut Vec<f64>) {
    let kmin = ((lo - shift) / (2.0 * PI)).ceil() as i64;
    let kmax = ((hi - shift) / (2.0 * PI)).floor() as i64;
    for k in kmin..=kmax {
        out.push(shift + 2.0 * PI * k as f64);
    }
}

/// Average of `log d(x, y)` for `x`, `y` uniform on arcs of the circles of
/// heights `t` and `s`, from the density of the longitude difference.
fn arc_arc<K: KernelSpace>(t: f64, a0: f64, a1: f64, s: f64, b0: f64, b1: f64) -> f64 {
    let (c, q) = circle_pair::<K>(t, s);
    let lo = a0 - b1;
    let hi = a1 - b0;
    let g = |u: f64| (a1.min(b1 + u) - a0.max(b0 + u)).max(0.0);
    let mut breaks = alloc::vec![a0 - b0, a1 - b1];
    two_pi_multiples(lo, hi, 0.0, &mut breaks);
    let v = integrate_with_breaks(
        |u| {
            let w = g(u);
            if w == 0.0 {
                0.0
            } else {
                w * half_log(c, q, u)
            }
        },
        lo,
        hi,
        &breaks,
        INNER_ABS_TOL,
        INNER_REL_TOL,
    );
    v / ((a1 - a0) * (b1 - b0))
}

/// Average of `log d(x, y)` with `x` uniform on an arc and `y` fixed.
fn arc_at<K: KernelSpace>(t: f64, phi0: f64, phi1: f64, y: SpherePoint) -> f64 {
    let (c, q) = circle_pair::<K>(t, y.height());
    let py = y.longitude();
    let mut breaks = Vec::new();
    two_pi_multiples(phi0, phi1, py, &mut breaks);
    integrate_with_breaks(|phi| half_log(c, q, phi - py), phi0, phi1, &breaks, INNER_ABS_TOL, INNER_REL_TOL)
        / (phi1 - phi0)
}

/// Mean of `f` over `[t0, t1]`, Gauss–Legendre on pieces split at `kinks`.
fn height_mean<F: FnMut(f64) -> f64>(rule: &GaussLegendre, t0: f64, t1: f64, kinks: &[f64], mut f: F) -> f64 {
    let mut cuts: Vec<f64> = kinks.iter().cloned().filter(|&k| k > t0 && k < t1).collect();
    cuts.sort_by(f64::total_cmp);
    let mut acc = NeumaierSum::new();
    let mut lo = t0;
    for c in cuts.into_iter().chain(core::iter::once(t1)) {
        if c > lo {
            for (t, w) in rule.on(lo, c) {
                acc.add(w * f(t));
            }
            lo = c;
        }
    }
    acc.value() / (t1 - t0)
}

/// Cell integrals for one kernel space.
pub struct CellIntegrals<'a, K: KernelSpace> {
    cells: &'a [Cell],
    bounds: Vec<Bounds<K::Pt>>,
    /// Node sets per level: every level for arcs, the first three otherwise.
    node_cache: Vec<Vec<Vec<(K::Pt, f64)>>>,
    rules: [GaussLegendre; 5],
    height_rule: GaussLegendre,
}

impl<'a, K: KernelSpace> CellIntegrals<'a, K> {
    pub fn new(cells: &'a [Cell]) -> Self {
        let rules = ORDERS.map(GaussLegendre::new);
        let bounds = cells.iter().map(bounds::<K>).collect();
        let node_cache = cells
            .iter()
            .map(|c| {
                let levels = if matches!(c, Cell::Arc { .. }) { rules.len() } else { 3 };
                rules[..levels].iter().map(|r| nodes::<K>(c, r)).collect()
            })
            .collect();
        Self { cells, bounds, node_cache, rules, height_rule: GaussLegendre::new(HEIGHT_ORDER) }
    }

    pub fn cells(&self) -> &[Cell] {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn product(&self, i: usize, j: usize, level: usize) -> f64 {
        if level < self.node_cache[i].len() && level < self.node_cache[j].len() {
            product_sum::<K>(&self.node_cache[i][level], &self.node_cache[j][level])
        } else {
            let rule = &self.rules[level];
            product_sum::<K>(&nodes::<K>(&self.cells[i], rule), &nodes::<K>(&self.cells[j], rule))
        }
    }

    /// `∫∫ log d(x, y) dc_i(x) dc_j(y)`; `-inf` on the diagonal of an atom.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        let (ci, cj) = (&self.cells[i], &self.cells[j]);
        match (ci, cj) {
            (Cell::Atom(x), Cell::Atom(y)) => return K::dist(&K::map(*x), &K::map(*y)).ln(),
            (Cell::Atom(x), _) => return self.potential(j, *x),
            (_, Cell::Atom(y)) => return self.potential(i, *y),
            _ => {}
        }
        if i != j {
            let (a, b) = (&self.bounds[i], &self.bounds[j]);
            let r = ratio(a, b, K::dist(&a.center, &b.center));
            if let Some(level) = level_for(r, false) {
                // Arc rules are one-dimensional, so two extra levels are cheap.
                let level = match (ci, cj) {
                    (Cell::Arc { .. }, Cell::Arc { .. }) => (level + 2).min(ORDERS.len() - 1),
                    _ => level,
                };
                return self.product(i, j, level);
            }
        }
        self.near_pair(ci, cj)
    }

    /// `∫ log d(x, y) dc_i(x)` for a point `y` of the sphere.
    pub fn potential(&self, i: usize, y: SpherePoint) -> f64 {
        let cell = &self.cells[i];
        if let Cell::Atom(x) = cell {
            return K::dist(&K::map(*x), &K::map(y)).ln();
        }
        let yk = K::map(y);
        let b = &self.bounds[i];
        let r = (K::dist(&b.center, &yk) - b.radius) / (2.0 * b.radius);
        match level_for(r, true) {
            Some(level) if level < self.node_cache[i].len() => self.node_cache[i][level].iter().map(|(x, w)| w * K::dist(x, &yk).ln()).sum(),
            Some(level) => nodes::<K>(cell, &self.rules[level]).iter().map(|(x, w)| w * K::dist(x, &yk).ln()).sum(),
            None => self.near_point(cell, y),
        }
    }

    fn near_pair(&self, a: &Cell, b: &Cell) -> f64 {
        let h = &self.height_rule;
        match (*a, *b) {
            (Cell::Arc { t, phi0, phi1 }, Cell::Arc { t: s, phi0: q0, phi1: q1 }) => arc_arc::<K>(t, phi0, phi1, s, q0, q1),
            (Cell::Arc { t, phi0, phi1 }, Cell::Patch { t0: s0, t1: s1, phi0: q0, phi1: q1 })
            | (Cell::Patch { t0: s0, t1: s1, phi0: q0, phi1: q1 }, Cell::Arc { t, phi0, phi1 }) => {
                height_mean(h, s0, s1, &[t], |s| arc_arc::<K>(t, phi0, phi1, s, q0, q1))
            }
            (Cell::Patch { t0, t1, phi0, phi1 }, Cell::Patch { t0: s0, t1: s1, phi0: q0, phi1: q1 }) => {
                height_mean(h, t0, t1, &[s0, s1], |t| {
                    height_mean(h, s0, s1, &[t], |s| arc_arc::<K>(t, phi0, phi1, s, q0, q1))
                })
            }
            _ => unreachable!("atoms are handled by the caller"),
        }
    }

    fn near_point(&self, cell: &Cell, y: SpherePoint) -> f64 {
        match *cell {
            Cell::Atom(x) => K::dist(&K::map(x), &K::map(y)).ln(),
            Cell::Arc { t, phi0, phi1 } => arc_at::<K>(t, phi0, phi1, y),
            Cell::Patch { t0, t1, phi0, phi1 } => {
                height_mean(&self.height_rule, t0, t1, &[y.height()], |t| arc_at::<K>(t, phi0, phi1, y))
            }
        }
    }
}

/// Arcs tiling the circle of height `t` into `m` equal pieces centered at
/// longitudes `2πj/m`.
pub fn ring_arcs(t: f64, m: usize) -> Vec<Cell> {
    let h = PI / m as f64;
    (0..m)
        .map(|j| {
            let c = 2.0 * PI * j as f64 / m as f64;
            Cell::Arc { t, phi0: c - h, phi1: c + h }
        })
        .collect()
}

/// Height of the circle `|z| = r` on the sphere.
pub fn height_of_radius(r: f64) -> f64 {
    let x = project(Complex64::new(r, 0.0));
    x.height()
}
