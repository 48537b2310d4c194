//! Bounded-Lipschitz distance.
//!
//! The supremum of `∫ f d(μ - ν)` over `|f| ≤ 1`, `Lip(f) ≤ 1` equals the
//! optimal transport cost under the capped metric `min(d, 2)`, so small
//! instances are solved exactly as a min-cost transport problem. Larger
//! ones use a fixed dictionary of test functions, which gives a lower bound.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::{EmpiricalMeasure, GridMeasure, MeasureError, Point, Space};
use crate::geometry::{PlanePoint, SpherePoint};
use crate::special::NeumaierSum;

/// Largest combined support solved exactly.
pub const LP_SUPPORT_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlMode {
    /// Exact transport solution.
    Exact,
    /// Lower bound from the fixed test-function dictionary.
    Surrogate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlDistance {
    pub value: f64,
    pub mode: BlMode,
}

/// Anything that can be read as weighted points.
pub trait Weighted<P: Point> {
    fn weighted_points(&self) -> (Vec<P>, Vec<f64>);
}

impl<P: Point> Weighted<P> for EmpiricalMeasure<P> {
    fn weighted_points(&self) -> (Vec<P>, Vec<f64>) {
        let w = 1.0 / self.len() as f64;
        (self.atoms().to_vec(), alloc::vec![w; self.len()])
    }
}

impl<P: Point> Weighted<P> for GridMeasure<P> {
    fn weighted_points(&self) -> (Vec<P>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (p, &w) in self.points().iter().zip(self.weights()) {
            if w > 0.0 {
                pts.push(*p);
                ws.push(w);
            }
        }
        (pts, ws)
    }
}

/// BL distance: exact up to [`LP_SUPPORT_LIMIT`] support points, surrogate beyond.
pub fn bl_distance<P: Point, A: Weighted<P>, B: Weighted<P>>(mu: &A, nu: &B) -> BlDistance {
    let (xa, wa) = mu.weighted_points();
    let (xb, wb) = nu.weighted_points();
    if xa.len() + xb.len() <= LP_SUPPORT_LIMIT {
        BlDistance { value: transport_capped(&xa, &wa, &xb, &wb), mode: BlMode::Exact }
    } else {
        BlDistance { value: surrogate(&xa, &wa, &xb, &wb), mode: BlMode::Surrogate }
    }
}

/// Exact BL distance regardless of size.
pub fn bl_exact<P: Point, A: Weighted<P>, B: Weighted<P>>(mu: &A, nu: &B) -> f64 {
    let (xa, wa) = mu.weighted_points();
    let (xb, wb) = nu.weighted_points();
    transport_capped(&xa, &wa, &xb, &wb)
}

/// Dictionary lower bound regardless of size.
pub fn bl_surrogate<P: Point, A: Weighted<P>, B: Weighted<P>>(mu: &A, nu: &B) -> f64 {
    let (xa, wa) = mu.weighted_points();
    let (xb, wb) = nu.weighted_points();
    surrogate(&xa, &wa, &xb, &wb)
}

/// A measure of either space, for callers that only know the space at run time.
#[derive(Clone, Debug)]
pub enum AnyMeasure {
    PlaneEmpirical(EmpiricalMeasure<PlanePoint>),
    SphereEmpirical(EmpiricalMeasure<SpherePoint>),
    PlaneGrid(GridMeasure<PlanePoint>),
    SphereGrid(GridMeasure<SpherePoint>),
}

impl AnyMeasure {
    pub fn space(&self) -> Space {
        match self {
            AnyMeasure::PlaneEmpirical(_) | AnyMeasure::PlaneGrid(_) => Space::Plane,
            AnyMeasure::SphereEmpirical(_) | AnyMeasure::SphereGrid(_) => Space::Sphere,
        }
    }

    fn plane(&self) -> Option<(Vec<PlanePoint>, Vec<f64>)> {
        match self {
            AnyMeasure::PlaneEmpirical(m) => Some(m.weighted_points()),
            AnyMeasure::PlaneGrid(m) => Some(m.weighted_points()),
            _ => None,
        }
    }

    fn sphere(&self) -> Option<(Vec<SpherePoint>, Vec<f64>)> {
        match self {
            AnyMeasure::SphereEmpirical(m) => Some(m.weighted_points()),
            AnyMeasure::SphereGrid(m) => Some(m.weighted_points()),
            _ => None,
        }
    }
}

struct Raw<P>(Vec<P>, Vec<f64>);

impl<P: Point> Weighted<P> for Raw<P> {
    fn weighted_points(&self) -> (Vec<P>, Vec<f64>) {
        (self.0.clone(), self.1.clone())
    }
}

/// BL distance between measures of possibly different spaces.
pub fn bl_distance_any(mu: &AnyMeasure, nu: &AnyMeasure) -> Result<BlDistance, MeasureError> {
    match (mu.plane(), nu.plane(), mu.sphere(), nu.sphere()) {
        (Some((a, wa)), Some((b, wb)), _, _) => Ok(bl_distance(&Raw(a, wa), &Raw(b, wb))),
        (_, _, Some((a, wa)), Some((b, wb))) => Ok(bl_distance(&Raw(a, wa), &Raw(b, wb))),
        _ => Err(MeasureError::SpaceMismatch),
    }
}

const MASS_EPS: f64 = 1e-15;

/// Min-cost transport with cost `min(d, 2)` by successive shortest paths
/// (dense Dijkstra with node potentials).
fn transport_capped<P: Point>(xa: &[P], wa: &[f64], xb: &[P], wb: &[f64]) -> f64 {
    let n = xa.len();
    let m = xb.len();
    if n == 0 || m == 0 {
        return 0.0;
    }
    let cost: Vec<f64> = xa
        .iter()
        .flat_map(|a| xb.iter().map(move |b| a.dist(b).min(2.0)))
        .collect();
    let mut flow = alloc::vec![0.0f64; n * m];
    let mut supply = wa.to_vec();
    let mut demand = wb.to_vec();
    // Potentials: sources 0..n, sinks n..n+m.
    let mut pot = alloc::vec![0.0f64; n + m];
    let v = n + m;
    let mut dist = alloc::vec![f64::INFINITY; v];
    let mut prev = alloc::vec![usize::MAX; v];
    let mut done = alloc::vec![false; v];
    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= MASS_EPS * 8.0 || demand.iter().all(|&d| d <= MASS_EPS) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if supply[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        let mut target = usize::MAX;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..v {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n && demand[u - n] > MASS_EPS {
                target = u;
                break;
            }
            if u < n {
                let row = &cost[u * m..(u + 1) * m];
                for j in 0..m {
                    let k = n + j;
                    if done[k] {
                        continue;
                    }
                    let rc = (row[j] + pot[u] - pot[k]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[k] {
                        dist[k] = nd;
                        prev[k] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }
        if target == usize::MAX {
            break;
        }
        let dt = dist[target];
        for k in 0..v {
            pot[k] += dist[k].min(dt);
        }
        // Bottleneck along the path back to a source.
        let mut amount = demand[target - n];
        let mut k = target;
        while prev[k] != usize::MAX {
            let p = prev[k];
            if p >= n {
                // Backward edge p(sink) -> k(source) cancels flow on (k, p).
                amount = amount.min(flow[k * m + (p - n)]);
            }
            k = p;
        }
        amount = amount.min(supply[k]);
        let source = k;
        let mut k = target;
        while prev[k] != usize::MAX {
            let p = prev[k];
            if p < n {
                flow[p * m + (k - n)] += amount;
            } else {
                let f = &mut flow[k * m + (p - n)];
                *f -= amount;
                if *f < MASS_EPS {
                    *f = 0.0;
                }
            }
            k = p;
        }
        supply[source] -= amount;
        demand[target - n] -= amount;
        if supply[source] < MASS_EPS {
            supply[source] = 0.0;
        }
        if demand[target - n] < MASS_EPS {
            demand[target - n] = 0.0;
        }
    }
    flow.iter().zip(&cost).map(|(f, c)| f * c).collect::<NeumaierSum>().value()
}

/// The fixed dictionary for a support, as closures over points.
fn dictionary<P: Point>(support: &[P]) -> (Vec<[f64; 3]>, [f64; 3]) {
    match P::SPACE {
        Space::Plane => {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in support {
                let c = p.coords();
                for d in 0..2 {
                    lo[d] = lo[d].min(c[d]);
                    hi[d] = hi[d].max(c[d]);
                }
            }
            let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.0];
            let radius = support
                .iter()
                .map(|p| {
                    let c = p.coords();
                    ((c[0] - center[0]).powi(2) + (c[1] - center[1]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max);
            let mut anchors = Vec::with_capacity(32);
            for k in 0..4 {
                let r = radius * (k + 1) as f64 / 4.0;
                for l in 0..8 {
                    let a = PI * l as f64 / 4.0;
                    anchors.push([center[0] + r * a.cos(), center[1] + r * a.sin(), 0.0]);
                }
            }
            (anchors, center)
        }
        Space::Sphere => {
            let mut anchors = Vec::with_capacity(32);
            for k in 0..4 {
                let t = -0.75 + 0.5 * k as f64;
                for l in 0..8 {
                    let x = SpherePoint::from_height_angle(t, PI * l as f64 / 4.0);
                    anchors.push([x.x1, x.x2, x.x3]);
                }
            }
            (anchors, [0.0, 0.0, 0.5])
        }
    }
}

fn surrogate<P: Point>(xa: &[P], wa: &[f64], xb: &[P], wb: &[f64]) -> f64 {
    let mut support = xa.to_vec();
    support.extend_from_slice(xb);
    let (anchors, center) = dictionary(&support);
    let dims = if P::SPACE == Space::Plane { 2 } else { 3 };
    let nfun = dims + anchors.len();
    let eval = |p: &P, k: usize| -> f64 {
        let c = p.coords();
        if k < dims {
            (c[k] - center[k]).clamp(-1.0, 1.0)
        } else {
            let a = anchors[k - dims];
            let d = ((c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2) + (c[2] - a[2]).powi(2)).sqrt();
            d.min(2.0) - 1.0
        }
    };
    let mut best = 0.0f64;
    for k in 0..nfun {
        let ia: NeumaierSum = xa.iter().zip(wa).map(|(p, w)| w * eval(p, k)).collect();
        let ib: NeumaierSum = xb.iter().zip(wb).map(|(p, w)| w * eval(p, k)).collect();
        best = best.max((ia.value() - ib.value()).abs());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Grid;
    use alloc::sync::Arc;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn emp(pts: &[(f64, f64)]) -> EmpiricalMeasure<PlanePoint> {
        EmpiricalMeasure::new(pts.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn dirac_examples() {
        let d0 = emp(&[(0.0, 0.0)]);
        assert_eq!(bl_distance(&d0, &d0).value, 0.0);
        for r in [0.3, 1.5, 2.0, 7.0] {
            let dz = emp(&[(r, 0.0)]);
            let d = bl_distance(&d0, &dz);
            assert_eq!(d.mode, BlMode::Exact);
            assert!((d.value - r.min(2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn space_mismatch() {
        let p = AnyMeasure::PlaneEmpirical(emp(&[(0.0, 0.0)]));
        let s = AnyMeasure::SphereEmpirical(EmpiricalMeasure::new(alloc::vec![SpherePoint::new(0.0, 0.0, 0.0)]).unwrap());
        assert_eq!(bl_distance_any(&p, &s), Err(MeasureError::SpaceMismatch));
        assert!(bl_distance_any(&p, &p).is_ok());
    }

    #[test]
    fn splitting_mass_example() {
        // Half of the mass moves by 1: distance 1/2.
        let a = emp(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = emp(&[(0.0, 0.0), (0.0, 0.0)]);
        assert!((bl_exact(&a, &b) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn grid_measures_are_supported() {
        let grid = Arc::new(Grid::circle_arcs(8));
        let mu = GridMeasure::uniform(grid.clone());
        let nu = GridMeasure::dirac(grid, 0);
        let d = bl_distance(&mu, &nu);
        assert_eq!(d.mode, BlMode::Exact);
        assert!(d.value > 0.0 && d.value <= 2.0);
        assert!(bl_surrogate(&mu, &nu) <= d.value + 1e-12);
    }

    fn measure() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn pseudometric(a in measure(), b in measure(), c in measure()) {
            let (a, b, c) = (emp(&a), emp(&b), emp(&c));
            let ab = bl_exact(&a, &b);
            let ba = bl_exact(&b, &a);
            let bc = bl_exact(&b, &c);
            let ac = bl_exact(&a, &c);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(bl_exact(&a, &a) <= 1e-12);
        }

        #[test]
        fn surrogate_is_lower_bound(a in measure(), b in measure()) {
            let (a, b) = (emp(&a), emp(&b));
            prop_assert!(bl_surrogate(&a, &b) <= bl_exact(&a, &b) + 1e-9);
        }

        #[test]
        fn to_grid_within_mesh(a in measure()) {
            let mu = emp(&a);
            let grid = Arc::new(Grid::atoms(
                (-40..=40).flat_map(|i| (-40..=40).map(move |j| Complex64::new(i as f64 * 0.1, j as f64 * 0.1))).collect()
            ).unwrap());
            let g = crate::measures::to_grid(&mu, grid);
            let mesh = 0.05 * 2f64.sqrt();
            prop_assert!(bl_exact(&mu, &g) <= mesh + 1e-12);
        }
    }
}
