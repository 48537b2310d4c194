//! Minimization of the truncated rate functionals over grid measures.
//!
//! On a grid the objective is `F(w) = wᵀKw + J(w)` with the cell kernel
//! `K_ij = -max(A_ij, -M)`, where `A_ij` is the cell average of
//! `log |x - y|` (chordal). When the supremum in `J` runs over domain cells
//! `D` with additive shifts `s_c`, `F(w) = wᵀKw + max_{c∈D} (s_c - 2(Kw)_c)`,
//! and since `K` is conditionally positive definite
//!
//! `min_w F(w) = max_{λ∈Δ(D)} (λᵀs - λᵀKλ)`, attained at `w = λ`.
//!
//! The right side is a quadratic program on the simplex, solved by pairwise
//! Frank–Wolfe with exact line search. Its Frank–Wolfe gap equals
//! `F(λ) - (λᵀs - λᵀKλ)`, so it certifies the grid minimum from both sides.
//! The reported value re-evaluates the continuous `J` at the minimizer.
//!
//! Domains and shifts (sphere form): Kac uses the equator cells of the grid
//! with `s = log 2`; elliptic uses every cell with `s = 0`; orthogonal uses
//! the cells nearest to the projected support points with
//! `s = log(1+|z|²) - φ(z)`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::functionals::{j_functional_sphere, MeasureSpace, RateFunctionalSpec, RateVariant, TruncationLevel};
use crate::geometry::{project, PlanePoint, SpherePoint};
use crate::measures::cells::{CellIntegrals, Chordal};
use crate::measures::{Cell, Grid, GridMeasure, MeasureError};
use crate::special::NeumaierSum;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EquilibriumError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("the grid has no cell in the supremum domain")]
    EmptyDomain,
    #[error("Frank-Wolfe gap {gap:e} above tolerance after {iterations} iterations")]
    NonConvergence { gap: f64, iterations: usize },
    #[error("kernel matrix has {got} rows, domain has {want} cells")]
    KernelSize { got: usize, want: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Grid measures that can be read on the sphere.
pub trait SphereView: MeasureSpace {
    fn on_sphere(mu: &GridMeasure<Self>) -> GridMeasure<SpherePoint>;
}

impl SphereView for SpherePoint {
    fn on_sphere(mu: &GridMeasure<Self>) -> GridMeasure<SpherePoint> {
        mu.clone()
    }
}

impl SphereView for PlanePoint {
    fn on_sphere(mu: &GridMeasure<Self>) -> GridMeasure<SpherePoint> {
        mu.pushforward()
    }
}

/// Optimizer settings.
#[derive(Clone, Debug)]
pub struct OptimizerConfig<P: SphereView> {
    pub grid: Arc<Grid<P>>,
    pub truncation: TruncationLevel,
    pub max_iterations: usize,
    /// Tolerance on the Frank–Wolfe gap.
    pub tolerance: f64,
    /// Restrict to conjugation-symmetric measures.
    pub symmetric: bool,
}

impl<P: SphereView> OptimizerConfig<P> {
    pub fn new(grid: Arc<Grid<P>>) -> Self {
        Self { grid, truncation: TruncationLevel::default(), max_iterations: 200_000, tolerance: 1e-7, symmetric: false }
    }

    pub fn truncation(mut self, m: TruncationLevel) -> Self {
        self.truncation = m;
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn symmetric(mut self, on: bool) -> Self {
        self.symmetric = on;
        self
    }

    fn validate(&self) -> Result<(), EquilibriumError> {
        if !(self.tolerance > 0.0) {
            return Err(EquilibriumError::InvalidConfig("tolerance must be positive"));
        }
        if self.grid.is_empty() {
            return Err(EquilibriumError::InvalidConfig("empty grid"));
        }
        if self.symmetric && self.grid.conjugation().is_none() {
            return Err(EquilibriumError::InvalidConfig("symmetry requires a conjugation-closed grid"));
        }
        Ok(())
    }
}

/// Dense symmetric matrix `K_ij = -max(A_ij, -M)` over a list of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    /// Row `i` of the lower triangle, entries `j = 0..=i`.
    pub fn lower_row(ci: &CellIntegrals<'_, Chordal>, i: usize, m: TruncationLevel) -> Vec<f64> {
        (0..=i).map(|j| -ci.pair(i, j).max(-m.value())).collect()
    }

    /// Build from lower-triangle rows, e.g. computed in parallel.
    pub fn from_lower_rows(rows: Vec<Vec<f64>>) -> Result<Self, EquilibriumError> {
        let n = rows.len();
        let mut data = alloc::vec![0.0; n * n];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != i + 1 {
                return Err(EquilibriumError::InvalidConfig("lower rows must have lengths 1..=n"));
            }
            for (j, &v) in r.iter().enumerate() {
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(Self { n, data })
    }

    pub fn assemble(cells: &[Cell], m: TruncationLevel) -> Self {
        let ci = CellIntegrals::<Chordal>::new(cells);
        let rows = (0..cells.len()).map(|i| Self::lower_row(&ci, i, m)).collect();
        Self::from_lower_rows(rows).expect("rows have triangular shape")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `K w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(w).map(|(a, b)| a * b).collect::<NeumaierSum>().value()).collect()
    }

    /// `wᵀ K w`.
    pub fn quadratic(&self, w: &[f64]) -> f64 {
        self.apply(w).iter().zip(w).map(|(a, b)| a * b).collect::<NeumaierSum>().value()
    }
}

/// Domain cells (grid indices, ascending) and their shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteProblem {
    pub domain: Vec<usize>,
    pub shifts: Vec<f64>,
}

impl DiscreteProblem {
    pub fn cells(&self, all: &[Cell]) -> Vec<Cell> {
        self.domain.iter().map(|&i| all[i]).collect()
    }
}

const EQUATOR_TOL: f64 = 1e-12;

/// The supremum domain of `spec` as grid cells.
pub fn discrete_problem(spec: &RateFunctionalSpec, cells: &[Cell]) -> Result<DiscreteProblem, EquilibriumError> {
    let (domain, shifts) = match spec.variant() {
        RateVariant::Kac => {
            let d: Vec<usize> = cells
                .iter()
                .enumerate()
                .filter(|(_, c)| match **c {
                    Cell::Arc { t, .. } => t.abs() <= EQUATOR_TOL,
                    Cell::Atom(x) => x.height().abs() <= EQUATOR_TOL,
                    Cell::Patch { .. } => false,
                })
                .map(|(i, _)| i)
                .collect();
            let s = alloc::vec![core::f64::consts::LN_2; d.len()];
            (d, s)
        }
        RateVariant::Elliptic => ((0..cells.len()).collect(), alloc::vec![0.0; cells.len()]),
        RateVariant::Orthogonal => {
            let phi = spec.support_phi().expect("orthogonal spec carries its support");
            let centers: Vec<SpherePoint> = cells.iter().map(|c| c.center()).collect();
            let mut best = alloc::vec![f64::NEG_INFINITY; cells.len()];
            for (&z, &f) in spec.domain_points().iter().zip(phi) {
                let x = project(z);
                let mut arg = 0;
                let mut bd = f64::INFINITY;
                for (j, c) in centers.iter().enumerate() {
                    let d = c.dist(&x);
                    if d < bd {
                        bd = d;
                        arg = j;
                    }
                }
                best[arg] = best[arg].max(spec.sphere_shift(z, f));
            }
            best.iter().enumerate().filter(|(_, s)| s.is_finite()).map(|(i, &s)| (i, s)).unzip()
        }
    };
    if domain.is_empty() {
        return Err(EquilibriumError::EmptyDomain);
    }
    Ok(DiscreteProblem { domain, shifts })
}

/// Result of [`minimize_rate`].
#[derive(Clone, Debug)]
pub struct Minimizer<P: SphereView> {
    pub measure: GridMeasure<P>,
    /// Rate function at the minimizer with the continuous `J`.
    pub value: f64,
    /// `F(λ)` with the supremum over domain cells.
    pub discrete_value: f64,
    /// `λᵀs - λᵀKλ ≤ min F`.
    pub lower_bound: f64,
    /// Frank–Wolfe gap `= discrete_value - lower_bound`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Quadratic objective `λᵀKλ - λᵀs` per iteration (nonincreasing).
    pub trace: Vec<f64>,
    /// Grid mesh, for the stability report.
    pub mesh: f64,
}

struct QpResult {
    lambda: Vec<f64>,
    trace: Vec<f64>,
    gap: f64,
    iterations: usize,
}

/// Pairwise Frank–Wolfe for `min λᵀKλ - λᵀs` on the simplex. Ties go to
/// the lowest index.
fn pairwise_frank_wolfe(k: &KernelMatrix, s: &[f64], max_iter: usize, tol: f64) -> QpResult {
    let m = s.len();
    let mut lam = alloc::vec![1.0 / m as f64; m];
    let mut kl = k.apply(&lam);
    let mut trace = Vec::new();
    let mut gap: f64;
    let mut it = 0;
    let objective = |lam: &[f64], kl: &[f64]| -> f64 {
        lam.iter().zip(kl).zip(s).map(|((l, a), b)| l * (a - b)).collect::<NeumaierSum>().value()
    };
    loop {
        let g: Vec<f64> = kl.iter().zip(s).map(|(a, b)| 2.0 * a - b).collect();
        let (mut fw, mut away) = (0usize, usize::MAX);
        for c in 0..m {
            if g[c] < g[fw] {
                fw = c;
            }
            if lam[c] > 0.0 && (away == usize::MAX || g[c] > g[away]) {
                away = c;
            }
        }
        let lg: f64 = lam.iter().zip(&g).map(|(a, b)| a * b).collect::<NeumaierSum>().value();
        gap = (lg - g[fw]).max(0.0);
        trace.push(objective(&lam, &kl));
        if gap <= tol || it >= max_iter || fw == away {
            break;
        }
        it += 1;
        let curv = k.get(fw, fw) + k.get(away, away) - 2.0 * k.get(fw, away);
        let slope = g[fw] - g[away];
        let gmax = lam[away];
        let gamma = if curv > 0.0 { (-slope / (2.0 * curv)).min(gmax) } else { gmax };
        if gamma <= 0.0 {
            break;
        }
        lam[fw] += gamma;
        if gamma == gmax {
            lam[away] = 0.0;
        } else {
            lam[away] -= gamma;
        }
        let (rf, ra) = (k.row(fw), k.row(away));
        for c in 0..m {
            kl[c] += gamma * (rf[c] - ra[c]);
        }
        if it % 2000 == 0 {
            kl = k.apply(&lam);
        }
    }
    QpResult { lambda: lam, trace, gap, iterations: it }
}

/// Conjugation orbits of the domain, as local indices.
fn orbits(problem: &DiscreteProblem, conj: &[usize]) -> Result<Vec<Vec<usize>>, EquilibriumError> {
    let local = |g: usize| problem.domain.binary_search(&g).ok();
    let mut seen = alloc::vec![false; problem.domain.len()];
    let mut out = Vec::new();
    for (a, &g) in problem.domain.iter().enumerate() {
        if seen[a] {
            continue;
        }
        let b = local(conj[g]).ok_or(EquilibriumError::InvalidConfig("domain is not conjugation closed"))?;
        seen[a] = true;
        seen[b] = true;
        out.push(if a == b { alloc::vec![a] } else { alloc::vec![a, b] });
    }
    Ok(out)
}

/// Minimize the truncated rate function of `spec` over measures on the grid.
///
/// A result is returned even when the gap stays above the tolerance; it is
/// then flagged with `converged = false`.
pub fn minimize_rate<P: SphereView>(spec: &RateFunctionalSpec, cfg: &OptimizerConfig<P>) -> Result<Minimizer<P>, EquilibriumError> {
    cfg.validate()?;
    let problem = discrete_problem(spec, cfg.grid.cells())?;
    let kernel = KernelMatrix::assemble(&problem.cells(cfg.grid.cells()), cfg.truncation);
    minimize_rate_with_kernel(spec, cfg, &problem, &kernel)
}

/// As [`minimize_rate`] with a precomputed domain kernel.
pub fn minimize_rate_with_kernel<P: SphereView>(
    spec: &RateFunctionalSpec,
    cfg: &OptimizerConfig<P>,
    problem: &DiscreteProblem,
    kernel: &KernelMatrix,
) -> Result<Minimizer<P>, EquilibriumError> {
    cfg.validate()?;
    let m = problem.domain.len();
    if kernel.len() != m {
        return Err(EquilibriumError::KernelSize { got: kernel.len(), want: m });
    }
    if spec.is_real() && !cfg.symmetric {
        return Err(EquilibriumError::InvalidConfig("the real variant needs the symmetry flag"));
    }
    let orbit_list: Vec<Vec<usize>> = if cfg.symmetric {
        orbits(problem, cfg.grid.conjugation().expect("validated"))?
    } else {
        (0..m).map(|a| alloc::vec![a]).collect()
    };

    // Reduced problem over orbit-averaged vertices.
    let r = orbit_list.len();
    let reduced = if cfg.symmetric {
        let rows = (0..r)
            .map(|a| {
                (0..=a)
                    .map(|b| {
                        let oa = &orbit_list[a];
                        let ob = &orbit_list[b];
                        let sum: f64 = oa.iter().flat_map(|&i| ob.iter().map(move |&j| (i, j))).map(|(i, j)| kernel.get(i, j)).sum();
                        sum / (oa.len() * ob.len()) as f64
                    })
                    .collect()
            })
            .collect();
        Some(KernelMatrix::from_lower_rows(rows)?)
    } else {
        None
    };
    let rs: Vec<f64> = orbit_list.iter().map(|o| o.iter().map(|&i| problem.shifts[i]).sum::<f64>() / o.len() as f64).collect();
    let qp = pairwise_frank_wolfe(reduced.as_ref().unwrap_or(kernel), &rs, cfg.max_iterations, cfg.tolerance);

    // Expand to domain weights and then to grid weights.
    let mut lam = alloc::vec![0.0; m];
    for (o, &mu) in orbit_list.iter().zip(&qp.lambda) {
        for &i in o {
            lam[i] = mu / o.len() as f64;
        }
    }
    let kl = kernel.apply(&lam);
    let quad: f64 = lam.iter().zip(&kl).map(|(a, b)| a * b).collect::<NeumaierSum>().value();
    let ls: f64 = lam.iter().zip(&problem.shifts).map(|(a, b)| a * b).collect::<NeumaierSum>().value();
    let jmax = problem.shifts.iter().zip(&kl).map(|(s, k)| s - 2.0 * k).fold(f64::NEG_INFINITY, f64::max);
    let discrete_value = quad + jmax;
    let lower_bound = ls - quad;

    let mut weights = alloc::vec![0.0; cfg.grid.len()];
    for (&g, &l) in problem.domain.iter().zip(&lam) {
        weights[g] = l;
    }
    let measure = GridMeasure::normalized(cfg.grid.clone(), weights)?;
    let j = j_functional_sphere(&P::on_sphere(&measure), spec);
    let mut value = quad + j;
    if spec.is_real() {
        value = 0.5 * (value - spec.center());
    }
    Ok(Minimizer {
        measure,
        value,
        discrete_value,
        lower_bound,
        gap: qp.gap,
        iterations: qp.iterations,
        converged: qp.gap <= cfg.tolerance,
        trace: qp.trace,
        mesh: cfg.grid.mesh(),
    })
}

/// `inf I` for centering; fails if the optimizer did not converge.
pub fn center_rate<P: SphereView>(spec: &RateFunctionalSpec, cfg: &OptimizerConfig<P>) -> Result<f64, EquilibriumError> {
    let r = minimize_rate(spec, cfg)?;
    if !r.converged {
        return Err(EquilibriumError::NonConvergence { gap: r.gap, iterations: r.iterations });
    }
    Ok(r.value)
}

/// The truncated grid objective `E_M(μ) + J(μ)` with the continuous `J`.
pub fn grid_objective(spec: &RateFunctionalSpec, nu: &GridMeasure<SpherePoint>, kernel: &KernelMatrix) -> f64 {
    kernel.quadratic(nu.weights()) + j_functional_sphere(nu, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::OrthogonalData;
    use crate::functionals::rate_function_sphere;
    use crate::measures::transport::bl_surrogate;
    use crate::rng::{open01, stream_rng};

    fn m30() -> TruncationLevel {
        TruncationLevel::default()
    }

    #[test]
    fn kac_equilibrium_is_uniform_equator() {
        let grid = Arc::new(Grid::rings(&[-0.4, -0.2, 0.0, 0.2, 0.4], 64));
        let spec = RateFunctionalSpec::kac(1024).unwrap();
        let r = minimize_rate(&spec, &OptimizerConfig::new(grid.clone())).unwrap();
        assert!(r.converged);
        let near: f64 = r
            .measure
            .points()
            .iter()
            .zip(r.measure.weights())
            .filter(|(p, _)| p.height().abs() < 0.2)
            .map(|(_, w)| w)
            .sum();
        assert!(near >= 0.95);
        assert!(r.value.abs() < 1e-2, "{}", r.value);
        assert!(r.lower_bound <= r.discrete_value + 1e-12);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        assert!((center_rate(&spec, &OptimizerConfig::new(grid)).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn orthogonal_circle_matches_kac() {
        let grid = Arc::new(Grid::<SpherePoint>::equator_arcs(128));
        let kac = center_rate(&RateFunctionalSpec::kac(1024).unwrap(), &OptimizerConfig::new(grid.clone())).unwrap();
        let data = OrthogonalData::new(
            crate::quadrature::circle_nodes(128),
            alloc::vec![1.0 / 128.0; 128],
            alloc::vec![0.0; 128],
        )
        .unwrap();
        let ortho = center_rate(&RateFunctionalSpec::orthogonal(&data).unwrap(), &OptimizerConfig::new(grid)).unwrap();
        assert!((kac - ortho).abs() < 1e-2, "{kac} {ortho}");
    }

    #[test]
    fn elliptic_equilibrium_on_coarse_grid() {
        let grid = Arc::new(Grid::sphere_product(12, 16));
        let spec = RateFunctionalSpec::elliptic_grid(41, 16, 1e3);
        let r = minimize_rate(&spec, &OptimizerConfig::new(grid.clone()).symmetric(true)).unwrap();
        assert!(r.converged);
        assert!((r.value + 0.5).abs() < 0.03, "{}", r.value);
        let u = crate::measures::sphere_uniform(12, 16);
        assert!(bl_surrogate(&r.measure, &u) < 0.1);
        // Symmetric and unrestricted optima agree.
        let free = minimize_rate(&spec, &OptimizerConfig::new(grid)).unwrap();
        assert!((free.discrete_value - r.discrete_value).abs() < 1e-5);
    }

    #[test]
    fn single_point_grid() {
        let grid = Arc::new(Grid::atoms(alloc::vec![SpherePoint::from_height_angle(0.3, 1.0)]).unwrap());
        let spec = RateFunctionalSpec::elliptic_grid(41, 16, 1e3);
        let r = minimize_rate(&spec, &OptimizerConfig::new(grid.clone())).unwrap();
        assert_eq!(r.measure.weights(), &[1.0]);
        let j = j_functional_sphere(&r.measure, &spec);
        assert!((r.value - (30.0 + j)).abs() < 1e-12);
        assert!(j.abs() < 1e-6, "{j}");
    }

    #[test]
    fn grid_objective_is_convex_and_symmetrization_helps() {
        let grid = Arc::new(Grid::sphere_product(6, 8));
        let spec = RateFunctionalSpec::elliptic_grid(21, 8, 1e2);
        let kernel = KernelMatrix::assemble(grid.cells(), m30());
        let mut rng = stream_rng(2, 0);
        let mut random = || {
            let w: Vec<f64> = (0..grid.len()).map(|_| open01(&mut rng).powi(3)).collect();
            GridMeasure::normalized(grid.clone(), w).unwrap()
        };
        for _ in 0..10 {
            let (a, b) = (random(), random());
            let (fa, fb) = (grid_objective(&spec, &a, &kernel), grid_objective(&spec, &b, &kernel));
            for t in [0.25, 0.5, 0.75] {
                let mix = grid_objective(&spec, &a.mix(&b, t), &kernel);
                assert!(mix <= t * fa + (1.0 - t) * fb + 1e-9);
            }
            let sym = a.symmetrize().unwrap();
            assert!(grid_objective(&spec, &sym, &kernel) <= fa + 1e-9);
        }
        // Consistency with the functional itself.
        let a = random();
        let direct = rate_function_sphere(&a, &spec, m30()).value;
        assert!((grid_objective(&spec, &a, &kernel) - direct).abs() < 1e-9);
    }

    #[test]
    fn config_errors() {
        let grid = Arc::new(Grid::atoms(alloc::vec![SpherePoint::from_height_angle(0.3, 1.0)]).unwrap());
        let spec = RateFunctionalSpec::kac(64).unwrap();
        assert_eq!(minimize_rate(&spec, &OptimizerConfig::new(grid.clone())).unwrap_err(), EquilibriumError::EmptyDomain);
        let bad = OptimizerConfig::new(grid).tolerance(0.0);
        assert!(matches!(minimize_rate(&spec, &bad), Err(EquilibriumError::InvalidConfig(_))));
        let grid = Arc::new(Grid::sphere_product(8, 8));
        let e = RateFunctionalSpec::elliptic_grid(21, 8, 1e2);
        let r = minimize_rate(&e, &OptimizerConfig::new(grid.clone()).max_iterations(1).tolerance(1e-14)).unwrap();
        assert!(!r.converged);
        assert!(matches!(
            center_rate(&e, &OptimizerConfig::new(grid).max_iterations(1).tolerance(1e-14)),
            Err(EquilibriumError::NonConvergence { .. })
        ));
    }
}
