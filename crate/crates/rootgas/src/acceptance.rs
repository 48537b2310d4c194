//! The acceptance suite: thirteen end-to-end checks, each with a runtime
//! budget. Shared by `rootgas validate` and the `acceptance` test target.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rootgas_core::ensembles::roots::reconstruction_error;
use rootgas_core::ensembles::{find_roots, sample_coefficients, BasisTag};
use rootgas_core::equilibrium::{discrete_problem, minimize_rate_with_kernel, OptimizerConfig};
use rootgas_core::exactlaws::{bernstein_markov_check, elliptic_inner_product, elliptic_inner_product_quadrature, mixture_constants};
use rootgas_core::functionals::{parseval_residual, plane_sphere_rate_identity_residual, rate_function, rate_function_sphere, RateFunctionalSpec, TruncationLevel};
use rootgas_core::geometry::{chordal_identity_residual, norm_identity_residual};
use rootgas_core::gibbs::{
    default_complex_start, detailed_balance_residual, direct_root_samples, mcmc_complex, mcmc_complex_from, mcmc_real_mixture,
    quadratic_complex_fraction, thinned_statistics, validate_values, ChainConfig, MoveKind, Sampler, ABS_PRODUCT, ABS_SUM,
};
use rootgas_core::measures::transport::bl_surrogate;
use rootgas_core::measures::{circle_uniform, sphere_uniform, Grid, GridMeasure};
use rootgas_core::rng::{normal, open01, stream_rng};
use rootgas_core::stats::{gelman_rubin, integrated_autocorrelation, mean};
use rootgas_core::{CoefficientField, ComplexPolynomial, Complex64, ModelSpec, PlanePoint};
use serde::Serialize;

use crate::commands::{assemble_kernel_parallel, distance_to_reference, sphere_reference};
use crate::config::ModelKind;

/// Outcome of one check before timing is applied.
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn() -> Check,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    /// Checks passed and the run stayed within budget.
    pub pass: bool,
    pub checks_pass: bool,
    pub within_budget: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CriterionResult {
    /// One line: `criterion  N name ... PASS|FAIL (detail; time)`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let budget = if self.within_budget { String::new() } else { format!(", over budget {:.0} s", self.budget_seconds) };
        format!("criterion {:>2} {:<34} {verdict} ({}; {:.2} s{budget})", self.id, self.name, self.detail, self.seconds)
    }
}

pub fn run_criterion(c: &Criterion) -> CriterionResult {
    let t = Instant::now();
    let check = (c.run)();
    let elapsed = t.elapsed();
    let within_budget = elapsed <= c.budget;
    CriterionResult {
        id: c.id,
        name: c.name,
        pass: check.pass && within_budget,
        checks_pass: check.pass,
        within_budget,
        seconds: elapsed.as_secs_f64(),
        budget_seconds: c.budget.as_secs_f64(),
        detail: check.detail,
    }
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub const CRITERIA: [Criterion; 13] = [
    Criterion { id: 1, name: "geometry identities", budget: secs(1), run: geometry_identities },
    Criterion { id: 2, name: "parseval exactness", budget: secs(5), run: parseval_exactness },
    Criterion { id: 3, name: "elliptic orthonormality", budget: secs(10), run: elliptic_orthonormality },
    Criterion { id: 4, name: "bernstein-markov", budget: secs(10), run: bernstein_markov },
    Criterion { id: 5, name: "root-finder soundness", budget: secs(30), run: root_finder_soundness },
    Criterion { id: 6, name: "complex law equivalence", budget: secs(300), run: complex_law_equivalence },
    Criterion { id: 7, name: "real mixture weights", budget: secs(300), run: real_mixture_weights },
    Criterion { id: 8, name: "mixture constants control", budget: secs(1), run: mixture_constant_control },
    Criterion { id: 9, name: "rate centering and identity", budget: secs(60), run: rate_centering },
    Criterion { id: 10, name: "elliptic equilibrium", budget: secs(300), run: elliptic_equilibrium },
    Criterion { id: 11, name: "convergence to equilibrium", budget: secs(300), run: convergence_to_equilibrium },
    Criterion { id: 12, name: "real symmetry gate", budget: secs(10), run: real_symmetry_gate },
    Criterion { id: 13, name: "chain balance and mixing", budget: secs(120), run: chain_balance_and_mixing },
];

/// Runs the selected criteria (all when `only` is empty), in order.
pub fn run_suite(only: &[usize], mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&(c.id as usize)))
        .map(|c| {
            let r = run_criterion(c);
            on_result(&r);
            r
        })
        .collect()
}

fn log_uniform_point<R: rootgas_core::rng::Rng>(rng: &mut R) -> PlanePoint {
    let r = 10f64.powf(-6.0 + 12.0 * open01(rng));
    Complex64::from_polar(r, std::f64::consts::TAU * open01(rng))
}

fn gaussian_coeffs<R: rootgas_core::rng::Rng>(rng: &mut R, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| Complex64::new(normal(rng), normal(rng))).collect()
}

/// Chordal residual relative to `1 + |z - w|²` (the identity is between
/// quantities of that size); norm residual absolute.
fn geometry_identities() -> Check {
    let mut rng = stream_rng(101, 0);
    let (mut chordal, mut norm) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let z = log_uniform_point(&mut rng);
        let w = log_uniform_point(&mut rng);
        chordal = chordal.max(chordal_identity_residual(z, w) / (1.0 + (z - w).norm_sqr()));
        norm = norm.max(norm_identity_residual(z)).max(norm_identity_residual(w));
    }
    Check { pass: chordal <= 1e-10 && norm <= 1e-10, detail: format!("max chordal {chordal:.2e}, max norm {norm:.2e}") }
}

fn parseval_exactness() -> Check {
    let mut rng = stream_rng(102, 0);
    let worst = (0..100)
        .map(|i| {
            let degree = i % 50 + 1;
            parseval_residual(&gaussian_coeffs(&mut rng, degree + 1), 2 * degree + 2)
        })
        .fold(0.0, f64::max);
    Check { pass: worst <= 1e-10, detail: format!("max relative error {worst:.2e}") }
}

fn elliptic_orthonormality() -> Check {
    let mut worst = 0.0f64;
    for n in 0..=20 {
        for k in 0..=n {
            let exact = elliptic_inner_product(k, n);
            worst = worst.max((elliptic_inner_product_quadrature(k, n) - exact).abs() / exact);
        }
    }
    Check { pass: worst <= 1e-8, detail: format!("231 pairs, max relative error {worst:.2e}") }
}

fn bernstein_markov() -> Check {
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    for basis in [ModelKind::Kac, ModelKind::Elliptic] {
        for i in 0..1000u64 {
            let n = (i % 30 + 1) as usize;
            let spec = basis.spec(CoefficientField::ComplexGaussian, n, None).expect("valid model");
            let p = sample_coefficients(&spec, 10_000 + i).expect("sampling succeeds");
            let r = bernstein_markov_check(&p);
            violations += !r.pass as usize;
            worst_ratio = worst_ratio.max(r.ratio / r.bound);
        }
    }
    let saturation = (1..=30)
        .map(|n| {
            let r = bernstein_markov_check(&ComplexPolynomial::from_monomial(BasisTag::Kac, &vec![Complex64::new(1.0, 0.0); n + 1]));
            (r.ratio - r.bound).abs() / r.bound
        })
        .fold(0.0, f64::max);
    Check {
        pass: violations == 0 && saturation <= 1e-12,
        detail: format!("{violations} violations in 2000, max ratio/bound {worst_ratio:.4}, equality case off by {saturation:.1e}"),
    }
}

fn root_finder_soundness() -> Check {
    let run = |kind: ModelKind, top: usize, step: usize| -> f64 {
        (0..50usize)
            .into_par_iter()
            .map(|i| {
                let n = top - step * i;
                let spec = kind.spec(CoefficientField::ComplexGaussian, n, None).expect("valid model");
                let p = sample_coefficients(&spec, 20_000 + i as u64).expect("sampling succeeds");
                let r = find_roots(&p).expect("roots converge");
                reconstruction_error(&p.normalized_coefficients(), r.atoms())
            })
            .reduce(|| 0.0, f64::max)
    };
    let kac = run(ModelKind::Kac, 100, 2);
    let ell = run(ModelKind::Elliptic, 50, 1);
    Check { pass: kac <= 1e-8 && ell <= 1e-8, detail: format!("max error kac {kac:.2e}, elliptic {ell:.2e}") }
}

/// Effective samples per side in the law-equivalence test.
const EFFECTIVE: usize = 10_000;

/// Runs a chain long enough to yield `EFFECTIVE` thinned samples of both
/// statistics, doubling its length as needed.
fn effective_chain_statistics(spec: &ModelSpec, seed: u64) -> Option<(Vec<Vec<f64>>, f64, u64)> {
    let mut steps = 1_000_000u64;
    while steps <= 64_000_000 {
        let chain = mcmc_complex(spec, &ChainConfig::new(steps, seed).record_every(10)).ok()?;
        let (mc, tau) = thinned_statistics(&chain.states, &[ABS_PRODUCT, ABS_SUM]);
        if mc[0].len() >= EFFECTIVE {
            return Some((mc.into_iter().map(|v| v[..EFFECTIVE].to_vec()).collect(), tau, steps));
        }
        steps *= 2;
    }
    None
}

fn complex_law_equivalence() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2usize, 3] {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, n);
        let Some((mc, tau, steps)) = effective_chain_statistics(&spec, 600 + n as u64) else {
            return Check { pass: false, detail: format!("n={n}: too few effective samples") };
        };
        let direct = direct_root_samples(&spec, EFFECTIVE, 700 + n as u64).expect("direct sampling succeeds");
        let xs: Vec<Vec<f64>> = [ABS_PRODUCT, ABS_SUM].iter().map(|s| direct.iter().map(|z| (s.eval)(z)).collect()).collect();
        let r = validate_values(&xs, &mc, &[ABS_PRODUCT, ABS_SUM], n as u64).expect("nonempty samples");
        pass &= r.passes(0.01);
        let ps: Vec<String> = r.entries.iter().map(|e| format!("{:.3}", e.ks.p_value)).collect();
        parts.push(format!("n={n}: p {} ({steps} steps, τ {tau:.1})", ps.join("/")));
    }
    Check { pass, detail: parts.join("; ") }
}

fn real_mixture_weights() -> Check {
    let spec = ModelSpec::kac(CoefficientField::RealGaussian, 2);
    let chain = mcmc_real_mixture(&spec, &ChainConfig::new(4_000_000, 71).record_every(10)).expect("valid chain");
    let ind: Vec<f64> = chain.states.iter().map(|s| (s.k == Some(1)) as u8 as f64).collect();
    let p = mean(&ind);
    let tau = integrated_autocorrelation(&ind);
    let se_chain = (p * (1.0 - p) * tau / ind.len() as f64).sqrt();
    let (q, se_direct) = quadratic_complex_fraction(100_000, 72);
    let se = (se_chain * se_chain + se_direct * se_direct).sqrt();
    let z = (p - q) / se;
    Check {
        pass: z.abs() <= 2.0,
        detail: format!("chain {p:.4} ± {se_chain:.4}, direct {q:.4} ± {se_direct:.4}, z {z:.2}"),
    }
}

fn mixture_constant_control() -> Check {
    let control = |n| mixture_constants(&ModelSpec::kac(CoefficientField::RealGaussian, n)).uniform_control();
    let (c100, c200, c400) = (control(100), control(200), control(400));
    Check {
        pass: c200 < 0.05 && c400 < c100,
        detail: format!("n=100 {c100:.4e}, n=200 {c200:.4e}, n=400 {c400:.4e}"),
    }
}

fn random_atom_measure(seed: u64, count: usize) -> GridMeasure<PlanePoint> {
    let mut rng = stream_rng(seed, 9);
    let pts: Vec<PlanePoint> = (0..count).map(|_| Complex64::new(normal(&mut rng), normal(&mut rng))).collect();
    let w: Vec<f64> = (0..count).map(|_| open01(&mut rng)).collect();
    GridMeasure::normalized(Arc::new(Grid::atoms(pts).expect("finite atoms")), w).expect("positive weights")
}

fn rate_centering() -> Check {
    let m = TruncationLevel::default();
    let centered = rate_function(&circle_uniform(4096), &RateFunctionalSpec::kac(4096).expect("valid"), m).value;
    let specs = [RateFunctionalSpec::kac(4096).expect("valid"), RateFunctionalSpec::elliptic()];
    let worst = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let mu = random_atom_measure(900 + s, 50);
            specs.iter().map(|spec| plane_sphere_rate_identity_residual(&mu, spec, m)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Check {
        pass: centered.abs() <= 1e-3 && worst <= 1e-9,
        detail: format!("I(nu_S) = {centered:.2e}, max identity residual {worst:.2e}"),
    }
}

fn elliptic_equilibrium() -> Check {
    let m = TruncationLevel::default();
    let spec = RateFunctionalSpec::elliptic();
    let cfg = OptimizerConfig::new(Arc::new(Grid::sphere_product(40, 50))).truncation(m).symmetric(true);
    let problem = discrete_problem(&spec, cfg.grid.cells()).expect("nonempty domain");
    let kernel = assemble_kernel_parallel(&problem.cells(cfg.grid.cells()), m);
    let res = match minimize_rate_with_kernel(&spec, &cfg, &problem, &kernel) {
        Ok(r) => r,
        Err(e) => return Check { pass: false, detail: e.to_string() },
    };
    let d = bl_surrogate(&res.measure, &sphere_uniform(40, 50));
    Check {
        pass: (res.value + 0.5).abs() <= 0.02 && d <= 0.1,
        detail: format!("value {:.6}, gap {:.1e} in {} iterations, BL to uniform {d:.1e}", res.value, res.gap, res.iterations),
    }
}

/// Medians over 20 seeds of the BL surrogate between the roots and the
/// reference measure, for `n = 16, 64, 256`.
pub fn convergence_medians(model: &ModelKind) -> Vec<f64> {
    let reference = sphere_reference(model);
    [16usize, 64, 256]
        .iter()
        .map(|&n| {
            let spec = model.spec(CoefficientField::ComplexGaussian, n, None).expect("valid model");
            let mut d: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|s| {
                    let p = sample_coefficients(&spec, 1_100 + s).expect("sampling succeeds");
                    distance_to_reference(&find_roots(&p).expect("roots converge"), &reference)
                })
                .collect();
            d.sort_by(f64::total_cmp);
            0.5 * (d[9] + d[10])
        })
        .collect()
}

fn convergence_to_equilibrium() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [ModelKind::Kac, ModelKind::Elliptic] {
        let med = convergence_medians(&model);
        pass &= med[0] > med[1] && med[1] > med[2] && med[2] < 0.1;
        parts.push(format!("{} {:.4}/{:.4}/{:.4}", model.name(), med[0], med[1], med[2]));
    }
    Check { pass, detail: format!("medians {}", parts.join(", ")) }
}

/// Random conjugation-closed atom grid: `pairs` conjugate pairs and `reals`
/// points on the real axis.
fn conjugate_closed_atoms(seed: u64, pairs: usize, reals: usize) -> Arc<Grid<PlanePoint>> {
    let mut rng = stream_rng(seed, 12);
    let mut pts = Vec::with_capacity(2 * pairs + reals);
    for _ in 0..pairs {
        let z = Complex64::new(normal(&mut rng), normal(&mut rng).abs() + 1e-3);
        pts.push(z);
        pts.push(z.conj());
    }
    pts.extend((0..reals).map(|_| Complex64::new(normal(&mut rng), 0.0)));
    Arc::new(Grid::atoms(pts).expect("finite atoms"))
}

fn random_weights(grid_len: usize, rng: &mut rootgas_core::rng::StreamRng) -> Vec<f64> {
    (0..grid_len).map(|_| open01(rng)).collect()
}

/// Cycles through Kac measures on circle arcs, elliptic measures on plane
/// atoms and elliptic measures on sphere patches.
fn real_symmetry_gate() -> Check {
    let m = TruncationLevel::default();
    // Coarse supremum domains: the gate does not depend on their resolution.
    let kac = RateFunctionalSpec::kac(256).expect("valid");
    let ell = RateFunctionalSpec::elliptic_grid(21, 8, 1e3);
    let (kac_real, ell_real) = (kac.clone().real(), ell.clone().real());
    let circle = Arc::new(Grid::circle_arcs(32));
    let sphere = Arc::new(Grid::sphere_product(4, 6));
    let mut rng = stream_rng(1_200, 0);
    let (mut infinite, mut worst) = (0usize, 0.0f64);
    for i in 0..100u64 {
        // (Ĩ of the asymmetric measure, Ĩ and I of its symmetrization, centering)
        let (asym, tilde, full, center) = match i % 3 {
            0 => {
                let mu = GridMeasure::normalized(circle.clone(), random_weights(circle.len(), &mut rng)).expect("weights");
                let s = mu.symmetrize().expect("closed grid");
                (rate_function(&mu, &kac_real, m).value, rate_function(&s, &kac_real, m).value, rate_function(&s, &kac, m).value, kac.center())
            }
            1 => {
                let grid = conjugate_closed_atoms(1_200 + i, 12, 4);
                let mu = GridMeasure::normalized(grid.clone(), random_weights(grid.len(), &mut rng)).expect("weights");
                let s = mu.symmetrize().expect("closed grid");
                (rate_function(&mu, &ell_real, m).value, rate_function(&s, &ell_real, m).value, rate_function(&s, &ell, m).value, ell.center())
            }
            _ => {
                let nu = GridMeasure::normalized(sphere.clone(), random_weights(sphere.len(), &mut rng)).expect("weights");
                let s = nu.symmetrize().expect("closed grid");
                (
                    rate_function_sphere(&nu, &ell_real, m).value,
                    rate_function_sphere(&s, &ell_real, m).value,
                    rate_function_sphere(&s, &ell, m).value,
                    ell.center(),
                )
            }
        };
        infinite += (asym == f64::INFINITY) as usize;
        let want = 0.5 * (full - center);
        worst = worst.max((tilde - want).abs() / (1.0 + want.abs()));
    }
    Check {
        pass: infinite == 100 && worst <= 1e-12,
        detail: format!("{infinite}/100 asymmetric measures infinite, max symmetric mismatch {worst:.1e}"),
    }
}

fn chain_balance_and_mixing() -> Check {
    let c = Complex64::new;
    let mut rng = stream_rng(1_300, 0);
    let mut balance = 0.0f64;
    let mut tried = [0usize; 5];
    let mut note = |r: Option<rootgas_core::gibbs::BalanceResidual>, kind: MoveKind, tried: &mut [usize; 5]| {
        if let Some(r) = r {
            balance = balance.max(r.max());
            tried[MoveKind::ALL.iter().position(|&k| k == kind).expect("listed")] += 1;
        }
    };
    for field in [CoefficientField::ComplexGaussian, CoefficientField::RealGaussian] {
        for model in [ModelKind::Kac, ModelKind::Elliptic] {
            let spec = model.spec(field, 3, None).expect("valid model");
            let states = match field {
                CoefficientField::ComplexGaussian => vec![Sampler::complex(&spec, &[c(0.5, 0.1), c(-0.3, 0.8), c(1.2, -0.4)]).expect("distinct")],
                CoefficientField::RealGaussian => vec![
                    Sampler::real(&spec, &[c(-0.7, 0.0), c(0.2, 0.0), c(1.5, 0.0)], 0).expect("real layout"),
                    Sampler::real(&spec, &[c(0.4, 0.0), c(-0.2, 0.9), c(-0.2, -0.9)], 1).expect("pair layout"),
                ],
            };
            for x in &states {
                for kind in MoveKind::ALL {
                    for _ in 0..50 {
                        if let Some(mv) = x.draw(kind, &mut rng) {
                            note(detailed_balance_residual(x, mv), kind, &mut tried);
                        }
                    }
                }
            }
        }
    }
    let all_kinds = tried.iter().all(|&t| t > 0);

    let drift = [
        (ModelSpec::kac(CoefficientField::ComplexGaussian, 6), false),
        (ModelSpec::elliptic(CoefficientField::ComplexGaussian, 6), false),
        (ModelSpec::kac(CoefficientField::RealGaussian, 6), true),
        (ModelSpec::elliptic(CoefficientField::RealGaussian, 6), true),
    ]
    .par_iter()
    .map(|(spec, real)| {
        let cfg = ChainConfig::new(50_000, 1_301);
        let chain = if *real { mcmc_real_mixture(spec, &cfg) } else { mcmc_complex(spec, &cfg) }.expect("valid chain");
        (chain.diagnostics.max_cache_drift, chain.diagnostics.cache_checks)
    })
    .collect::<Vec<_>>();
    let max_drift = drift.iter().map(|d| d.0).fold(0.0, f64::max);
    let checks: u64 = drift.iter().map(|d| d.1).sum();

    let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 4);
    let cfg = ChainConfig::new(200_000, 1_302);
    let starts: Vec<Vec<Complex64>> = vec![
        default_complex_start(4),
        (0..4).map(|j| c(50.0 + 10.0 * j as f64, -40.0)).collect(),
        (0..4).map(|j| c(1e-3 * (j as f64 + 1.0), 1e-3)).collect(),
        (0..4).map(|j| c(-20.0, 5.0 * j as f64 + 1.0)).collect(),
    ];
    let traces: Vec<Vec<f64>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| mcmc_complex_from(&spec, &cfg.stream(i as u64), s).expect("valid chain").h_trace)
        .collect();
    let refs: Vec<&[f64]> = traces.iter().map(Vec::as_slice).collect();
    let rhat = gelman_rubin(&refs);
    Check {
        pass: all_kinds && balance <= 1e-12 && max_drift <= 1e-9 && checks > 0 && rhat < 1.1,
        detail: format!(
            "balance residual {balance:.1e} over {} moves, cache drift {max_drift:.1e} in {checks} checks, R-hat {rhat:.4}",
            tried.iter().sum::<usize>()
        ),
    }
}
