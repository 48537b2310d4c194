//! Subcommand drivers. Each writes into a fresh data directory and returns
//! the files it produced per task.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use rootgas_core::ensembles::{find_roots, sample_coefficients};
use rootgas_core::equilibrium::{discrete_problem, minimize_rate_with_kernel, KernelMatrix, OptimizerConfig, SphereView};
use rootgas_core::functionals::{rate_function, rate_function_sphere, RateFunctionalSpec, RateValue, TruncationLevel};
use rootgas_core::gibbs::{
    direct_root_samples, mcmc_complex, mcmc_real_mixture, thinned_statistics, validate_values, Chain, ChainConfig,
    ValidationReport, ABS_PRODUCT, ABS_SUM,
};
use rootgas_core::measures::cells::{height_of_radius, ring_arcs, CellIntegrals, Chordal};
use rootgas_core::measures::transport::bl_surrogate;
use rootgas_core::measures::{EmpiricalMeasure, Grid, GridMeasure, Point};
use rootgas_core::stats::{integrated_autocorrelation, mean};
use rootgas_core::{CoefficientField, Complex64, ModelSpec, PlanePoint, SpherePoint};
use serde::Serialize;

use crate::config::{GridSpec, ModelKind, RunConfig};
use crate::error::CliError;
use crate::output::{write_json, Cell, RunDir, Table};
use crate::record::TaskOutput;

/// Result of a command: produced files, and a failure message when the
/// command's own checks did not pass.
pub struct Outcome {
    pub tasks: Vec<TaskOutput>,
    pub failure: Option<String>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, u128) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_millis())
}

fn task(name: String, files: Vec<std::path::PathBuf>, millis: u128) -> TaskOutput {
    TaskOutput { task: name, files, millis }
}

/// Kernel matrix over `cells`, rows computed in parallel.
pub fn assemble_kernel_parallel(cells: &[rootgas_core::measures::Cell], m: TruncationLevel) -> KernelMatrix {
    let ci = CellIntegrals::<Chordal>::new(cells);
    let rows: Vec<Vec<f64>> = (0..cells.len()).into_par_iter().map(|i| KernelMatrix::lower_row(&ci, i, m)).collect();
    KernelMatrix::from_lower_rows(rows).expect("rows have triangular shape")
}

/// Reference measure for distances, pushed to the sphere: `ν_S` (Kac),
/// Fubini–Study (elliptic) or `ν` (orthogonal).
pub fn sphere_reference(model: &ModelKind) -> GridMeasure<SpherePoint> {
    crate::config::reference_measure(model).pushforward()
}

/// BL surrogate distance between the roots and the reference, on the sphere.
pub fn distance_to_reference(roots: &EmpiricalMeasure<PlanePoint>, reference: &GridMeasure<SpherePoint>) -> f64 {
    bl_surrogate(&roots.pushforward(), reference)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

fn write_roots(path: &std::path::Path, roots: &[PlanePoint], weighted: bool) -> Result<std::path::PathBuf, CliError> {
    let header: &[&str] = if weighted { &["re", "im", "x1", "x2", "x3", "weight"] } else { &["index", "re", "im"] };
    let mut t = Table::create(path, header)?;
    let w = 1.0 / roots.len() as f64;
    for (i, z) in roots.iter().enumerate() {
        if weighted {
            let x = z.to_sphere();
            t.row(&[Cell::F(z.re), Cell::F(z.im), Cell::F(x.x1), Cell::F(x.x2), Cell::F(x.x3), Cell::F(w)])?;
        } else {
            t.row(&[Cell::U(i as u64), Cell::F(z.re), Cell::F(z.im)])?;
        }
    }
    t.finish()
}

/// One `(n, seed)` draw of `sample`.
pub struct SampleResult {
    pub n: usize,
    pub seed: u64,
    pub distance: f64,
    pub files: Vec<std::path::PathBuf>,
    pub millis: u128,
}

pub fn sample_one(spec: &ModelSpec, seed: u64, reference: &GridMeasure<SpherePoint>, dir: &RunDir) -> Result<SampleResult, CliError> {
    let t = Instant::now();
    let n = spec.n;
    let p = sample_coefficients(spec, seed).map_err(CliError::compute)?;
    let roots = find_roots(&p).map_err(CliError::compute)?;
    let stem = format!("n{n}_s{seed}");
    let mut ct = Table::create(&dir.file(&format!("coefficients_{stem}.csv")), &["k", "a_re", "a_im", "c_re", "c_im"])?;
    for (k, a) in p.gaussians().iter().enumerate() {
        let c = p.coefficient(k);
        ct.row(&[Cell::U(k as u64), Cell::F(a.re), Cell::F(a.im), Cell::F(c.re), Cell::F(c.im)])?;
    }
    let files = vec![
        ct.finish()?,
        write_roots(&dir.file(&format!("roots_{stem}.csv")), roots.atoms(), false)?,
        write_roots(&dir.file(&format!("measure_{stem}.csv")), roots.atoms(), true)?,
    ];
    let distance = distance_to_reference(&roots, reference);
    Ok(SampleResult { n, seed, distance, files, millis: t.elapsed().as_millis() })
}

/// Coefficients, roots and empirical measures per `(n, seed)`, plus the
/// distance of each empirical measure to the model's equilibrium.
pub fn cmd_sample(cfg: &RunConfig, dir: &RunDir) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let degrees = cfg.degrees("16,64,256")?;
    let seeds = cfg.u64_or("seeds", 20)?;
    let base = cfg.u64_or("seed", 0)?;
    if seeds == 0 {
        return Err(CliError::Usage("`seeds` must be positive".into()));
    }
    let specs: Vec<ModelSpec> = degrees.iter().map(|&n| model.spec(field, n, None)).collect::<Result<_, _>>()?;
    let reference = sphere_reference(&model);
    let jobs: Vec<(usize, u64)> = (0..specs.len()).flat_map(|i| (0..seeds).map(move |s| (i, base + s))).collect();
    let results: Vec<SampleResult> =
        jobs.par_iter().map(|&(i, seed)| sample_one(&specs[i], seed, &reference, dir)).collect::<Result<_, _>>()?;

    let mut tasks: Vec<TaskOutput> =
        results.iter().map(|r| task(format!("n{}_s{}", r.n, r.seed), r.files.clone(), r.millis)).collect();
    let mut dt = Table::create(&dir.file("distances.csv"), &["n", "seed", "bl_surrogate"])?;
    for r in &results {
        dt.row(&[Cell::U(r.n as u64), Cell::U(r.seed), Cell::F(r.distance)])?;
    }
    let mut st = Table::create(&dir.file("distance_summary.csv"), &["n", "seeds", "median", "min", "max"])?;
    for &n in &degrees {
        let d: Vec<f64> = results.iter().filter(|r| r.n == n).map(|r| r.distance).collect();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        st.row(&[Cell::U(n as u64), Cell::U(d.len() as u64), Cell::F(median(&d)), Cell::F(lo), Cell::F(hi)])?;
    }
    tasks.push(task("distances".into(), vec![dt.finish()?, st.finish()?], 0));
    Ok(Outcome { tasks, failure: None })
}

#[derive(Serialize)]
struct KsEntry {
    statistic: &'static str,
    ks_statistic: f64,
    p_value: f64,
    method: String,
}

#[derive(Serialize)]
struct KFraction {
    k: usize,
    chain: f64,
    direct: f64,
    z: f64,
}

#[derive(Serialize)]
struct GibbsReport {
    n: usize,
    field: &'static str,
    steps: u64,
    burn_in: u64,
    iat_h: f64,
    iat_statistics: f64,
    effective_samples: usize,
    direct_samples: usize,
    alpha: f64,
    nondefault_beta: bool,
    max_cache_drift: f64,
    cache_checks: u64,
    ks: Vec<KsEntry>,
    k_fractions: Vec<KFraction>,
    pass: bool,
}

fn ks_entries(r: &ValidationReport) -> Vec<KsEntry> {
    r.entries
        .iter()
        .map(|e| KsEntry { statistic: e.name, ks_statistic: e.ks.statistic, p_value: e.ks.p_value, method: format!("{:?}", e.ks.method) })
        .collect()
}

/// Per-`k` fractions in the chain and in direct samples, with the z-score
/// of their difference using the chain's integrated autocorrelation.
fn k_fractions(chain: &Chain, direct: &[Vec<Complex64>], n: usize) -> Vec<KFraction> {
    let ks: Vec<usize> = chain.states.iter().map(|s| s.k.unwrap_or(0)).collect();
    let nd = direct.len() as f64;
    (0..=n / 2)
        .map(|k| {
            let ind: Vec<f64> = ks.iter().map(|&v| (v == k) as u8 as f64).collect();
            let p = mean(&ind);
            let tau = integrated_autocorrelation(&ind);
            let q = direct.iter().filter(|z| z.iter().filter(|v| v.im > 1e-9).count() == k).count() as f64 / nd;
            let var = p * (1.0 - p) * tau / ind.len() as f64 + q * (1.0 - q) / nd;
            let z = if var > 0.0 { (p - q) / var.sqrt() } else if p == q { 0.0 } else { f64::INFINITY };
            KFraction { k, chain: p, direct: q, z }
        })
        .collect()
}

/// Chains, traces and histograms per degree, validated against direct
/// root samples by two-sample KS on `|Π z|` and `Σ |z|`.
pub fn cmd_gibbs(cfg: &RunConfig, dir: &RunDir) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let field = cfg.field()?;
    let degrees = cfg.degrees("2")?;
    let steps = cfg.u64_or("steps", 100_000)?;
    let seed = cfg.u64_or("seed", 0)?;
    let every = cfg.u64_or("record_every", 1)?;
    let direct_count = cfg.usize_or("direct", 10_000)?;
    let alpha = cfg.f64_or("alpha", 0.01)?;
    let beta = cfg.optional_f64("beta")?;
    if steps < 10 || every == 0 || direct_count == 0 {
        return Err(CliError::Usage("need steps ≥ 10, record_every ≥ 1 and direct ≥ 1".into()));
    }
    let mut tasks = Vec::new();
    let mut failures = Vec::new();
    for (idx, &n) in degrees.iter().enumerate() {
        let t = Instant::now();
        let spec = model.spec(field, n, beta)?;
        let mut chain_cfg = ChainConfig::new(steps, seed).stream(idx as u64).record_every(every);
        chain_cfg.burn_in = cfg.optional_u64("burn_in")?;
        let chain = match field {
            CoefficientField::ComplexGaussian => mcmc_complex(&spec, &chain_cfg),
            CoefficientField::RealGaussian => mcmc_real_mixture(&spec, &chain_cfg),
        }
        .map_err(CliError::compute)?;
        let d = &chain.diagnostics;
        let mut files = Vec::new();

        let mut ht = Table::create(&dir.file(&format!("h_trace_n{n}.csv")), &["step", "hamiltonian"])?;
        for (i, h) in chain.h_trace.iter().enumerate() {
            ht.row(&[Cell::U(d.burn_in + i as u64), Cell::F(*h)])?;
        }
        files.push(ht.finish()?);
        let mut stt = Table::create(&dir.file(&format!("states_n{n}.csv")), &["record", "step", "k", "particle", "re", "im"])?;
        for (r, s) in chain.states.iter().enumerate() {
            let k = s.k.map(|k| k.to_string()).unwrap_or_default();
            for (j, z) in s.particles.iter().enumerate() {
                stt.row(&[Cell::U(r as u64), Cell::U(s.step), Cell::S(&k), Cell::U(j as u64), Cell::F(z.re), Cell::F(z.im)])?;
            }
        }
        files.push(stt.finish()?);
        let mut mt = Table::create(&dir.file(&format!("moves_n{n}.csv")), &["move", "proposed", "accepted", "rate", "scale"])?;
        for m in &d.moves {
            let scale = d.scales.iter().find(|(k, _)| *k == m.kind).map(|s| s.1).unwrap_or(f64::NAN);
            mt.row(&[Cell::S(m.kind.name()), Cell::U(m.proposed), Cell::U(m.accepted), Cell::F(m.rate()), Cell::F(scale)])?;
        }
        files.push(mt.finish()?);
        if let Some(hist) = &d.k_histogram {
            let total: u64 = hist.iter().sum();
            let mut kt = Table::create(&dir.file(&format!("k_histogram_n{n}.csv")), &["k", "count", "fraction"])?;
            for (k, &c) in hist.iter().enumerate() {
                kt.row(&[Cell::U(k as u64), Cell::U(c), Cell::F(c as f64 / total as f64)])?;
            }
            files.push(kt.finish()?);
        }

        let stats = [ABS_PRODUCT, ABS_SUM];
        let (mc, tau) = thinned_statistics(&chain.states, &stats);
        let mut report = GibbsReport {
            n,
            field: if field == CoefficientField::RealGaussian { "real" } else { "complex" },
            steps,
            burn_in: d.burn_in,
            iat_h: d.iat_h,
            iat_statistics: tau,
            effective_samples: mc[0].len(),
            direct_samples: direct_count,
            alpha,
            nondefault_beta: d.nondefault_beta,
            max_cache_drift: d.max_cache_drift,
            cache_checks: d.cache_checks,
            ks: Vec::new(),
            k_fractions: Vec::new(),
            pass: true,
        };
        // Away from β_n = n² the gas is not the root law; nothing to compare.
        if !d.nondefault_beta {
            let direct = direct_root_samples(&spec, direct_count, seed.wrapping_add(1_000_003)).map_err(CliError::compute)?;
            let xs: Vec<Vec<f64>> = stats.iter().map(|s| direct.iter().map(|z| (s.eval)(z)).collect()).collect();
            let v = validate_values(&xs, &mc, &stats, seed).map_err(CliError::compute)?;
            report.ks = ks_entries(&v);
            report.pass = v.passes(alpha);
            if field == CoefficientField::RealGaussian {
                report.k_fractions = k_fractions(&chain, &direct, n);
            }
            let mut kst = Table::create(&dir.file(&format!("ks_n{n}.csv")), &["statistic", "ks", "p_value"])?;
            for e in &report.ks {
                kst.row(&[Cell::S(e.statistic), Cell::F(e.ks_statistic), Cell::F(e.p_value)])?;
            }
            files.push(kst.finish()?);
        }
        if !report.pass {
            failures.push(format!("n={n}: KS p-value {:.3e} ≤ {alpha}", report.ks.iter().map(|e| e.p_value).fold(1.0, f64::min)));
        }
        files.push(write_json(&dir.file(&format!("report_n{n}.json")), &report)?);
        tasks.push(task(format!("n{n}"), files, t.elapsed().as_millis()));
    }
    Ok(Outcome { tasks, failure: (!failures.is_empty()).then(|| failures.join("; ")) })
}

/// Uniform measure on the circle `|z| = r`, `m` arcs.
pub fn circle_of_radius(r: f64, m: usize) -> GridMeasure<PlanePoint> {
    let cells = ring_arcs(height_of_radius(r), m);
    let points = (0..m).map(|j| Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / m as f64)).collect();
    GridMeasure::uniform(Arc::new(Grid::new(points, cells).expect("ring grid is valid")))
}

fn rate_row(t: &mut Table, family: &str, parameter: f64, v: &RateValue) -> Result<(), CliError> {
    t.row(&[
        Cell::S(family),
        Cell::F(parameter),
        Cell::F(v.value),
        Cell::F(v.energy),
        Cell::F(v.j),
        Cell::F(v.planar.unwrap_or(f64::NAN)),
    ])
}

/// Rate values at the model's reference measure on the configured grid and
/// along the family of uniform circle measures of radius `r`.
pub fn cmd_rate(cfg: &RunConfig, dir: &RunDir) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let model = cfg.model()?;
    let field = cfg.field()?;
    let spec = model.rate_spec(field)?;
    let m = cfg.truncation()?;
    let radii = cfg.f64_list("radii", "0.25,0.5,1,2,4")?;
    if radii.iter().any(|&r| r <= 0.0) {
        return Err(CliError::Usage("radii must be positive".into()));
    }
    let mut t = Table::create(&dir.file("rate.csv"), &["family", "parameter", "value", "energy", "j", "planar"])?;
    // The orthogonal model has no known minimizer, and `ν` itself sits on the
    // sup domain `K`, where `J` is the `-inf` sentinel; use the default grid.
    let grid = match (cfg.get("grid"), &model) {
        (Some(g), _) => Some(GridSpec::parse(g)?),
        (None, ModelKind::Orthogonal(_)) => Some(model.default_grid()),
        (None, _) => None,
    };
    let reference = match grid {
        None => rate_function(&crate::config::reference_measure(&model), &spec, m),
        Some(g) => match (g.plane(), g.sphere()) {
            (Some(pg), _) => rate_function(&GridMeasure::uniform_area(Arc::new(pg)), &spec, m),
            (_, Some(sg)) => rate_function_sphere(&GridMeasure::uniform_area(Arc::new(sg)), &spec, m),
            _ => unreachable!("every grid has a space"),
        },
    };
    rate_row(&mut t, "reference", 0.0, &reference)?;
    for &r in &radii {
        rate_row(&mut t, "circle_radius", r, &rate_function(&circle_of_radius(r, 256), &spec, m))?;
    }
    let files = vec![t.finish()?];
    Ok(Outcome { tasks: vec![task("rate".into(), files, t0.elapsed().as_millis())], failure: None })
}

#[derive(Serialize)]
struct EquilibriumSummary {
    model: &'static str,
    grid: String,
    grid_points: usize,
    domain_cells: usize,
    truncation: f64,
    symmetric: bool,
    value: f64,
    discrete_value: f64,
    lower_bound: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
    mesh: f64,
    kernel_millis: u128,
    solve_millis: u128,
}

fn equilibrium_on<P: SphereView>(
    spec: &RateFunctionalSpec,
    grid: Grid<P>,
    cfg: &RunConfig,
    model: &ModelKind,
    gspec: GridSpec,
    dir: &RunDir,
) -> Result<Outcome, CliError> {
    let m = cfg.truncation()?;
    let symmetric = cfg.bool_or("symmetric", spec.is_real())?;
    let ocfg = OptimizerConfig::new(Arc::new(grid))
        .truncation(m)
        .max_iterations(cfg.usize_or("max_iterations", 200_000)?)
        .tolerance(cfg.f64_or("tolerance", 1e-7)?)
        .symmetric(symmetric);
    let problem = discrete_problem(spec, ocfg.grid.cells()).map_err(CliError::compute)?;
    let (kernel, kernel_millis) = timed(|| assemble_kernel_parallel(&problem.cells(ocfg.grid.cells()), m));
    let (res, solve_millis) = timed(|| minimize_rate_with_kernel(spec, &ocfg, &problem, &kernel));
    let res = res.map_err(|e| match e {
        rootgas_core::equilibrium::EquilibriumError::InvalidConfig(msg) => CliError::Usage(msg.into()),
        other => CliError::compute(other),
    })?;
    let mut mt = Table::create(&dir.file("minimizer.csv"), &["index", "x1", "x2", "x3", "re", "im", "weight"])?;
    for (i, (p, &w)) in res.measure.points().iter().zip(res.measure.weights()).enumerate() {
        let x = p.to_sphere();
        let z = rootgas_core::geometry::unproject(x).unwrap_or(Complex64::new(f64::INFINITY, f64::INFINITY));
        mt.row(&[Cell::U(i as u64), Cell::F(x.x1), Cell::F(x.x2), Cell::F(x.x3), Cell::F(z.re), Cell::F(z.im), Cell::F(w)])?;
    }
    let mut tt = Table::create(&dir.file("trace.csv"), &["iteration", "objective"])?;
    for (i, v) in res.trace.iter().enumerate() {
        tt.row(&[Cell::U(i as u64), Cell::F(*v)])?;
    }
    let summary = EquilibriumSummary {
        model: model.name(),
        grid: gspec.to_string(),
        grid_points: ocfg.grid.len(),
        domain_cells: problem.domain.len(),
        truncation: m.value(),
        symmetric,
        value: res.value,
        discrete_value: res.discrete_value,
        lower_bound: res.lower_bound,
        gap: res.gap,
        iterations: res.iterations,
        converged: res.converged,
        mesh: res.mesh,
        kernel_millis,
        solve_millis,
    };
    let files = vec![mt.finish()?, tt.finish()?, write_json(&dir.file("summary.json"), &summary)?];
    let failure = (!res.converged).then(|| format!("gap {:.3e} above tolerance after {} iterations", res.gap, res.iterations));
    Ok(Outcome { tasks: vec![task("equilibrium".into(), files, kernel_millis + solve_millis)], failure })
}

/// Minimizer of the truncated rate function on a grid.
pub fn cmd_equilibrium(cfg: &RunConfig, dir: &RunDir) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let spec = model.rate_spec(cfg.field()?)?;
    let g = cfg.grid(&model)?;
    match (g.plane(), g.sphere()) {
        (Some(pg), _) => equilibrium_on(&spec, pg, cfg, &model, g, dir),
        (_, Some(sg)) => equilibrium_on(&spec, sg, cfg, &model, g, dir),
        _ => unreachable!("every grid has a space"),
    }
}
