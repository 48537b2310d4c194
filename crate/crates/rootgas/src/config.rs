//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Later assignments win, and command-line overrides are applied
//! after the file. Unknown keys are rejected so typos fail loudly.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `model` | `kac`, `elliptic` or `orthogonal` | `kac` |
//! | `field` | `complex` or `real` coefficients | `complex` |
//! | `support` | CSV `re,im,nu_weight,phi` defining the orthogonal model | none |
//! | `n` | comma-separated degrees | per command |
//! | `beta` | speed `β_n` (gibbs only) | `n²` |
//! | `seeds` | number of seeds per degree | per command |
//! | `seed` | base seed | `0` |
//! | `steps` | chain length | `100000` |
//! | `burn_in` | burn-in steps | `steps/5` |
//! | `record_every` | chain recording stride | `1` |
//! | `direct` | direct root samples for gibbs validation | `10000` |
//! | `alpha` | KS significance level for gibbs validation | `0.01` |
//! | `grid` | `circle:M`, `equator:M`, `sphere:TxP` or `fs:TxP` | per model |
//! | `truncation` | kernel truncation `M` | `30` |
//! | `radii` | radii of the circle family in `rate` | `0.25,0.5,1,2,4` |
//! | `max_iterations` | Frank–Wolfe iteration cap | `200000` |
//! | `tolerance` | Frank–Wolfe gap tolerance | `1e-7` |
//! | `symmetric` | restrict the minimizer to conjugation orbits | `false` |
//! | `criteria` | acceptance criteria to run, e.g. `1,5,9` | all |
//! | `label` | free-form tag, part of the config hash | none |
//! | `out` | output root | `$ROOTGAS_OUT` or `runs` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rootgas_core::ensembles::OrthogonalData;
use rootgas_core::functionals::{RateFunctionalSpec, TruncationLevel};
use rootgas_core::measures::{Grid, GridMeasure};
use rootgas_core::{Basis, CoefficientField, Complex64, ModelSpec, PlanePoint, SpherePoint};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ROOTGAS_OUT";

pub const KEYS: [&str; 21] = [
    "model",
    "field",
    "support",
    "n",
    "beta",
    "seeds",
    "seed",
    "steps",
    "burn_in",
    "record_every",
    "direct",
    "alpha",
    "grid",
    "truncation",
    "radii",
    "max_iterations",
    "tolerance",
    "symmetric",
    "criteria",
    "out",
    "label",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(usage(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<(), CliError> {
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| usage(format!("override `{p}` is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Sorted `key=value` lines for the given command, excluding `out`
    /// (where results go does not change what they are).
    pub fn canonical_text(&self, command: &str) -> String {
        let mut s = format!("command={command}\n");
        for (k, v) in self.values.iter().filter(|(k, _)| k.as_str() != "out") {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    /// SHA-256 of [`Self::canonical_text`], hex encoded.
    pub fn hash(&self, command: &str) -> String {
        hex::encode(Sha256::digest(self.canonical_text(command).as_bytes()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| usage(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.parsed(key, default)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        self.parsed(key, default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v: f64 = self.parsed(key, default)?;
        if !v.is_finite() {
            return Err(usage(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(usage(format!("`{key}`: expected true or false, got `{v}`"))),
        }
    }

    pub fn optional_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key).map(|v| v.parse().map_err(|_| usage(format!("`{key}`: cannot parse `{v}`")))).transpose()
    }

    pub fn optional_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(|_| self.f64_or(key, 0.0)).transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>, CliError> {
        let raw = self.get(key).unwrap_or(default);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| usage(format!("`{key}`: cannot parse `{s}`"))))
            .collect()
    }

    /// Degree list; must be nonempty with positive entries.
    pub fn degrees(&self, default: &str) -> Result<Vec<usize>, CliError> {
        let n: Vec<usize> = self.list("n", default)?;
        if n.is_empty() {
            return Err(usage("`n` list is empty"));
        }
        if n.contains(&0) {
            return Err(usage("degrees must be positive"));
        }
        Ok(n)
    }

    pub fn f64_list(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let v: Vec<f64> = self.list(key, default)?;
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(usage(format!("`{key}` must be a nonempty list of finite numbers")));
        }
        Ok(v)
    }

    pub fn usize_list(&self, key: &str, default: &str) -> Result<Vec<usize>, CliError> {
        self.list(key, default)
    }

    pub fn model(&self) -> Result<ModelKind, CliError> {
        match self.get("model").unwrap_or("kac") {
            "kac" => Ok(ModelKind::Kac),
            "elliptic" => Ok(ModelKind::Elliptic),
            "orthogonal" => {
                let path = self.get("support").ok_or_else(|| usage("orthogonal model needs `support`"))?;
                Ok(ModelKind::Orthogonal(Arc::new(load_support(Path::new(path))?)))
            }
            other => Err(usage(format!("unknown model `{other}`"))),
        }
    }

    pub fn field(&self) -> Result<CoefficientField, CliError> {
        match self.get("field").unwrap_or("complex") {
            "complex" => Ok(CoefficientField::ComplexGaussian),
            "real" => Ok(CoefficientField::RealGaussian),
            other => Err(usage(format!("unknown field `{other}`"))),
        }
    }

    pub fn truncation(&self) -> Result<TruncationLevel, CliError> {
        TruncationLevel::new(self.f64_or("truncation", rootgas_core::functionals::DEFAULT_TRUNCATION)?)
            .map_err(|e| usage(e.to_string()))
    }

    pub fn grid(&self, model: &ModelKind) -> Result<GridSpec, CliError> {
        match self.get("grid") {
            Some(g) => GridSpec::parse(g),
            None => Ok(model.default_grid()),
        }
    }

    /// Output root: `out`, else `$ROOTGAS_OUT`, else `runs`.
    pub fn out_root(&self) -> PathBuf {
        if let Some(o) = self.get("out") {
            return PathBuf::from(o);
        }
        std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
    }
}

/// Ensemble selector; the orthogonal data is loaded once.
#[derive(Clone, Debug)]
pub enum ModelKind {
    Kac,
    Elliptic,
    Orthogonal(Arc<OrthogonalData>),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Kac => "kac",
            ModelKind::Elliptic => "elliptic",
            ModelKind::Orthogonal(_) => "orthogonal",
        }
    }

    pub fn basis(&self) -> Basis {
        match self {
            ModelKind::Kac => Basis::Kac,
            ModelKind::Elliptic => Basis::Elliptic,
            ModelKind::Orthogonal(d) => Basis::Orthogonal(d.clone()),
        }
    }

    pub fn spec(&self, field: CoefficientField, n: usize, beta: Option<f64>) -> Result<ModelSpec, CliError> {
        let r = match beta {
            Some(b) => ModelSpec::with_beta(self.basis(), field, n, b),
            None => ModelSpec::new(self.basis(), field, n),
        };
        r.map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn rate_spec(&self, field: CoefficientField) -> Result<RateFunctionalSpec, CliError> {
        let s = match self {
            ModelKind::Kac => RateFunctionalSpec::kac(4096).map_err(|e| usage(e.to_string()))?,
            ModelKind::Elliptic => RateFunctionalSpec::elliptic(),
            ModelKind::Orthogonal(d) => RateFunctionalSpec::orthogonal(d).map_err(|e| usage(e.to_string()))?,
        };
        Ok(if field == CoefficientField::RealGaussian { s.real() } else { s })
    }

    pub fn default_grid(&self) -> GridSpec {
        match self {
            ModelKind::Kac => GridSpec::Equator(256),
            _ => GridSpec::Sphere(40, 50),
        }
    }
}

/// Grid selector for rate and equilibrium computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridSpec {
    /// Arcs of the unit circle, plane coordinates.
    Circle(usize),
    /// Arcs of the equator, sphere coordinates.
    Equator(usize),
    /// Gauss–Legendre × longitude patches, sphere coordinates.
    Sphere(usize, usize),
    /// The same patches in plane coordinates.
    FubiniStudy(usize, usize),
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || usage(format!("bad grid `{s}`; expected circle:M, equator:M, sphere:TxP or fs:TxP"));
        let (kind, size) = s.split_once(':').ok_or_else(bad)?;
        let one = || size.parse::<usize>().ok().filter(|&m| m >= 2).ok_or_else(bad);
        let two = || {
            let (a, b) = size.split_once('x').ok_or_else(bad)?;
            match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) if a >= 1 && b >= 1 => Ok((a, b)),
                _ => Err(bad()),
            }
        };
        match kind {
            "circle" => Ok(GridSpec::Circle(one()?)),
            "equator" => Ok(GridSpec::Equator(one()?)),
            "sphere" => two().map(|(a, b)| GridSpec::Sphere(a, b)),
            "fs" => two().map(|(a, b)| GridSpec::FubiniStudy(a, b)),
            _ => Err(bad()),
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, GridSpec::Equator(_) | GridSpec::Sphere(..))
    }

    pub fn plane(&self) -> Option<Grid<PlanePoint>> {
        match *self {
            GridSpec::Circle(m) => Some(Grid::circle_arcs(m)),
            GridSpec::FubiniStudy(a, b) => Some(Grid::fubini_study(a, b)),
            _ => None,
        }
    }

    pub fn sphere(&self) -> Option<Grid<SpherePoint>> {
        match *self {
            GridSpec::Equator(m) => Some(Grid::equator_arcs(m)),
            GridSpec::Sphere(a, b) => Some(Grid::sphere_product(a, b)),
            _ => None,
        }
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridSpec::Circle(m) => write!(f, "circle:{m}"),
            GridSpec::Equator(m) => write!(f, "equator:{m}"),
            GridSpec::Sphere(a, b) => write!(f, "sphere:{a}x{b}"),
            GridSpec::FubiniStudy(a, b) => write!(f, "fs:{a}x{b}"),
        }
    }
}

/// Reference measure of a model on a plane grid: `ν_S` for Kac, Fubini–Study
/// for elliptic, `ν` itself for orthogonal.
pub fn reference_measure(model: &ModelKind) -> GridMeasure<PlanePoint> {
    match model {
        ModelKind::Kac => rootgas_core::measures::circle_uniform(4096),
        ModelKind::Elliptic => rootgas_core::measures::fubini_study(40, 50),
        ModelKind::Orthogonal(d) => {
            let grid = Arc::new(Grid::atoms(d.support.clone()).expect("validated support"));
            GridMeasure::normalized(grid, d.nu.clone()).expect("validated weights")
        }
    }
}

/// Reads `re,im,nu_weight,phi` rows (with header) for the orthogonal model.
pub fn load_support(path: &Path) -> Result<OrthogonalData, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let (mut pts, mut nu, mut phi) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| usage(format!("{}: row {:?} needs four numbers re,im,nu_weight,phi", path.display(), rec)))
        };
        pts.push(Complex64::new(field(0)?, field(1)?));
        nu.push(field(2)?);
        phi.push(field(3)?);
    }
    OrthogonalData::new(pts, nu, phi).map_err(|e| usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = RunConfig::parse("# comment\nmodel = elliptic\n\nn = 4, 8\nn=16\n").unwrap();
        assert_eq!(c.degrees("1").unwrap(), vec![16]);
        c.apply_overrides(["n=2,3", "seed=7"]).unwrap();
        assert_eq!(c.degrees("1").unwrap(), vec![2, 3]);
        assert_eq!(c.u64_or("seed", 0).unwrap(), 7);
        assert!(matches!(c.model().unwrap(), ModelKind::Elliptic));
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
        c.apply_overrides(["n="]).unwrap();
        assert!(c.degrees("1").is_err());
    }

    #[test]
    fn empty_degree_list_is_rejected() {
        let c = RunConfig::parse("n = ,").unwrap();
        assert!(c.degrees("4").is_err());
        assert!(RunConfig::parse("n = 0").unwrap().degrees("4").is_err());
    }

    #[test]
    fn hash_ignores_order_whitespace_and_output() {
        let a = RunConfig::parse("model=kac\nn=4\nout=/tmp/a").unwrap();
        let b = RunConfig::parse("  n = 4\nmodel =kac\nout=/tmp/b").unwrap();
        assert_eq!(a.hash("sample"), b.hash("sample"));
        assert_ne!(a.hash("sample"), a.hash("gibbs"));
        let c = RunConfig::parse("model=kac\nn=5").unwrap();
        assert_ne!(a.hash("sample"), c.hash("sample"));
        assert_eq!(a.hash("sample").len(), 64);
    }

    proptest::proptest! {
        #[test]
        fn hash_is_invariant_under_line_order(
            vals in proptest::collection::vec(0u32..1000, 1..6),
            rot in 0usize..6,
        ) {
            let keys = ["n", "seed", "seeds", "steps", "truncation", "direct"];
            let mut lines: Vec<String> = vals.iter().zip(keys).map(|(v, k)| format!("{k} = {v}")).collect();
            let a = RunConfig::parse(&lines.join("\n")).unwrap();
            let r = rot % lines.len();
            lines.rotate_left(r);
            let b = RunConfig::parse(&format!("# shuffled\n{}", lines.join("\n\n"))).unwrap();
            proptest::prop_assert_eq!(a.hash("sample"), b.hash("sample"));
        }
    }

    #[test]
    fn grid_specs() {
        assert_eq!(GridSpec::parse("sphere:40x50").unwrap(), GridSpec::Sphere(40, 50));
        assert_eq!(GridSpec::parse("circle:64").unwrap().to_string(), "circle:64");
        for bad in ["sphere:40", "circle:x", "disk:4", "fs:0x3", "circle:1"] {
            assert!(GridSpec::parse(bad).is_err(), "{bad}");
        }
    }
}
