//! CSV emission and run directories.
//!
//! Floats are written as `{:.16e}`: 17 significant digits in scientific
//! notation, independent of locale, so outputs round-trip exactly and are
//! byte-identical across runs with the same configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

/// Fixed float formatting; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Labeled-column CSV writer bound to one file.
pub struct Table {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

/// A CSV cell.
pub enum Cell<'a> {
    F(f64),
    U(u64),
    S(&'a str),
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let mut w = csv::WriterBuilder::new().from_path(path).map_err(|e| CliError::csv(path, e))?;
        w.write_record(header).map_err(|e| CliError::csv(path, e))?;
        Ok(Self { path: path.to_path_buf(), w })
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) -> Result<(), CliError> {
        let rec: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(*x),
                Cell::U(u) => u.to_string(),
                Cell::S(s) => (*s).to_string(),
            })
            .collect();
        self.w.write_record(&rec).map_err(|e| CliError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn unix_millis() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Where one invocation writes.
#[derive(Clone, Debug)]
pub struct RunDir {
    /// `<root>/<command>-<hash prefix>`, shared by runs of the same config.
    pub config_dir: PathBuf,
    /// Fresh timestamped subdirectory holding this run's data.
    pub data_dir: PathBuf,
    pub started_ms: u128,
}

impl RunDir {
    /// Creates the config directory and a new timestamped data directory;
    /// an existing directory is never reused.
    pub fn create(root: &Path, command: &str, hash: &str) -> Result<Self, CliError> {
        let config_dir = root.join(format!("{command}-{}", &hash[..12]));
        fs::create_dir_all(&config_dir).map_err(|e| CliError::io(&config_dir, e))?;
        let started_ms = unix_millis();
        for attempt in 0u32.. {
            let name = if attempt == 0 { format!("{started_ms}") } else { format!("{started_ms}-{attempt}") };
            let data_dir = config_dir.join(name);
            match fs::create_dir(&data_dir) {
                Ok(()) => return Ok(Self { config_dir, data_dir, started_ms }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(CliError::io(&data_dir, e)),
            }
        }
        unreachable!("attempt counter is unbounded")
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.data_dir.join(name)
    }
}

/// Appends one JSON line; the only writer of `records.jsonl`.
pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
    let line = serde_json::to_string(value).expect("serializable record");
    writeln!(f, "{line}").map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, f64::MIN_POSITIVE, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    proptest::proptest! {
        #[test]
        fn any_finite_float_round_trips(bits in proptest::prelude::any::<u64>()) {
            let x = f64::from_bits(bits);
            proptest::prop_assume!(x.is_finite());
            let s = fmt_f64(x);
            proptest::prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            proptest::prop_assert!(!s.contains(','));
        }
    }

    #[test]
    fn run_dirs_never_collide() {
        let root = tempfile::tempdir().unwrap();
        let h = "0123456789abcdef";
        let a = RunDir::create(root.path(), "sample", h).unwrap();
        let b = RunDir::create(root.path(), "sample", h).unwrap();
        assert_eq!(a.config_dir, b.config_dir);
        assert_ne!(a.data_dir, b.data_dir);
    }
}
