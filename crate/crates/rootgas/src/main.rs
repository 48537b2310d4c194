use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rootgas::{execute, load_config, Command};

/// Laboratory for zeros of random polynomials and their Coulomb gases.
///
/// Each run writes into `<out>/<command>-<config hash>/<timestamp>/` and
/// appends its record to `<out>/<command>-<config hash>/records.jsonl`.
/// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 IO error.
#[derive(Parser)]
#[command(name = "rootgas", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample coefficients and roots; tabulate distances to equilibrium.
    Sample(Common),
    /// Run Metropolis or reversible-jump chains and validate them.
    Gibbs(Common),
    /// Evaluate rate functions along measure families.
    Rate(Common),
    /// Minimize the rate function on a grid.
    Equilibrium(Common),
    /// Run the acceptance suite.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output root (overrides `out` and ROOTGAS_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `kac`, `elliptic` or `orthogonal`.
    #[arg(long)]
    model: Option<String>,
    /// `complex` or `real`.
    #[arg(long)]
    field: Option<String>,
    /// Comma-separated degrees.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    grid: Option<String>,
    /// Any config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut v: Vec<String> = self.set.clone();
        let named = [
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("model", self.model.clone()),
            ("field", self.field.clone()),
            ("n", self.n.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("seeds", self.seeds.map(|s| s.to_string())),
            ("steps", self.steps.map(|s| s.to_string())),
            ("grid", self.grid.clone()),
        ];
        v.extend(named.into_iter().filter_map(|(k, val)| val.map(|x| format!("{k}={x}"))));
        v
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = match &cli.command {
        Sub::Sample(c) => (Command::Sample, c),
        Sub::Gibbs(c) => (Command::Gibbs, c),
        Sub::Rate(c) => (Command::Rate, c),
        Sub::Equilibrium(c) => (Command::Equilibrium, c),
        Sub::Validate(c) => (Command::Validate, c),
    };
    let overrides = common.overrides();
    let result = load_config(common.config.as_deref(), overrides.iter().map(String::as_str)).and_then(|cfg| execute(command, &cfg));
    match result {
        Ok(record) => {
            println!("{}", serde_json::json!({"status": "ok", "data_dir": record.data_dir, "config_hash": record.config_hash}));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.report()).expect("serializable report"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
