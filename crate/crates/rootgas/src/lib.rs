//! Command-line laboratory over `rootgas-core`: configuration, run records,
//! CSV emission, the subcommand drivers and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod record;

use std::path::Path;

use commands::Outcome;
use config::RunConfig;
use error::CliError;
use output::{write_json, Cell, RunDir, Table};
use record::{RunRecord, TaskOutput};

/// The five subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Gibbs,
    Rate,
    Equilibrium,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Gibbs => "gibbs",
            Command::Rate => "rate",
            Command::Equilibrium => "equilibrium",
            Command::Validate => "validate",
        }
    }
}

/// Runs the acceptance suite, printing one line per criterion.
fn cmd_validate(cfg: &RunConfig, dir: &RunDir) -> Result<Outcome, CliError> {
    let only = cfg.usize_list("criteria", "")?;
    if let Some(bad) = only.iter().find(|&&i| !(1..=acceptance::CRITERIA.len()).contains(&i)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    let results = acceptance::run_suite(&only, |r| println!("{}", r.line()));
    let mut t = Table::create(&dir.file("acceptance.csv"), &["criterion", "name", "pass", "seconds", "budget_seconds", "detail"])?;
    for r in &results {
        t.row(&[
            Cell::U(r.id as u64),
            Cell::S(r.name),
            Cell::S(if r.pass { "true" } else { "false" }),
            Cell::F(r.seconds),
            Cell::F(r.budget_seconds),
            Cell::S(&r.detail),
        ])?;
    }
    let files = vec![t.finish()?, write_json(&dir.file("acceptance.json"), &results)?];
    let millis = (results.iter().map(|r| r.seconds).sum::<f64>() * 1e3) as u128;
    let failed: Vec<String> = results.iter().filter(|r| !r.pass).map(|r| r.id.to_string()).collect();
    Ok(Outcome {
        tasks: vec![TaskOutput { task: "acceptance".into(), files, millis }],
        failure: (!failed.is_empty()).then(|| format!("criteria {} failed", failed.join(", "))),
    })
}

/// Creates the run directory, runs the command and commits its record.
/// Returns the record, or the error that ended the run; records are
/// committed for failed checks as well as for successes.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<RunRecord, CliError> {
    let root = cfg.out_root();
    let dir = RunDir::create(&root, command.name(), &cfg.hash(command.name()))?;
    let mut record = RunRecord::new(command.name(), cfg, &dir);
    let outcome = match command {
        Command::Sample => commands::cmd_sample(cfg, &dir),
        Command::Gibbs => commands::cmd_gibbs(cfg, &dir),
        Command::Rate => commands::cmd_rate(cfg, &dir),
        Command::Equilibrium => commands::cmd_equilibrium(cfg, &dir),
        Command::Validate => cmd_validate(cfg, &dir),
    };
    match outcome {
        Ok(Outcome { tasks, failure: None }) => {
            record.tasks = tasks;
            record.commit(&dir, "ok")
        }
        Ok(Outcome { tasks, failure: Some(msg) }) => {
            record.tasks = tasks;
            record.commit(&dir, "failed")?;
            Err(CliError::Validation(msg))
        }
        Err(e) => {
            // The original error matters more than a failure to record it.
            let _ = record.commit(&dir, "error");
            Err(e)
        }
    }
}

/// Loads the config file (if any) and applies `key=value` overrides.
pub fn load_config<'a>(file: Option<&Path>, overrides: impl IntoIterator<Item = &'a str>) -> Result<RunConfig, CliError> {
    let mut cfg = match file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(overrides)?;
    Ok(cfg)
}
