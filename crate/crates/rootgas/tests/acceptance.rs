//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.
//! `ROOTGAS_CRITERIA=1,5,9` restricts the run.

use std::process::ExitCode;

use rootgas::acceptance::run_suite;

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::var("ROOTGAS_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    println!("running acceptance criteria");
    let results = run_suite(&only, |r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
