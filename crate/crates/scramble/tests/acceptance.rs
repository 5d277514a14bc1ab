//! Runs every acceptance criterion and prints one PASS/FAIL line for each,
//! followed by the individual checks. Exits non-zero if any criterion fails.
//!
//! `SCRAMBLE_ONLY=2,5` restricts the run to the listed criteria.

use std::process::ExitCode;

use scramble::verify;

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::var("SCRAMBLE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    let reports = verify::run_selected(&only, |r| println!("{}", r.render()));
    println!();
    for r in &reports {
        println!("{}", r.headline());
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", reports.len() - failed.len(), reports.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
