//! Runs the full acceptance suite and prints one line per check.

use std::process::ExitCode;
use std::time::Instant;

use renormlab_lab::{acceptance_suite_with, run_check, AcceptanceOptions};

fn main() -> ExitCode {
    let start = Instant::now();
    let report = match acceptance_suite_with(&AcceptanceOptions::default(), "per-check grids") {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance suite errored: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("\nrunning {} acceptance checks", report.checks.len());
    for c in &report.checks {
        println!("{}", c.line());
    }
    let mut ok = report.checks.len() == 15 && report.all_passed();

    let flipped = AcceptanceOptions { flip_g_term: Some("G_div_b".into()), ..AcceptanceOptions::default() };
    match run_check(12, &flipped) {
        Ok(c) => {
            let caught = !c.passed;
            println!("[{}] flipped G_div_b makes check 12 fail: {}", if caught { "PASS" } else { "FAIL" }, c.detail);
            ok &= caught;
        }
        Err(e) => {
            println!("[FAIL] flipped G_div_b run errored: {e}");
            ok = false;
        }
    }
    let failed: Vec<&str> = report.failed().iter().map(|c| c.name.as_str()).collect();
    println!(
        "acceptance result: {}. {} of 15 checks passed; finished in {:.1}s\n",
        if ok { "ok" } else { "FAILED" },
        15 - failed.len(),
        start.elapsed().as_secs_f64()
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
