//! Runs every acceptance criterion and prints one PASS/FAIL line per
//! criterion, followed by its clauses. Exits nonzero if any criterion fails.

use std::panic;
use std::process::ExitCode;

use holo_suite::CRITERIA;

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    println!("running {} acceptance criteria", CRITERIA.len());
    for (n, name, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        match panic::catch_unwind(run) {
            Ok(out) => {
                let verdict = if out.pass() { "PASS" } else { "FAIL" };
                println!("criterion {n} ({name}): {verdict} [{:.1} s]", out.seconds);
                for c in &out.clauses {
                    println!("    {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
                if !out.pass() {
                    failed.push(n);
                }
            }
            Err(_) => {
                println!("criterion {n} ({name}): FAIL (panicked)");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
