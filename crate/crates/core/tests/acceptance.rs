//! Runs every acceptance criterion with its fixed seeds and prints one line
//! per criterion. Criteria run one after another so that their runtime
//! budgets are measured without competing test threads. The process exits
//! non-zero if any criterion fails or overruns its budget.

use std::process::ExitCode;

use fqdist::experiments::acceptance::{criteria, run_criterion};

fn main() -> ExitCode {
    println!("\nrunning acceptance criteria");
    let mut failed = Vec::new();
    for criterion in criteria() {
        let outcome = run_criterion(&criterion);
        println!("{}", outcome.line());
        if !outcome.accepted() {
            failed.push(outcome.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed\n", criteria().len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}\n");
        ExitCode::FAILURE
    }
}
