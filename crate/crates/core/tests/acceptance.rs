//! Acceptance criteria. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each (plus the failing checks), and exits non-zero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nport_core::verify::run_suite;

const CRITERIA: &[(u32, &str, &str)] = &[
    (1, "single-photon fringe", "fringe"),
    (2, "two-photon wavelength halving", "halving"),
    (3, "Fock coincidence patterns N=2..6", "patterns"),
    (4, "excess-photon patterns", "excess"),
    (5, "photon-number superposition", "superposition"),
    (6, "NOON family", "noon"),
    (7, "Fock minimum phase spread", "fock-noise"),
    (8, "shot-noise floor", "shot-noise"),
    (9, "loss factorization", "loss"),
    (10, "threshold detectors", "threshold"),
    (11, "moment convention cross-check", "conventions"),
    (12, "Monte Carlo oracle", "sampling"),
    (13, "structural invariants", "structure"),
];

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    for &(number, title, suite) in CRITERIA {
        let report = match run_suite(suite) {
            Ok(r) => r,
            Err(e) => {
                println!("[FAIL] criterion {number:>2}: {title}: {e}");
                failed += 1;
                continue;
            }
        };
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {number:>2}: {title} ({} checks)",
            report.checks.len()
        );
        for c in report.failures() {
            println!(
                "         {}: expected {} actual {} tol {}",
                c.name, c.expected, c.actual, c.tol
            );
        }
        failed += usize::from(!report.passed());
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1?}",
        CRITERIA.len() - failed,
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
