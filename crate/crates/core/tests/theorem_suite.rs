use qparts::io::{emit_report, Status};
use qparts::suite::run_theorem_suite;

#[test]
fn suite_has_no_failures() {
    let report = run_theorem_suite(42, 1e-9, false);
    for check in &report.checks {
        println!("{:<40} {:<8} {:e}", check.id, check.status.to_string(), check.residual);
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.id.clone()).collect();
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}

#[test]
fn suite_output_is_reproducible() {
    let a = emit_report(&run_theorem_suite(7, 1e-9, false));
    let b = emit_report(&run_theorem_suite(7, 1e-9, false));
    assert_eq!(a, b);
}

#[test]
fn check_ids_are_unique() {
    let report = run_theorem_suite(1, 1e-9, false);
    let mut ids: Vec<_> = report.checks.iter().map(|c| c.id.as_str()).collect();
    let n = ids.len();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), n);
}
