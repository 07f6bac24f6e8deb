//! Acceptance battery: one test per criterion, each printing its pass/fail
//! line and the supporting detail. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the per-criterion lines as they pass).

use coverlab::harness::suite::{criterion_name, run_criterion};

const SUITE_SEED: u64 = 7;

fn run(id: usize) {
    let report = run_criterion(id, SUITE_SEED).unwrap_or_else(|e| {
        panic!("criterion {id} ({}) failed to run: {e}", criterion_name(id))
    });
    println!(
        "criterion {:02} {}: {}",
        report.id,
        report.name,
        if report.pass { "PASS" } else { "FAIL" }
    );
    for line in &report.details {
        println!("  {line}");
    }
    assert!(report.pass, "criterion {id} ({}) failed:\n{}", report.name, report.details.join("\n"));
}

#[test]
fn criterion_01_nonuniform_cover_guarantee() {
    run(1);
}

#[test]
fn criterion_02_agnostic_reduction() {
    run(2);
}

#[test]
fn criterion_03_cover_size_bound() {
    run(3);
}

#[test]
fn criterion_04_ternary_lower_bound() {
    run(4);
}

#[test]
fn criterion_05_c_agnostic_reduction() {
    run(5);
}

#[test]
fn criterion_06_doubly_bounded_reduction() {
    run(6);
}

#[test]
fn criterion_07_malicious_noise() {
    run(7);
}

#[test]
fn criterion_08_exact_differential_privacy() {
    run(8);
}

#[test]
fn criterion_09_semiprivate_accuracy_and_scaling() {
    run(9);
}

#[test]
fn criterion_10_robust_reduction() {
    run(10);
}

#[test]
fn criterion_11_partial_reduction() {
    run(11);
}

#[test]
fn criterion_12_uniform_stability() {
    run(12);
}

#[test]
fn criterion_13_statistical_query_reduction() {
    run(13);
}

#[test]
fn criterion_14_metric_fairness() {
    run(14);
}

#[test]
fn criterion_15_cover_separation() {
    run(15);
}

#[test]
fn criterion_16_cover_conversions() {
    run(16);
}

#[test]
fn criterion_17_determinism() {
    run(17);
}
