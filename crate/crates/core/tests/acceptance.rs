//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the deterministic detail string and the measured wall time.
//! Wall times are informational; pass/fail is decided by the exact
//! properties alone.

use std::time::Instant;

use demuskin_core::suite::{self, CriterionResult};
use demuskin_core::Budget;

const SEED: u64 = 1;

fn report(result: &CriterionResult, elapsed_s: f64) {
    println!(
        "[acceptance] criterion {} ({}): {} — {} ({elapsed_s:.2}s)",
        result.id,
        result.name,
        if result.pass { "PASS" } else { "FAIL" },
        result.detail
    );
}

fn run(criterion: impl Fn(u64, &Budget) -> CriterionResult) {
    let budget = Budget::default();
    let start = Instant::now();
    let result = criterion(SEED, &budget);
    report(&result, start.elapsed().as_secs_f64());
    assert!(result.pass, "criterion {} failed: {}", result.id, result.detail);
}

#[test]
fn criterion_01_generated_data_decompose() {
    run(suite::criterion_1);
}

#[test]
fn criterion_02_decomposition_structure() {
    run(suite::criterion_2);
}

#[test]
fn criterion_03_splitting_equivalence() {
    run(suite::criterion_3);
}

#[test]
fn criterion_04_fixed_norm_identity() {
    run(suite::criterion_4);
}

#[test]
fn criterion_05_binary_strong_regularity() {
    run(suite::criterion_5);
}

#[test]
fn criterion_06_strong_regularity_implies_weak_locality() {
    run(suite::criterion_6);
}

#[test]
fn criterion_07_subgroup_rank_formula() {
    run(suite::criterion_7);
}

#[test]
fn criterion_08_subgroup_module_shapes() {
    run(suite::criterion_8);
}

#[test]
fn criterion_09_module_special_cases() {
    run(suite::criterion_9);
}

#[test]
fn criterion_10_determinism() {
    let budget = Budget::default();
    let start = Instant::now();
    let (_, result) = suite::criterion_10(SEED, &budget);
    report(&result, start.elapsed().as_secs_f64());
    assert!(result.pass, "criterion 10 failed: {}", result.detail);
}
