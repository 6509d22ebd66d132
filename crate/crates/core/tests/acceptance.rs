//! Acceptance gate: the nine end-to-end validation criteria, one test
//! each, in increasing order of cost. Every test prints its one-line
//! report (visible with `cargo test --test acceptance -- --nocapture`,
//! and always part of the assertion message on failure).
//!
//! A global lock serializes the criteria so wall-clock budgets are
//! measured without interference from sibling tests.

use std::sync::Mutex;

use psmeta_core::validate::run_criterion;

static GATE: Mutex<()> = Mutex::new(());

fn check(id: usize) {
    let _serial = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let report = run_criterion(id, 0);
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_1_inversion_pair_baseline() {
    check(1);
}

#[test]
fn criterion_2_damping_grid_ordering() {
    check(2);
}

#[test]
fn criterion_3_growing_learning_times() {
    check(3);
}

#[test]
fn criterion_4_glow_grid_vs_convoy_length() {
    check(4);
}

#[test]
fn criterion_5_maze_glow_threshold() {
    check(5);
}

#[test]
fn criterion_6_invasion_meta_recovery() {
    check(6);
}

#[test]
fn criterion_7_convoy_meta_growth() {
    check(7);
}

#[test]
fn criterion_8_maze_meta_tracking() {
    check(8);
}

#[test]
fn criterion_9_primitive_invariants() {
    check(9);
}
