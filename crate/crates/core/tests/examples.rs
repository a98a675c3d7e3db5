#![allow(dead_code)]

//! Every example compiles into this test and runs with its default settings.

mod solve_minimizer {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/solve_minimizer.rs"));
}
mod classify_regimes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/classify_regimes.rs"));
}
mod mountain_pass {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mountain_pass.rs"));
}
mod exact_families {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exact_families.rs"));
}
mod profile_indices {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/profile_indices.rs"));
}
mod disk_form {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/disk_form.rs"));
}
mod blowup_monitor {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/blowup_monitor.rs"));
}
mod pohozaev_identity {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/pohozaev_identity.rs"));
}
mod testfunction_curve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/testfunction_curve.rs"));
}
mod config_run {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_run.rs"));
}

use prescribed_curvature::fields::RegimeKind;

#[test]
fn solve_minimizer_matches_the_ode() {
    assert!(solve_minimizer::run_example().unwrap() < 2e-4);
}

#[test]
fn classify_regimes_covers_all_kinds() {
    let k = classify_regimes::run_example().unwrap();
    assert_eq!(k, [RegimeKind::Thm1, RegimeKind::Thm2, RegimeKind::Thm1, RegimeKind::Thm3, RegimeKind::Unclassified]);
}

#[test]
fn mountain_pass_continuation_stays_bounded() {
    let sups = mountain_pass::run_example().unwrap();
    assert_eq!(sups.len(), 3);
    assert!((sups[2] - sups[1]).abs() < 0.1);
}

#[test]
fn exact_families_grow_with_their_parameter() {
    let s = exact_families::run_example().unwrap();
    assert!(s[..4].windows(2).all(|w| w[1] > w[0]));
    assert!(s[4..].windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn profile_indices_split_by_d0() {
    assert_eq!(profile_indices::run_example().unwrap(), [0, 0, 1, 1]);
}

#[test]
fn disk_form_has_index_one() {
    assert_eq!(disk_form::run_example().unwrap(), [1, 1]);
}

#[test]
fn blowup_monitor_finds_points_and_a_circle() {
    assert_eq!(blowup_monitor::run_example().unwrap(), (16, 1));
}

#[test]
fn pohozaev_orders_are_near_two() {
    let (a, b) = pohozaev_identity::run_example().unwrap();
    assert!(a.iter().chain(&b).all(|o| *o > 1.5));
}

#[test]
fn testfunction_energy_goes_to_minus_infinity() {
    let e = testfunction_curve::run_example().unwrap();
    assert!(e.windows(2).all(|w| w[1] < w[0]));
    assert!(*e.last().unwrap() < -300.0);
}

#[test]
fn config_run_converges() {
    assert_eq!(config_run::run_example().unwrap(), prescribed_curvature::run::Status::Ok);
}
