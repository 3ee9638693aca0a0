//! Every example runs to completion and passes its own checks.

mod admm_lasso {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/admm_lasso.rs"));
}

mod config_run {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_run.rs"));
}

mod consensus_graph {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/consensus_graph.rs"));
}

mod fbs_and_ppa {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fbs_and_ppa.rs"));
}

mod inexact_km {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/inexact_km.rs"));
}

mod km_projections {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/km_projections.rs"));
}

mod lower_bounds {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lower_bounds.rs"));
}

mod model_fitting {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/model_fitting.rs"));
}

mod relaxed_prs_lasso {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/relaxed_prs_lasso.rs"));
}

mod reproduce_entry {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/reproduce_entry.rs"));
}

mod set_feasibility {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/set_feasibility.rs"));
}

mod summable_sequences {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/summable_sequences.rs"));
}

#[test]
fn example_admm_lasso() {
    admm_lasso::run_example().unwrap();
}

#[test]
fn example_config_run() {
    config_run::run_example().unwrap();
}

#[test]
fn example_consensus_graph() {
    consensus_graph::run_example().unwrap();
}

#[test]
fn example_fbs_and_ppa() {
    fbs_and_ppa::run_example().unwrap();
}

#[test]
fn example_inexact_km() {
    inexact_km::run_example().unwrap();
}

#[test]
fn example_km_projections() {
    km_projections::run_example().unwrap();
}

#[test]
fn example_lower_bounds() {
    lower_bounds::run_example().unwrap();
}

#[test]
fn example_model_fitting() {
    model_fitting::run_example().unwrap();
}

#[test]
fn example_relaxed_prs_lasso() {
    relaxed_prs_lasso::run_example().unwrap();
}

#[test]
fn example_reproduce_entry() {
    reproduce_entry::run_example().unwrap();
}

#[test]
fn example_set_feasibility() {
    set_feasibility::run_example().unwrap();
}

#[test]
fn example_summable_sequences() {
    summable_sequences::run_example().unwrap();
}
