use ris_cellfree::oracle::{self, CheckResult};

fn assert_all_pass(results: Vec<CheckResult>) {
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect();
    assert!(failed.is_empty(), "failed checks:\n{}", failed.join("\n"));
}

#[test]
fn linalg_against_reference_kernels() {
    assert_all_pass(oracle::linalg_suite(11));
}

#[test]
fn channel_model_against_direct_evaluation() {
    assert_all_pass(oracle::model_suite(11));
}

#[test]
fn estimation_against_monte_carlo() {
    assert_all_pass(oracle::estimation_suite(11));
}

#[test]
fn optimizer_against_grid_and_closed_forms() {
    assert_all_pass(oracle::optimizer_suite(11));
}

#[test]
fn receiver_against_full_dimension_references() {
    assert_all_pass(oracle::receiver_suite(11));
}
