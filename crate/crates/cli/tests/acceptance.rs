//! Dedicated acceptance test target: every criterion runs at its stated
//! tolerance and prints one pass/fail line (visible with `--nocapture`).

use sglab_cli::acceptance;

fn assert_criterion(result: acceptance::CriterionResult) {
    println!("{}", result.line());
    for d in &result.details {
        println!("    {d}");
    }
    assert!(
        result.passed,
        "criterion {} failed:\n{}",
        result.index,
        result.details.join("\n")
    );
}

#[test]
fn criterion_1_shift_feedback_exact_reproduction() {
    assert_criterion(acceptance::criterion_1());
}

#[test]
fn criterion_2_lasota_yorke_vs_eigen_oracle() {
    assert_criterion(acceptance::criterion_2());
}

#[test]
fn criterion_3_individual_bound_two_sidedness() {
    assert_criterion(acceptance::criterion_3());
}

#[test]
fn criterion_4_ding_certification() {
    assert_criterion(acceptance::criterion_4());
}

#[test]
fn criterion_5_measure_preserving_rigidity_suite() {
    assert_criterion(acceptance::criterion_5());
}

#[test]
fn criterion_6_weighted_shift_native_vs_envelope() {
    assert_criterion(acceptance::criterion_6());
}

#[test]
fn criterion_7_embedded_discrete_consistency() {
    assert_criterion(acceptance::criterion_7());
}

#[test]
fn criterion_8_randomized_property_suites() {
    assert_criterion(acceptance::criterion_8());
}
