use liouville_pt::verify::{verify, VerifyOptions};

#[test]
fn flipped_perturbation_fails_convergence_criteria() {
    let opts = VerifyOptions { criteria: vec![2, 3], mutate_l1_sign: true, ..VerifyOptions::default() };
    let report = verify(&opts);
    for c in &report.criteria {
        assert!(!c.passed, "criterion {} passed with a flipped perturbation: {}", c.id, c.detail);
    }
    assert!(!report.all_passed);
}
