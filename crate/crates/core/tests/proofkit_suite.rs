use mbpre::carpet::build_carpet_model;
use mbpre::proofkit::{build_proof_params, oracle_suite, oracle_suite_with_params, CHECK_NAMES};

/// Measured `lambda_b` of the carpet matrices, to four places.
fn lambda_at(p: f64) -> f64 {
    p.ln() + 0.9732
}

#[test]
fn carpet_suite_passes() {
    let model = build_carpet_model(0.4).unwrap().model;
    let report = oracle_suite(&model, lambda_at(0.4), 2000, 3).unwrap();
    assert_eq!(report.checks.len(), CHECK_NAMES.len());
    assert!(report.failures().is_empty(), "{:#?}", report.failures());
    let json = serde_json::to_value(&report.checks[0]).unwrap();
    for key in ["check", "passed", "samples", "counterexample"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn suite_is_seed_deterministic() {
    let model = build_carpet_model(0.5).unwrap().model;
    let a = oracle_suite(&model, lambda_at(0.5), 300, 8).unwrap();
    let b = oracle_suite(&model, lambda_at(0.5), 300, 8).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn oversized_box_is_caught() {
    let model = build_carpet_model(0.4).unwrap().model;
    let mut params = build_proof_params(&model, lambda_at(0.4)).unwrap();
    params.delta = 0.9;
    let report = oracle_suite_with_params(&model, &params, 2000, 3).unwrap();
    let near_one = report.check("g_dominates_f_near_one").unwrap();
    assert!(!near_one.passed);
    assert!(near_one.counterexample.is_some());
}

#[test]
fn doubled_delta_is_reported() {
    let model = build_carpet_model(0.4).unwrap().model;
    let mut params = build_proof_params(&model, lambda_at(0.4)).unwrap();
    params.delta *= 2.0;
    let report = oracle_suite_with_params(&model, &params, 2000, 3).unwrap();
    assert_eq!(report.checks.len(), CHECK_NAMES.len());
    // Whatever the outcome, every check reports a verdict and a sample count.
    assert!(report.checks.iter().all(|c| c.samples > 0));
}
