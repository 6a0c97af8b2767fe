use gport_core::verify::{run, Check, Suite, VerifyConfig};

fn assert_suite(suite: Suite, config: &VerifyConfig) {
    let checks = run(suite, config).unwrap();
    assert!(!checks.is_empty());
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn foc_suite() {
    assert_suite(Suite::Foc, &VerifyConfig::default());
}

#[test]
fn bounds_suite() {
    assert_suite(Suite::Bounds, &VerifyConfig::default());
}

#[test]
fn oracle_suite() {
    assert_suite(Suite::Oracle, &VerifyConfig::default());
}

#[test]
fn montecarlo_suite() {
    assert_suite(Suite::Montecarlo, &VerifyConfig::default());
}

#[test]
fn overshoot_suite() {
    assert_suite(Suite::Overshoot, &VerifyConfig::default());
}
