use super::*;
use crate::entropy::Extrapolated;

#[test]
fn reals_parse_decimals_fractions_and_numbers() {
    let v: Vec<Real> = serde_json::from_str(r#"["0.25", "1/27", 3, 2.5, " 4 "]"#).unwrap();
    assert_eq!(v, vec![Real(0.25), Real(1.0 / 27.0), Real(3.0), Real(2.5), Real(4.0)]);
    assert!(serde_json::from_str::<Real>(r#""abc""#).is_err());
    assert!(serde_json::from_str::<Real>(r#""1/0""#).is_err());
    assert_eq!(serde_json::to_string(&Real(0.1)).unwrap(), r#""0.1""#);
}

#[test]
fn reals_round_trip_exactly() {
    for v in [1.0 / 3.0, 3f64.powi(-6), 2f64.ln(), 1e-300, 123456.789] {
        let text = serde_json::to_string(&Real(v)).unwrap();
        assert_eq!(serde_json::from_str::<Real>(&text).unwrap().0, v);
    }
}

#[test]
fn every_preset_round_trips_through_json() {
    for &id in PresetId::ALL {
        let c = preset(id);
        c.validate().unwrap_or_else(|e| panic!("{id}: {e}"));
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c, "{id}");
        assert_eq!(back.hash(), c.hash());
        assert_eq!(id.name().parse::<PresetId>().unwrap(), id);
    }
    assert_eq!("e2-chain".parse::<PresetId>().unwrap(), PresetId::E2_CHAIN);
    assert!("E7".parse::<PresetId>().is_err());
}

#[test]
fn hash_changes_with_content() {
    let a = preset(PresetId::LINEAR_1D_DOUBLING);
    let mut b = a.clone();
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

fn expect_config_error(c: &ExperimentConfig, needle: &str) {
    match c.validate() {
        Err(Error::Config(m)) => assert!(m.contains(needle), "{m}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn decreasing_deltas_are_rejected() {
    let mut c = preset(PresetId::LINEAR_1D_DOUBLING);
    if let Task::Estimate { schedule, .. } = &mut c.tasks[0] {
        schedule.cells.swap(0, 1);
    }
    expect_config_error(&c, "strictly increasing");
}

#[test]
fn invalid_configs_are_rejected() {
    let base = preset(PresetId::CO9_ITERATE_DEFECT);
    let mut c = base.clone();
    c.schema_version = 2;
    expect_config_error(&c, "schema_version");
    let mut c = base.clone();
    c.budget.orbits = 0;
    expect_config_error(&c, "budgets");
    let mut c = base.clone();
    c.tasks.push(c.tasks[0].clone());
    expect_config_error(&c, "unique");
    let mut c = base.clone();
    c.expect.push(Check::InfinityFlag { task: "maps".into() });
    expect_config_error(&c, "does not apply");
    let mut c = base.clone();
    c.expect.push(Check::DefectAtMost { task: "nope".into(), max: Real(1.0) });
    expect_config_error(&c, "unknown task");
    let mut c = base;
    if let Task::DefectCurve { radii, .. } = &mut c.tasks[0] {
        radii.reverse();
    }
    expect_config_error(&c, "radii");
}

#[test]
fn unknown_fields_and_bad_reals_fail_to_parse() {
    let mut v = serde_json::to_value(preset(PresetId::LEM_SELF_PRODUCT)).unwrap();
    v["colour"] = "red".into();
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));
    let mut v = serde_json::to_value(preset(PresetId::LEM_SELF_PRODUCT)).unwrap();
    v["tasks"][0]["spacing"] = "one".into();
    assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(Error::Config(_))));
}

#[test]
fn self_product_preset_passes() {
    let out = run(&preset(PresetId::LEM_SELF_PRODUCT)).unwrap();
    assert_eq!(out.status, Status::Ok, "{:?}", out.checks);
    assert_eq!(out.exit_code(true), 0);
    // Three lengths, two deltas and three radii per audit.
    assert_eq!(out.records.len(), 2 * 18);
}

#[test]
fn doubling_summary_names_the_expected_value() {
    let out = run(&preset(PresetId::LINEAR_1D_DOUBLING)).unwrap();
    assert_eq!(out.status, Status::Ok, "{:?}", out.checks);
    assert!(out.summary.starts_with("LINEAR_1D_DOUBLING: h_inf ≈ 0.6"), "{}", out.summary);
    assert!(out.summary.contains("(expected log 2)"), "{}", out.summary);
}

#[test]
fn budget_hits_are_partial_and_exit_three() {
    let mut c = preset(PresetId::E1_CONJUGATED);
    c.budget.orbits = 50;
    let out = run(&c).unwrap();
    assert_eq!(out.status, Status::BudgetExceeded);
    assert_eq!(out.exit_code(true), 3);
    assert_eq!(out.exit_code(false), 3);
    let TaskResult::Estimate { estimate, .. } = &out.results[0] else { panic!("estimate expected") };
    assert!(estimate.budget_exceeded);
    assert!(estimate.grid.iter().any(|g| g.error.is_some()));
}

#[test]
fn failed_assertions_exit_four_only_in_preset_mode() {
    let mut c = preset(PresetId::CO9_ITERATE_DEFECT);
    c.expect.push(Check::DefectAtMost { task: "iterates".into(), max: Real(1.0) });
    let out = run(&c).unwrap();
    assert_eq!(out.status, Status::AssertionFailed);
    assert_eq!(out.exit_code(true), 4);
    assert_eq!(out.exit_code(false), 0);
    assert!(!out.checks.last().unwrap().passed);
}

#[test]
fn report_json_carries_hash_and_status() {
    let c = preset(PresetId::CO4_CONJUGACY);
    let out = run(&c).unwrap();
    let v = serde_json::to_value(&out).unwrap();
    assert_eq!(v["config_hash"], c.hash());
    assert_eq!(v["status"], "OK", "{:?}", out.checks);
    assert_eq!(v["results"][0]["task"], "conjugacy");
    assert!(v.get("records").is_none());
}

#[test]
fn extrapolated_infinity_reads_as_unbounded() {
    let out = run(&preset(PresetId::E5_IDENTITY_GROWTH)).unwrap();
    let TaskResult::Estimate { estimate, .. } = &out.results[0] else { panic!("estimate expected") };
    assert_eq!(estimate.extrapolated_value, Extrapolated::Infinity);
    assert!(out.summary.contains("+INFINITY_FLAG"));
}
