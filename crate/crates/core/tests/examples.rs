use std::collections::BTreeSet;

use distaf_core::scoring::{apply_standard_compliance, ScoringError};
use distaf_core::template::sample_template;
use distaf_core::validate::validate_template;
use distaf_core::{parse_metric_code, MetricCode, Phase};
use distaf_testkit::criteria;

#[test]
fn cap_semantics() {
    println!("{}", criteria::cap_semantics().unwrap());
}

#[test]
fn ac_answers_configure_both_metrics() {
    println!("{}", criteria::cluster_propagation().unwrap());
}

#[test]
fn frr_is_complemented() {
    println!("{}", criteria::sanitization().unwrap());
}

#[test]
fn color_table() {
    println!("{}", criteria::color_table().unwrap());
}

#[test]
fn cis_controls_scores_seven_metrics() {
    println!("{}", criteria::standards_autoscoring().unwrap());
}

#[test]
fn lifecycle() {
    println!("{}", criteria::lifecycle().unwrap());
}

#[test]
fn gdpr_maps_two_metrics() {
    let t = sample_template();
    let codes: BTreeSet<MetricCode> = apply_standard_compliance(&t, "GDPR")
        .unwrap()
        .into_iter()
        .map(|v| v.code)
        .collect();
    let want: BTreeSet<MetricCode> = ["S.RC.O12", "P.CDM.D1"]
        .iter()
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(codes, want);
    assert!(matches!(
        apply_standard_compliance(&t, "NoSuchStd"),
        Err(ScoringError::UnknownStandard(_))
    ));
}

#[test]
fn appendix_codes_parse() {
    let c = parse_metric_code("S.AC.D8").unwrap();
    assert_eq!(
        (c.pillar_code(), c.mechanism_code(), c.phase(), c.index()),
        ("S", "AC", Phase::Design, 8)
    );
    let c = parse_metric_code("RES.IDR.O6").unwrap();
    assert_eq!(
        (c.pillar_code(), c.mechanism_code(), c.phase(), c.index()),
        ("RES", "IDR", Phase::Operational, 6)
    );
    assert!(parse_metric_code("S.AC.X1").is_err());
}

#[test]
fn sample_template_is_clean_and_has_six_pillars() {
    let t = sample_template();
    let report = validate_template(&t);
    assert!(report.is_clean(), "{report}");
    let codes: Vec<&str> = t.pillars.iter().map(|p| p.code.as_str()).collect();
    assert_eq!(codes, ["S", "P", "E", "RES", "ROB", "REL"]);
}

#[test]
fn schema_describes_the_sample_keys() {
    let root = distaf_testkit::workspace_root();
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(root.join("schema/framework-template.schema.json")).unwrap(),
    )
    .unwrap();
    let sample: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(distaf_testkit::sample_template_path()).unwrap(),
    )
    .unwrap();
    let allowed: BTreeSet<&str> = schema["properties"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    for key in sample.as_object().unwrap().keys() {
        assert!(allowed.contains(key.as_str()), "{key} missing from schema");
    }
    for key in schema["required"].as_array().unwrap() {
        assert!(sample.get(key.as_str().unwrap()).is_some(), "{key}");
    }
}
