//! The worked examples and suites behind the acceptance run. Each check
//! returns a short detail line on success and a diagnostic on failure.

use std::collections::BTreeSet;
use std::sync::Arc;

use distaf_core::model::FrameworkTemplate;
use distaf_core::report::{color_band, ColorBand};
use distaf_core::scoring::{
    apply_cluster_answer, apply_standard_compliance, normalize_metric_value, AppliedCap,
    NodeStatus, RawValue, ScoreNode, ValueOrigin,
};
use distaf_core::store::{AnswerChoice, AssessmentStore, CreateRequest, StoreError};
use distaf_core::template::sample_template;
use distaf_core::validate::validate_template;
use distaf_core::{
    assessment_scorecard, AssessmentStatus, MechanismId, MetricCode, Phase, TemplateRegistry,
};

use crate::gen::{self, Fill, Shape};
use crate::oracle::check_scorecard;
use crate::props;

pub type Outcome = Result<String, String>;

fn code(text: &str) -> MetricCode {
    text.parse().expect("valid metric code")
}

fn fail(e: impl ToString) -> String {
    e.to_string()
}

fn store_with(t: FrameworkTemplate) -> AssessmentStore {
    let mut registry = TemplateRegistry::new();
    registry.insert(t).expect("valid template");
    AssessmentStore::in_memory(Arc::new(registry))
}

fn sample_store() -> AssessmentStore {
    store_with(sample_template())
}

fn blank(store: &AssessmentStore, id: &str) -> Result<u64, String> {
    let out = store
        .create(CreateRequest {
            id: Some(id.into()),
            description: id.into(),
            template_id: Some(store.templates().list()[0].id.clone()),
            ..Default::default()
        })
        .map_err(fail)?;
    Ok(out.assessment.revision)
}

fn set_all(
    store: &AssessmentStore,
    id: &str,
    mut rev: u64,
    values: &[(&str, RawValue)],
) -> Result<u64, String> {
    for (c, v) in values {
        rev = store
            .set_metric_value(id, rev, &code(c), *v)
            .map_err(fail)?
            .revision;
    }
    Ok(rev)
}

/// RES.IDR.O6 unsatisfied holds its mechanism at exactly 40 and, where the
/// pillar would score above 80, the pillar at exactly 80.
pub fn cap_semantics() -> Outcome {
    let idr = MechanismId::new("RES", "IDR").unwrap();
    let o6 = code("RES.IDR.O6");
    let ops = [
        ("RES.RS.O1", RawValue::Bool(true)),
        ("RES.IDR.O1", RawValue::Bool(true)),
        ("RES.IDR.O2", RawValue::Bool(true)),
        ("RES.IDR.O6", RawValue::Bool(false)),
    ];

    let store = sample_store();
    let rev = blank(&store, "caps")?;
    set_all(&store, "caps", rev, &ops)?;
    let card = store.scorecard("caps").map_err(fail)?;
    let mech = &card.operational.mechanisms[&idr];
    let raw = mech.raw_score.ok_or("IDR unscored")?;
    if raw <= 40.0 {
        return Err(format!("IDR raw {raw} does not exceed the cap"));
    }
    if mech.capped_score != Some(40.0) {
        return Err(format!(
            "IDR capped {:?}, expected exactly 40",
            mech.capped_score
        ));
    }
    if mech.applied_cap
        != Some(AppliedCap {
            metric: o6.clone(),
            cap: 40.0,
        })
    {
        return Err(format!("IDR applied cap {:?}", mech.applied_cap));
    }

    // Same violation with the resilience mechanism weighted 9:1 so the
    // pillar's raw score clears 80: (9*100 + 1*40) / 10 = 94.
    let mut t = sample_template();
    let res = t.pillars.iter_mut().find(|p| p.code == "RES").unwrap();
    res.mechanism_weights.insert("RS".into(), 9.0);
    res.mechanism_weights.insert("IDR".into(), 1.0);
    let store = store_with(t);
    let rev = blank(&store, "caps")?;
    set_all(&store, "caps", rev, &ops)?;
    let card = store.scorecard("caps").map_err(fail)?;
    let pillar = &card.operational.pillars["RES"];
    if pillar.raw_score != Some(94.0) {
        return Err(format!("RES raw {:?}, expected 94", pillar.raw_score));
    }
    if pillar.capped_score != Some(80.0) {
        return Err(format!(
            "RES capped {:?}, expected exactly 80",
            pillar.capped_score
        ));
    }
    if pillar.applied_cap
        != Some(AppliedCap {
            metric: o6,
            cap: 80.0,
        })
    {
        return Err(format!("RES applied cap {:?}", pillar.applied_cap));
    }

    // Satisfying the metric lifts both caps.
    let rev = store.get("caps").map_err(fail)?.revision;
    store
        .set_metric_value("caps", rev, &code("RES.IDR.O6"), RawValue::Bool(true))
        .map_err(fail)?;
    let card = store.scorecard("caps").map_err(fail)?;
    let (m, p) = (
        &card.operational.mechanisms[&idr],
        &card.operational.pillars["RES"],
    );
    if m.capped_score != Some(100.0) || p.capped_score != Some(100.0) {
        return Err(format!(
            "satisfied O6 still capped: mechanism {:?}, pillar {:?}",
            m.capped_score, p.capped_score
        ));
    }
    Ok(format!("mechanism raw {raw:.4} -> 40, pillar raw 94 -> 80"))
}

/// AC answers a..d configure (S.AC.D8, S.AC.D9) as (0,0), (0,25), (0,75), (100,100).
pub fn cluster_propagation() -> Outcome {
    let t = sample_template();
    let ac = t
        .pillar("S")
        .and_then(|p| p.mechanism("AC"))
        .ok_or("no S.AC mechanism")?;
    let expected = [(0.0, 0.0), (0.0, 25.0), (0.0, 75.0), (100.0, 100.0)];
    let (d8, d9) = (code("S.AC.D8"), code("S.AC.D9"));
    let n = ac
        .question(Phase::Design)
        .map(|q| q.answers.len())
        .unwrap_or(0);
    if n != expected.len() {
        return Err(format!("AC design question has {n} answers"));
    }

    let store = sample_store();
    let mut rev = blank(&store, "ac")?;
    let id = MechanismId::new("S", "AC").unwrap();
    for (i, (x8, x9)) in expected.into_iter().enumerate() {
        let values = apply_cluster_answer(ac, Phase::Design, i).map_err(fail)?;
        let got: Vec<(MetricCode, f64)> = values
            .iter()
            .map(|v| (v.code.clone(), v.score().unwrap()))
            .collect();
        let want = vec![(d8.clone(), x8), (d9.clone(), x9)];
        let mut sorted = got.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        if sorted != want
            || values
                .iter()
                .any(|v| v.origin != ValueOrigin::ClusterAnswer)
        {
            return Err(format!("answer {i}: {got:?}"));
        }
        // and through the store
        let s = store
            .choose_answer(
                "ac",
                rev,
                &AnswerChoice {
                    mechanism: id.clone(),
                    phase: Phase::Design,
                    answer: Some(i),
                },
            )
            .map_err(fail)?;
        rev = s.revision;
        let stored = (s.metric_values[&d8].score(), s.metric_values[&d9].score());
        if stored != (Some(x8), Some(x9)) {
            return Err(format!("stored answer {i}: {stored:?}"));
        }
    }
    Ok("answers a-d give (0,0) (0,25) (0,75) (100,100)".into())
}

/// S.SAA.O10 reports 100 - FRR.
pub fn sanitization() -> Outcome {
    let t = sample_template();
    let c = code("S.SAA.O10");
    let metric = t.find_metric(&c).ok_or("S.SAA.O10 missing")?.metric;
    for frr in [0.0, 5.0, 50.0, 100.0] {
        let got = normalize_metric_value(metric, RawValue::Number(frr)).map_err(fail)?;
        if got != 100.0 - frr {
            return Err(format!("FRR {frr} normalized to {got}"));
        }
    }
    if normalize_metric_value(metric, RawValue::Number(137.0)).is_ok() {
        return Err("FRR 137 accepted".into());
    }
    Ok("FRR 0/5/50/100 -> 100/95/50/0".into())
}

fn band_node(score: f64, violations: &[&str], excluded: bool) -> ScoreNode {
    ScoreNode {
        subject: "S.AC".into(),
        name: "Access Control".into(),
        phase: Phase::Design,
        raw_score: Some(score),
        capped_score: Some(score),
        applied_cap: None,
        mandatory_violations: violations.iter().map(|c| code(c)).collect(),
        excluded,
        status: NodeStatus::Complete,
        completeness: 1.0,
    }
}

/// Band boundaries, violation and exclusion precedence.
pub fn color_table() -> Outcome {
    let cases = [
        (band_node(33.0, &[], false), ColorBand::TomatoRed),
        (band_node(33.01, &[], false), ColorBand::LemonChiffon),
        (band_node(66.0, &[], false), ColorBand::LemonChiffon),
        (band_node(66.01, &[], false), ColorBand::LightGreen),
        (band_node(90.0, &["RES.IDR.O6"], false), ColorBand::DeepPink),
        (
            band_node(90.0, &["RES.IDR.O6"], true),
            ColorBand::Transparent,
        ),
        (band_node(20.0, &[], true), ColorBand::Transparent),
    ];
    for (node, want) in &cases {
        let got = color_band(node);
        if got != *want {
            return Err(format!(
                "score {:?} violations {} excluded {}: {got}, expected {want}",
                node.capped_score,
                node.mandatory_violations.len(),
                node.excluded
            ));
        }
    }
    Ok("33/33.01/66/66.01 -> red/yellow/yellow/green; violation pink; excluded transparent".into())
}

/// Declaring CIS-Controls scores exactly its seven metrics at 100.
pub fn standards_autoscoring() -> Outcome {
    let t = sample_template();
    let mapped: BTreeSet<MetricCode> = apply_standard_compliance(&t, "CIS-Controls")
        .map_err(fail)?
        .into_iter()
        .map(|v| v.code)
        .collect();
    if mapped.len() != 7 {
        return Err(format!("CIS-Controls maps {} metrics", mapped.len()));
    }

    let store = sample_store();
    let rev = blank(&store, "cis")?;
    let s = store
        .declare_standard("cis", rev, "CIS-Controls", true)
        .map_err(fail)?;
    let scored: BTreeSet<MetricCode> = s
        .metric_values
        .values()
        .filter(|v| v.is_scored())
        .map(|v| v.code.clone())
        .collect();
    if scored != mapped {
        return Err(format!("scored {scored:?}, mapped {mapped:?}"));
    }
    for v in s.metric_values.values().filter(|v| v.is_scored()) {
        if v.score() != Some(100.0) || v.origin != ValueOrigin::Standard {
            return Err(format!(
                "{} stored as {:?} ({:?})",
                v.code,
                v.score(),
                v.origin
            ));
        }
    }
    let card = store.scorecard("cis").map_err(fail)?;
    let in_card = card
        .phases()
        .iter()
        .flat_map(|p| p.metrics.values())
        .filter(|v| v.is_scored())
        .count();
    if in_card != 7 {
        return Err(format!("scorecard shows {in_card} scored metrics"));
    }
    match store.declare_standard("cis", s.revision, "NoSuchStd", true) {
        Err(StoreError::UnknownStandard(_)) => {}
        other => return Err(format!("unknown standard gave {other:?}")),
    }
    Ok("7 metrics at 100, no others".into())
}

/// Engine vs exact-rational oracle on `cases` random frameworks.
pub fn oracle_equivalence(cases: u64) -> Outcome {
    let mut nodes = 0;
    for seed in 0..cases {
        let mut rng = gen::rng(seed);
        let t = gen::framework(&mut rng, Shape::default());
        let report = validate_template(&t);
        if report.has_errors() {
            return Err(format!(
                "seed {seed}: invalid generated template:\n{report}"
            ));
        }
        let status = AssessmentStatus::ALL[(seed % 3) as usize];
        let a = gen::assessment(&mut rng, &t, Fill::MIXED, status);
        let card = assessment_scorecard(&t, &a).map_err(|e| format!("seed {seed}: {e}"))?;
        nodes += check_scorecard(&t, &a, &card, 1e-9).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{cases} frameworks, {nodes} nodes within 1e-9"))
}

/// Every property on `cases` seeds each.
pub fn property_suites(cases: u64) -> Outcome {
    for (name, check) in props::ALL {
        for seed in 0..cases {
            // spread seeds so the suites do not share cases with the oracle run
            let seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD15A;
            check(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
        }
    }
    Ok(format!("{} properties x {cases} cases", props::ALL.len()))
}

/// Draft on creation, publishing gated on completeness, derivation copies scores.
pub fn lifecycle() -> Outcome {
    let t = sample_template();
    let store = sample_store();
    let out = store
        .create(CreateRequest {
            id: Some("v1".into()),
            description: "first".into(),
            template_id: Some(t.id.clone()),
            ..Default::default()
        })
        .map_err(fail)?;
    if out.assessment.status != AssessmentStatus::Draft || out.assessment.revision != 1 {
        return Err(format!(
            "created as {} rev {}",
            out.assessment.status, out.assessment.revision
        ));
    }

    // Score everything but one metric.
    let all: Vec<_> = t.metrics().map(|l| l.metric).collect();
    let (last, rest) = all.split_last().unwrap();
    let mut rev = out.assessment.revision;
    for m in rest {
        let raw = match m.kind {
            distaf_core::model::MetricKind::Boolean => RawValue::Bool(true),
            distaf_core::model::MetricKind::Percentage => RawValue::Number(50.0),
        };
        rev = store
            .set_metric_value("v1", rev, &m.code, raw)
            .map_err(fail)?
            .revision;
    }
    match store.transition_status("v1", rev, AssessmentStatus::Public) {
        Err(StoreError::IncompleteAssessment { unscored, .. })
            if unscored == vec![last.code.to_string()] => {}
        other => {
            return Err(format!(
                "publishing with {} unscored gave {other:?}",
                last.code
            ))
        }
    }
    let raw = match last.kind {
        distaf_core::model::MetricKind::Boolean => RawValue::Bool(false),
        distaf_core::model::MetricKind::Percentage => RawValue::Number(10.0),
    };
    rev = store
        .set_metric_value("v1", rev, &last.code, raw)
        .map_err(fail)?
        .revision;
    let published = store
        .transition_status("v1", rev, AssessmentStatus::Public)
        .map_err(fail)?;
    if published.status != AssessmentStatus::Public {
        return Err("publish did not take".into());
    }

    let derived = store
        .create(CreateRequest {
            id: Some("v2".into()),
            from: Some("v1".into()),
            ..Default::default()
        })
        .map_err(fail)?
        .assessment;
    if derived.status != AssessmentStatus::Draft || derived.predecessor.as_deref() != Some("v1") {
        return Err(format!(
            "derived as {} from {:?}",
            derived.status, derived.predecessor
        ));
    }
    let scores = |s: &distaf_core::AssessmentState| -> Vec<(MetricCode, Option<f64>)> {
        s.metric_values
            .values()
            .map(|v| (v.code.clone(), v.score()))
            .collect()
    };
    if scores(&published) != scores(&derived) || published.metric_values.len() != all.len() {
        return Err("derived scores differ from predecessor".into());
    }
    if store.scorecard("v1").map_err(fail)?.design.pillars
        != store.scorecard("v2").map_err(fail)?.design.pillars
    {
        return Err("derived scorecard differs".into());
    }
    Ok(format!(
        "draft default, publish blocked by {}, {} scores inherited",
        last.code,
        all.len()
    ))
}
