//! Scoring and store properties, each checked on one seeded random case.
//!
//! Shared by the proptest suites and the acceptance run so both exercise the
//! same definitions.

use std::sync::Arc;

use distaf_core::model::FrameworkTemplate;
use distaf_core::scoring::{MetricValue, Scorecard, ValueOrigin};
use distaf_core::store::{same_scoring_state, AssessmentStore, CreateRequest};
use distaf_core::{
    assessment_scorecard, AssessmentDocument, AssessmentState, AssessmentStatus, Phase,
    TemplateRegistry,
};
use rand::Rng;

use crate::gen::{self, Fill, Shape};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn case(seed: u64, fill: Fill) -> (FrameworkTemplate, AssessmentState, rand_chacha::ChaCha8Rng) {
    let mut rng = gen::rng(seed);
    let t = gen::framework(&mut rng, Shape::default());
    let status = if rng.random_bool(0.5) {
        AssessmentStatus::Draft
    } else {
        AssessmentStatus::Private
    };
    let a = gen::assessment(&mut rng, &t, fill, status);
    (t, a, rng)
}

fn score(t: &FrameworkTemplate, a: &AssessmentState) -> Result<Scorecard, String> {
    assessment_scorecard(t, a).map_err(|e| e.to_string())
}

fn nodes(card: &Scorecard) -> impl Iterator<Item = &distaf_core::scoring::ScoreNode> {
    card.phases()
        .into_iter()
        .flat_map(|p| p.pillars.values().chain(p.mechanisms.values()))
}

/// Every raw and capped score lies in [0, 100].
pub fn range(seed: u64) -> Check {
    let (t, a, _) = case(seed, Fill::MIXED);
    let card = score(&t, &a)?;
    for n in nodes(&card) {
        for s in [n.raw_score, n.capped_score].into_iter().flatten() {
            ensure!(
                (0.0..=100.0).contains(&s),
                "{} ({}) scored {s}",
                n.subject,
                n.phase
            );
        }
        ensure!(
            (0.0..=1.0).contains(&n.completeness),
            "{} completeness {}",
            n.subject,
            n.completeness
        );
    }
    Ok(())
}

/// capped <= raw, and capped <= the relevant cap of every reported violation.
pub fn cap_dominance(seed: u64) -> Check {
    let (t, a, _) = case(seed, Fill::MIXED);
    let card = score(&t, &a)?;
    for phase in Phase::ALL {
        let scores = card.phase(phase);
        for (is_pillar, n) in scores
            .pillars
            .values()
            .map(|n| (true, n))
            .chain(scores.mechanisms.values().map(|n| (false, n)))
        {
            let (Some(raw), Some(capped)) = (n.raw_score, n.capped_score) else {
                continue;
            };
            ensure!(capped <= raw, "{} capped {capped} > raw {raw}", n.subject);
            ensure!(
                n.applied_cap.is_some() == (capped < raw),
                "{} applied_cap inconsistent",
                n.subject
            );
            for code in &n.mandatory_violations {
                let caps = t.find_metric(code).unwrap().metric.mandatory.unwrap();
                let cap = if is_pillar {
                    caps.pillar_cap
                } else {
                    caps.mechanism_cap
                };
                ensure!(
                    capped <= cap,
                    "{} capped {capped} above cap {cap} of {code}",
                    n.subject
                );
            }
        }
    }
    Ok(())
}

/// Raising one scored metric never lowers any capped score.
pub fn monotonicity(seed: u64) -> Check {
    let (t, mut a, mut rng) = case(seed, Fill::MIXED);
    let before = score(&t, &a)?;
    let scored: Vec<(distaf_core::MetricCode, f64)> = before
        .phases()
        .into_iter()
        .flat_map(|p| p.metrics.values())
        .filter_map(|v| v.score().map(|s| (v.code.clone(), s)))
        .collect();
    if scored.is_empty() {
        return Ok(());
    }
    let (code, old) = scored[rng.random_range(0..scored.len())].clone();
    let metric = t.find_metric(&code).unwrap().metric;
    let new = match metric.kind {
        distaf_core::model::MetricKind::Boolean => 100.0,
        distaf_core::model::MetricKind::Percentage => rng.random_range(old..=100.0),
    };
    a.metric_values.insert(
        code.clone(),
        MetricValue::scored(code.clone(), new, ValueOrigin::Direct),
    );
    let after = score(&t, &a)?;
    for phase in Phase::ALL {
        let (pb, pa) = (before.phase(phase), after.phase(phase));
        for (k, n) in &pb.mechanisms {
            if let (Some(x), Some(y)) = (n.capped_score, pa.mechanisms[k].capped_score) {
                ensure!(
                    y >= x,
                    "raising {code} {old}->{new} lowered {k} from {x} to {y}"
                );
            }
        }
        for (k, n) in &pb.pillars {
            if let (Some(x), Some(y)) = (n.capped_score, pa.pillars[k].capped_score) {
                ensure!(
                    y >= x,
                    "raising {code} {old}->{new} lowered pillar {k} from {x} to {y}"
                );
            }
        }
    }
    Ok(())
}

/// Editing a metric of one phase leaves the other phase untouched.
pub fn phase_isolation(seed: u64) -> Check {
    let (t, mut a, mut rng) = case(seed, Fill::MIXED);
    let before = score(&t, &a)?;
    let metric = gen::any_metric(&mut rng, &t);
    let value = if rng.random_bool(0.2) {
        MetricValue::unscored(metric.code.clone())
    } else {
        MetricValue::scored(
            metric.code.clone(),
            gen::any_score(&mut rng, metric),
            ValueOrigin::Direct,
        )
    };
    a.metric_values.insert(metric.code.clone(), value);
    let after = score(&t, &a)?;
    let other = match metric.phase() {
        Phase::Design => Phase::Operational,
        Phase::Operational => Phase::Design,
    };
    ensure!(
        before.phase(other) == after.phase(other),
        "editing {} changed the {other} phase",
        metric.code
    );
    Ok(())
}

/// Scoring the same state twice gives bit-identical results.
pub fn idempotence(seed: u64) -> Check {
    let (t, a, _) = case(seed, Fill::MIXED);
    let first = score(&t, &a)?;
    let second = score(&t, &a)?;
    ensure!(first == second, "scorecards differ");
    let (j1, j2) = (
        serde_json::to_string(&first).unwrap(),
        serde_json::to_string(&second).unwrap(),
    );
    ensure!(j1 == j2, "serialized scorecards differ");
    Ok(())
}

/// A mechanism scoring exactly the pillar's weighted mean of the others can be
/// excluded without moving the pillar; excluding every mechanism that carries
/// a violation removes the pillar's caps.
pub fn exclusion_consistency(seed: u64) -> Check {
    let (t, mut a, mut rng) = case(seed, Fill::COMPLETE);
    a.status = AssessmentStatus::Private;
    let phase = if rng.random_bool(0.5) {
        Phase::Design
    } else {
        Phase::Operational
    };

    let pillar = &t.pillars[rng.random_range(0..t.pillars.len())];
    let candidates: Vec<_> = pillar
        .mechanisms
        .iter()
        .filter(|m| m.has_phase(phase))
        .collect();
    if candidates.len() >= 2 {
        let mechanism = candidates[rng.random_range(0..candidates.len())];
        let id = pillar.mechanism_id(mechanism);
        let mut without = a.clone();
        without.excluded_mechanisms.insert(id.clone());
        let reference = score(&t, &without)?.phase(phase).pillars[&pillar.code].raw_score;
        if let Some(mean) = reference {
            let satisfied = mechanism
                .phase_metrics(phase)
                .all(|m| m.binding_caps().is_none_or(|c| c.is_satisfied_by(mean)));
            let booleans = mechanism
                .phase_metrics(phase)
                .any(|m| m.kind == distaf_core::model::MetricKind::Boolean);
            if satisfied && !booleans {
                for m in mechanism.phase_metrics(phase) {
                    a.metric_values.insert(
                        m.code.clone(),
                        MetricValue::scored(m.code.clone(), mean, ValueOrigin::Direct),
                    );
                }
                let with = score(&t, &a)?;
                let node = &with.phase(phase).mechanisms[&id];
                ensure!(
                    node.capped_score == Some(mean),
                    "{id} did not score the mean {mean}: {:?}",
                    node.capped_score
                );
                let raw = with.phase(phase).pillars[&pillar.code].raw_score.unwrap();
                ensure!(
                    (raw - mean).abs() <= 1e-9,
                    "pillar {} moved from {mean} to {raw}",
                    pillar.code
                );
            }
        }
    }

    let card = score(&t, &a)?;
    for p in &t.pillars {
        for ph in Phase::ALL {
            if card.phase(ph).pillars[&p.code]
                .mandatory_violations
                .is_empty()
            {
                continue;
            }
            let mut b = a.clone();
            for (id, n) in &card.phase(ph).mechanisms {
                if id.pillar_code() == p.code && !n.mandatory_violations.is_empty() {
                    b.excluded_mechanisms.insert(id.clone());
                }
            }
            let rescored = score(&t, &b)?;
            let node = &rescored.phase(ph).pillars[&p.code];
            ensure!(
                node.mandatory_violations.is_empty() && node.applied_cap.is_none(),
                "pillar {} ({ph}) still capped after excluding its violating mechanisms",
                p.code
            );
        }
    }
    Ok(())
}

fn store_for(t: &FrameworkTemplate) -> (Arc<TemplateRegistry>, AssessmentStore) {
    let mut registry = TemplateRegistry::new();
    registry
        .insert(t.clone())
        .expect("generated template is valid");
    let registry = Arc::new(registry);
    (Arc::clone(&registry), AssessmentStore::in_memory(registry))
}

/// Excluding and re-including a mechanism through the store restores the
/// scorecard exactly.
pub fn exclusion_involution(seed: u64) -> Check {
    let (t, a, mut rng) = case(seed, Fill::MIXED);
    let (_, store) = store_for(&t);
    let mut a = a;
    a.status = AssessmentStatus::Draft;
    store
        .import_document(&AssessmentDocument::new(a))
        .map_err(|e| e.to_string())?;
    let before = store.scorecard("generated").map_err(|e| e.to_string())?;
    let ids: Vec<_> = t.mechanisms().map(|(id, _, _)| id).collect();
    let id = &ids[rng.random_range(0..ids.len())];
    let state = store.get("generated").unwrap();
    let was = state.is_excluded(id);
    let s = store
        .set_mechanism_exclusion("generated", state.revision, id, !was)
        .map_err(|e| e.to_string())?;
    store
        .set_mechanism_exclusion("generated", s.revision, id, was)
        .map_err(|e| e.to_string())?;
    let after = store.scorecard("generated").map_err(|e| e.to_string())?;
    ensure!(before == after, "toggling {id} twice changed the scorecard");
    Ok(())
}

/// Directory store: write, reopen, and get a bit-identical scorecard.
pub fn persistence_round_trip(seed: u64) -> Check {
    let (t, a, _) = case(seed, Fill::MIXED);
    let mut a = a;
    a.status = AssessmentStatus::Draft;
    let mut registry = TemplateRegistry::new();
    registry.insert(t.clone()).map_err(|e| e.to_string())?;
    let registry = Arc::new(registry);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store =
        AssessmentStore::open(Arc::clone(&registry), dir.path()).map_err(|e| e.to_string())?;
    store
        .import_document(&AssessmentDocument::new(a))
        .map_err(|e| e.to_string())?;
    let before = store.scorecard("generated").map_err(|e| e.to_string())?;
    let state = store.get("generated").unwrap();
    drop(store);
    let reopened = AssessmentStore::open(registry, dir.path()).map_err(|e| e.to_string())?;
    ensure!(
        reopened.get("generated").unwrap() == state,
        "state changed across reload"
    );
    let after = reopened.scorecard("generated").map_err(|e| e.to_string())?;
    ensure!(before == after, "scorecard changed across reload");
    ensure!(
        serde_json::to_string(&before).unwrap() == serde_json::to_string(&after).unwrap(),
        "serialized scorecard changed across reload"
    );
    Ok(())
}

/// A derived assessment starts value-identical to its predecessor.
pub fn derived_deep_equality(seed: u64) -> Check {
    let (t, a, _) = case(seed, Fill::MIXED);
    let (_, store) = store_for(&t);
    let mut a = a;
    a.status = AssessmentStatus::Draft;
    store
        .import_document(&AssessmentDocument::new(a))
        .map_err(|e| e.to_string())?;
    let out = store
        .create(CreateRequest {
            id: Some("derived".into()),
            from: Some("generated".into()),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
    let original = store.get("generated").unwrap();
    ensure!(
        out.warnings.is_empty(),
        "unexpected warnings {:?}",
        out.warnings
    );
    ensure!(
        same_scoring_state(&original, &out.assessment),
        "derived state differs"
    );
    ensure!(
        out.assessment.predecessor.as_deref() == Some("generated"),
        "predecessor not recorded"
    );
    ensure!(
        out.assessment.status == AssessmentStatus::Draft,
        "derived assessment not a draft"
    );
    let (x, y) = (
        store.scorecard("generated").unwrap(),
        store.scorecard("derived").unwrap(),
    );
    for phase in Phase::ALL {
        ensure!(
            x.phase(phase).pillars == y.phase(phase).pillars,
            "pillar scores differ"
        );
        ensure!(
            x.phase(phase).mechanisms == y.phase(phase).mechanisms,
            "mechanism scores differ"
        );
    }
    Ok(())
}

pub type Property = (&'static str, fn(u64) -> Check);

/// Every property, by name.
pub const ALL: [Property; 9] = [
    ("range", range),
    ("cap dominance", cap_dominance),
    ("monotonicity", monotonicity),
    ("phase isolation", phase_isolation),
    ("idempotence", idempotence),
    ("exclusion consistency", exclusion_consistency),
    ("exclusion involution", exclusion_involution),
    ("persistence round-trip", persistence_round_trip),
    ("derived-assessment deep equality", derived_deep_equality),
];
