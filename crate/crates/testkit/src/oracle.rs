//! Brute-force recomputation of a scorecard in exact rational arithmetic.
//!
//! Deliberately shares no code with the engine beyond the data model: the
//! value layering, weight normalization, caps and partial-scoring rules are
//! re-derived here from their definitions.

use std::collections::{BTreeMap, BTreeSet};

use distaf_core::model::{FrameworkTemplate, Mechanism, MetricKind, Pillar};
use distaf_core::scoring::{ScoreNode, Scorecard, ValueState};
use distaf_core::{AssessmentState, AssessmentStatus, MechanismId, MetricCode, Phase};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite")
}

fn q_int(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub raw: Option<Q>,
    pub capped: Option<Q>,
    pub cap_metric: Option<MetricCode>,
    pub violations: BTreeSet<MetricCode>,
    pub complete: bool,
    /// Pillars only: no included mechanism in this phase.
    pub no_children: bool,
}

#[derive(Debug, Clone, Default)]
pub struct OraclePhase {
    pub mechanisms: BTreeMap<MechanismId, OracleNode>,
    pub pillars: BTreeMap<String, OracleNode>,
    pub scored: usize,
    pub included: usize,
}

/// Effective normalized scores: standards, then answers, then stored values.
pub fn effective_scores(t: &FrameworkTemplate, a: &AssessmentState) -> BTreeMap<MetricCode, Q> {
    let mut out = BTreeMap::new();
    for std_id in &a.declared_standards {
        let mapping = t
            .standards
            .iter()
            .find(|s| &s.standard_id == std_id)
            .expect("known standard");
        for code in &mapping.satisfied_metrics {
            out.insert(code.clone(), q_int(100));
        }
    }
    for (id, answers) in &a.chosen_answers {
        let pillar = t
            .pillars
            .iter()
            .find(|p| p.code == id.pillar_code())
            .unwrap();
        let mech = pillar
            .mechanisms
            .iter()
            .find(|m| m.code == id.mechanism_code())
            .unwrap();
        for (phase, idx) in answers {
            let question = mech
                .cluster_questions
                .iter()
                .find(|cq| cq.phase == *phase)
                .unwrap();
            for (code, v) in &question.answers[*idx].configuration {
                out.insert(code.clone(), q(*v));
            }
        }
    }
    for (code, value) in &a.metric_values {
        match value.state {
            ValueState::Scored => out.insert(code.clone(), q(value.normalized.unwrap())),
            ValueState::Unscored => out.remove(code),
        };
    }
    out
}

fn phase_metrics(m: &Mechanism, phase: Phase) -> Vec<&distaf_core::model::Metric> {
    m.metrics
        .iter()
        .filter(|x| x.code.phase() == phase)
        .collect()
}

fn binding(metric: &distaf_core::model::Metric) -> Option<(Q, Q, Q)> {
    let caps = metric.mandatory.as_ref()?;
    if caps.mechanism_cap >= 100.0 && caps.pillar_cap >= 100.0 {
        return None;
    }
    Some((
        q(caps.mechanism_cap),
        q(caps.pillar_cap),
        q(caps.satisfied_when_at_least),
    ))
}

/// Lowest cap, first in order on ties; applied only if strictly below raw.
fn cap(raw: &Option<Q>, caps: &[(MetricCode, Q)]) -> (Option<Q>, Option<MetricCode>) {
    let Some(raw) = raw else { return (None, None) };
    let mut best: Option<&(MetricCode, Q)> = None;
    for c in caps {
        if best.is_none_or(|b| c.1 < b.1) {
            best = Some(c);
        }
    }
    match best {
        Some((code, value)) if value < raw => (Some(value.clone()), Some(code.clone())),
        _ => (Some(raw.clone()), None),
    }
}

fn mean(pairs: &[(Q, Q)]) -> Option<Q> {
    let total: Q = pairs.iter().map(|(w, _)| w.clone()).sum();
    if total.is_zero() {
        return None;
    }
    let sum: Q = pairs.iter().map(|(w, s)| w * s).sum();
    Some(sum / total)
}

fn metric_weight(m: &Mechanism, code: &MetricCode) -> Q {
    m.metric_weights
        .get(code)
        .map_or_else(|| q_int(1), |w| q(*w))
}

fn mechanism_weight(p: &Pillar, code: &str) -> Q {
    p.mechanism_weights
        .get(code)
        .map_or_else(|| q_int(1), |w| q(*w))
}

fn oracle_mechanism(
    m: &Mechanism,
    phase: Phase,
    scores: &BTreeMap<MetricCode, Q>,
    strict: bool,
) -> OracleNode {
    let metrics = phase_metrics(m, phase);
    let pairs: Vec<(Q, Q)> = metrics
        .iter()
        .filter_map(|x| {
            scores
                .get(&x.code)
                .map(|s| (metric_weight(m, &x.code), s.clone()))
        })
        .collect();
    let raw = mean(&pairs);
    let mut violations = BTreeSet::new();
    let mut caps = Vec::new();
    for x in &metrics {
        if let Some((mech_cap, _, threshold)) = binding(x) {
            let violated = match scores.get(&x.code) {
                Some(s) => *s < threshold,
                None => strict,
            };
            if violated {
                violations.insert(x.code.clone());
                caps.push((x.code.clone(), mech_cap));
            }
        }
    }
    let (capped, cap_metric) = cap(&raw, &caps);
    OracleNode {
        raw,
        capped,
        cap_metric,
        violations,
        complete: pairs.len() == metrics.len(),
        no_children: false,
    }
}

/// Recomputes every node of both phases.
pub fn oracle(t: &FrameworkTemplate, a: &AssessmentState) -> BTreeMap<Phase, OraclePhase> {
    let scores = effective_scores(t, a);
    let strict = a.status != AssessmentStatus::Draft;
    let mut result = BTreeMap::new();
    for phase in [Phase::Design, Phase::Operational] {
        let mut out = OraclePhase::default();
        for p in &t.pillars {
            let mut pairs = Vec::new();
            let mut caps = Vec::new();
            let mut any_included = false;
            let mut all_complete = true;
            for m in &p.mechanisms {
                let metrics = phase_metrics(m, phase);
                if metrics.is_empty() {
                    continue;
                }
                let id = MechanismId::new(p.code.clone(), m.code.clone()).unwrap();
                let node = oracle_mechanism(m, phase, &scores, strict);
                if !a.excluded_mechanisms.contains(&id) {
                    any_included = true;
                    out.included += metrics.len();
                    out.scored += metrics
                        .iter()
                        .filter(|x| scores.contains_key(&x.code))
                        .count();
                    if node.complete {
                        if let Some(c) = &node.capped {
                            pairs.push((mechanism_weight(p, &m.code), c.clone()));
                        }
                        for x in &metrics {
                            if node.violations.contains(&x.code) {
                                caps.push((x.code.clone(), binding(x).unwrap().1));
                            }
                        }
                    } else {
                        all_complete = false;
                    }
                }
                out.mechanisms.insert(id, node);
            }
            let node = if any_included {
                let raw = mean(&pairs);
                let (capped, cap_metric) = cap(&raw, &caps);
                OracleNode {
                    raw,
                    capped,
                    cap_metric,
                    violations: caps.into_iter().map(|(c, _)| c).collect(),
                    complete: all_complete,
                    no_children: false,
                }
            } else {
                OracleNode {
                    raw: None,
                    capped: None,
                    cap_metric: None,
                    violations: BTreeSet::new(),
                    complete: false,
                    no_children: true,
                }
            };
            out.pillars.insert(p.code.clone(), node);
        }
        result.insert(phase, out);
    }
    result
}

fn close(engine: Option<f64>, oracle: &Option<Q>, tol: f64) -> bool {
    match (engine, oracle) {
        (None, None) => true,
        (Some(e), Some(o)) => (e - o.to_f64().unwrap()).abs() <= tol,
        _ => false,
    }
}

fn compare_node(what: &str, e: &ScoreNode, o: &OracleNode, tol: f64) -> Result<(), String> {
    let fail = |field: &str| {
        Err(format!(
            "{what} {} ({}): {field} differs: engine {e:?} vs oracle {o:?}",
            e.subject, e.phase
        ))
    };
    if !close(e.raw_score, &o.raw, tol) {
        return fail("raw");
    }
    if !close(e.capped_score, &o.capped, tol) {
        return fail("capped");
    }
    if e.applied_cap.as_ref().map(|c| &c.metric) != o.cap_metric.as_ref() {
        return fail("applied cap");
    }
    if e.mandatory_violations != o.violations {
        return fail("violations");
    }
    Ok(())
}

/// Compares every node of an engine scorecard with the oracle. Returns the
/// number of nodes compared.
pub fn check_scorecard(
    t: &FrameworkTemplate,
    a: &AssessmentState,
    card: &Scorecard,
    tol: f64,
) -> Result<usize, String> {
    let expected = oracle(t, a);
    let mut compared = 0;
    for phase in [Phase::Design, Phase::Operational] {
        let got = card.phase(phase);
        let want = &expected[&phase];
        if got.mechanisms.len() != want.mechanisms.len() || got.pillars.len() != want.pillars.len()
        {
            return Err(format!("{phase}: node count differs"));
        }
        for (id, o) in &want.mechanisms {
            let e = got
                .mechanisms
                .get(id)
                .ok_or(format!("missing mechanism {id}"))?;
            compare_node("mechanism", e, o, tol)?;
            if e.is_complete() != o.complete {
                return Err(format!(
                    "mechanism {id} ({phase}): completeness flag differs"
                ));
            }
            compared += 1;
        }
        for (code, o) in &want.pillars {
            let e = got
                .pillars
                .get(code)
                .ok_or(format!("missing pillar {code}"))?;
            compare_node("pillar", e, o, tol)?;
            let no_children = e.status == distaf_core::scoring::NodeStatus::NoScorableChildren;
            if no_children != o.no_children {
                return Err(format!("pillar {code} ({phase}): scorable flag differs"));
            }
            compared += 1;
        }
        let completeness = if want.included == 0 {
            1.0
        } else {
            want.scored as f64 / want.included as f64
        };
        if (got.completeness - completeness).abs() > tol {
            return Err(format!(
                "{phase}: completeness {} vs {completeness}",
                got.completeness
            ));
        }
        if got.metrics.len() != want.included {
            return Err(format!(
                "{phase}: {} metric entries vs {} included",
                got.metrics.len(),
                want.included
            ));
        }
    }
    Ok(compared)
}

/// Convenience: kind-correct normalized value for a reading, computed the
/// long way round.
pub fn expected_normalized(kind: MetricKind, complement: bool, raw: f64) -> f64 {
    match (kind, complement) {
        (MetricKind::Boolean, _) => {
            if raw > 0.0 {
                100.0
            } else {
                0.0
            }
        }
        (MetricKind::Percentage, true) => (q_int(100) - q(raw)).to_f64().unwrap(),
        (MetricKind::Percentage, false) => raw,
    }
}
