use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::assessment::{AssessmentState, AssessmentStatus};
use crate::code::{MechanismId, MetricCode, Phase};
use crate::model::{FrameworkTemplate, Mechanism, Metric, Pillar, TemplateRef};
use crate::scoring::{
    apply_cluster_answer, apply_standard_compliance, check_normalized, MetricValue, ScoringError,
    ValueState,
};
use crate::weights::{self, WeightError};

/// How unscored mandatory metrics are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MandatoryPolicy {
    /// Drafts: an unscored mandatory metric does not cap anything.
    Lenient,
    /// Finished assessments: unscored counts as unsatisfied.
    Strict,
}

impl MandatoryPolicy {
    pub fn for_status(status: AssessmentStatus) -> Self {
        match status {
            AssessmentStatus::Draft => MandatoryPolicy::Lenient,
            AssessmentStatus::Private | AssessmentStatus::Public => MandatoryPolicy::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    /// Every child is scored.
    Complete,
    /// Some children scored. Mechanisms carry a provisional score over the
    /// scored metrics but do not feed their pillar.
    Incomplete,
    /// Nothing scored yet.
    Unscored,
    /// A pillar whose mechanisms are all excluded (or absent) in this phase.
    NoScorableChildren,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedCap {
    pub metric: MetricCode,
    pub cap: f64,
}

/// Computed score of one pillar or mechanism in one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreNode {
    /// Pillar code (`S`) or qualified mechanism id (`S.AC`).
    pub subject: String,
    pub name: String,
    pub phase: Phase,
    pub raw_score: Option<f64>,
    pub capped_score: Option<f64>,
    pub applied_cap: Option<AppliedCap>,
    pub mandatory_violations: BTreeSet<MetricCode>,
    pub excluded: bool,
    pub status: NodeStatus,
    pub completeness: f64,
}

impl ScoreNode {
    fn empty(subject: String, name: String, phase: Phase, status: NodeStatus) -> Self {
        Self {
            subject,
            name,
            phase,
            raw_score: None,
            capped_score: None,
            applied_cap: None,
            mandatory_violations: BTreeSet::new(),
            excluded: false,
            status,
            completeness: 0.0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.status == NodeStatus::Complete
    }
}

/// Weighted mean of `(weight, score)` pairs, clamped to the range of the
/// scores so rounding can never push it outside its inputs.
///
/// Takes the template's unnormalized weights and divides once at the end:
/// with uniform weights `(100 + 100 + 10) / 3` is exactly 70, whereas
/// summing thirds is not.
fn weighted_mean(pairs: &[(f64, f64)]) -> f64 {
    let total: f64 = pairs.iter().map(|(w, _)| w).sum();
    let sum = pairs.iter().map(|(w, s)| w * s).sum::<f64>() / total;
    let lo = pairs.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    let hi = pairs
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    sum.clamp(lo, hi)
}

/// `min(raw, lowest cap)`, reporting the first metric (template order) that
/// imposes the binding cap.
fn apply_caps(raw: Option<f64>, caps: &[(MetricCode, f64)]) -> (Option<f64>, Option<AppliedCap>) {
    let Some(raw) = raw else {
        return (None, None);
    };
    let lowest = caps
        .iter()
        .fold(None::<&(MetricCode, f64)>, |best, cap| match best {
            Some(b) if b.1 <= cap.1 => Some(b),
            _ => Some(cap),
        });
    match lowest {
        Some((metric, cap)) if *cap < raw => (
            Some(*cap),
            Some(AppliedCap {
                metric: metric.clone(),
                cap: *cap,
            }),
        ),
        _ => (Some(raw), None),
    }
}

fn is_violation(metric: &Metric, score: Option<f64>, policy: MandatoryPolicy) -> bool {
    let Some(caps) = metric.binding_caps() else {
        return false;
    };
    match score {
        Some(s) => !caps.is_satisfied_by(s),
        None => policy == MandatoryPolicy::Strict,
    }
}

/// Aggregates a mechanism's metrics for one phase and applies its caps.
///
/// `values` holds the effective scores; anything absent or unscored counts as
/// unscored.
pub fn mechanism_score(
    pillar: &Pillar,
    mechanism: &Mechanism,
    phase: Phase,
    values: &BTreeMap<MetricCode, MetricValue>,
    policy: MandatoryPolicy,
) -> Result<ScoreNode, ScoringError> {
    let id = pillar.mechanism_id(mechanism);
    let metrics: Vec<&Metric> = mechanism.phase_metrics(phase).collect();
    if metrics.is_empty() {
        return Err(ScoringError::NoScorableChildren {
            subject: id.to_string(),
            phase,
        });
    }

    let score_of = |m: &Metric| values.get(&m.code).and_then(MetricValue::score);
    let scored: BTreeMap<&MetricCode, f64> = metrics
        .iter()
        .filter_map(|m| score_of(m).map(|s| (&m.code, s)))
        .collect();

    let raw = match weights::metric_weights_where(mechanism, phase, |c| scored.contains_key(c)) {
        Ok(ws) => {
            let pairs: Vec<(f64, f64)> = ws
                .iter()
                .map(|(c, _)| (mechanism.metric_weight(c), scored[c]))
                .collect();
            Some(weighted_mean(&pairs))
        }
        Err(WeightError::NoScorableChildren { .. }) => None,
        Err(err) => return Err(err.into()),
    };

    let mut violations = BTreeSet::new();
    let mut caps = Vec::new();
    for metric in &metrics {
        if is_violation(metric, score_of(metric), policy) {
            let cap = metric
                .binding_caps()
                .map(|c| c.mechanism_cap)
                .unwrap_or_default();
            violations.insert(metric.code.clone());
            caps.push((metric.code.clone(), cap));
        }
    }
    let (capped, applied_cap) = apply_caps(raw, &caps);

    let status = if scored.len() == metrics.len() {
        NodeStatus::Complete
    } else if scored.is_empty() {
        NodeStatus::Unscored
    } else {
        NodeStatus::Incomplete
    };

    Ok(ScoreNode {
        subject: id.to_string(),
        name: mechanism.name.clone(),
        phase,
        raw_score: raw,
        capped_score: capped,
        applied_cap,
        mandatory_violations: violations,
        excluded: false,
        status,
        completeness: scored.len() as f64 / metrics.len() as f64,
    })
}

/// Aggregates complete, included mechanism nodes into a pillar score and
/// applies the pillar caps of their unsatisfied mandatory metrics.
///
/// Excluded mechanisms (listed in `exclusions` or flagged on their node)
/// contribute neither score nor caps. Incomplete mechanisms are left out
/// until fully scored.
pub fn pillar_score(
    pillar: &Pillar,
    phase: Phase,
    mechanism_nodes: &IndexMap<MechanismId, ScoreNode>,
    exclusions: &BTreeSet<MechanismId>,
) -> Result<ScoreNode, ScoringError> {
    let no_children = || ScoringError::NoScorableChildren {
        subject: pillar.code.clone(),
        phase,
    };

    let mut included = Vec::new();
    for mechanism in pillar.mechanisms.iter().filter(|m| m.has_phase(phase)) {
        let id = pillar.mechanism_id(mechanism);
        if exclusions.contains(&id) {
            continue;
        }
        let node = mechanism_nodes.get(&id).ok_or_else(|| {
            ScoringError::TemplateMismatch(format!("no {phase} score for mechanism {id}"))
        })?;
        if !node.excluded {
            included.push((id, mechanism, node));
        }
    }
    if included.is_empty() {
        return Err(no_children());
    }

    let contributing: BTreeMap<&MechanismId, (&Mechanism, &ScoreNode)> = included
        .iter()
        .filter(|(_, _, node)| node.is_complete() && node.capped_score.is_some())
        .map(|(id, m, node)| (id, (*m, *node)))
        .collect();

    let raw =
        match weights::mechanism_weights_where(pillar, phase, |id| contributing.contains_key(id)) {
            Ok(ws) => {
                let pairs: Vec<(f64, f64)> = ws
                    .iter()
                    .map(|(id, _)| {
                        let (mechanism, node) = contributing[id];
                        (
                            pillar.mechanism_weight(&mechanism.code),
                            node.capped_score.unwrap_or_default(),
                        )
                    })
                    .collect();
                Some(weighted_mean(&pairs))
            }
            Err(WeightError::NoScorableChildren { .. }) => None,
            Err(err) => return Err(err.into()),
        };

    let mut violations = BTreeSet::new();
    let mut caps = Vec::new();
    for (_, mechanism, node) in &included {
        if !node.is_complete() {
            continue;
        }
        for metric in mechanism.phase_metrics(phase) {
            if node.mandatory_violations.contains(&metric.code) {
                let cap = metric
                    .binding_caps()
                    .map(|c| c.pillar_cap)
                    .unwrap_or_default();
                violations.insert(metric.code.clone());
                caps.push((metric.code.clone(), cap));
            }
        }
    }
    let (capped, applied_cap) = apply_caps(raw, &caps);

    let (mut total, mut scored) = (0.0, 0.0);
    for (_, mechanism, node) in &included {
        let n = mechanism.phase_metrics(phase).count() as f64;
        total += n;
        scored += node.completeness * n;
    }
    let completeness = if total > 0.0 { scored / total } else { 1.0 };
    let status = if included.iter().all(|(_, _, n)| n.is_complete()) {
        NodeStatus::Complete
    } else if included
        .iter()
        .all(|(_, _, n)| n.status == NodeStatus::Unscored)
    {
        NodeStatus::Unscored
    } else {
        NodeStatus::Incomplete
    };

    Ok(ScoreNode {
        subject: pillar.code.clone(),
        name: pillar.name.clone(),
        phase,
        raw_score: raw,
        capped_score: capped,
        applied_cap,
        mandatory_violations: violations,
        excluded: false,
        status,
        completeness,
    })
}

/// All scores of one phase, in template order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScores {
    pub phase: Phase,
    /// Scored share of the included metrics of this phase.
    pub completeness: f64,
    pub pillars: IndexMap<String, ScoreNode>,
    pub mechanisms: IndexMap<MechanismId, ScoreNode>,
    /// Included metrics only; unscored ones appear with state `unscored`.
    pub metrics: IndexMap<MetricCode, MetricValue>,
}

/// The complete computed result for one assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub assessment_id: String,
    pub template: TemplateRef,
    pub status: AssessmentStatus,
    pub design: PhaseScores,
    pub operational: PhaseScores,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Scorecard {
    pub fn phase(&self, phase: Phase) -> &PhaseScores {
        match phase {
            Phase::Design => &self.design,
            Phase::Operational => &self.operational,
        }
    }

    pub fn phases(&self) -> [&PhaseScores; 2] {
        [&self.design, &self.operational]
    }
}

fn mismatch(message: String) -> ScoringError {
    ScoringError::TemplateMismatch(message)
}

/// Resolves the score of every metric: declared standards first, then chosen
/// cluster answers, then the stored per-metric values, each layer overriding
/// the previous one. A stored unscored entry is an explicit reset and hides
/// whatever the lower layers provided.
pub fn effective_metric_values(
    template: &FrameworkTemplate,
    assessment: &AssessmentState,
) -> Result<BTreeMap<MetricCode, MetricValue>, ScoringError> {
    let mut values = BTreeMap::new();

    for standard in &assessment.declared_standards {
        for value in apply_standard_compliance(template, standard)? {
            values.insert(value.code.clone(), value);
        }
    }
    for (id, answers) in &assessment.chosen_answers {
        let (_, mechanism) = template
            .mechanism(id)
            .ok_or_else(|| mismatch(format!("unknown mechanism {id} in chosen answers")))?;
        for (phase, index) in answers {
            for value in apply_cluster_answer(mechanism, *phase, *index)? {
                values.insert(value.code.clone(), value);
            }
        }
    }
    for (code, value) in &assessment.metric_values {
        if &value.code != code {
            return Err(mismatch(format!(
                "value keyed {code} carries code {}",
                value.code
            )));
        }
        let loc = template
            .find_metric(code)
            .ok_or_else(|| mismatch(format!("unknown metric {code}")))?;
        match (value.state, value.normalized) {
            (ValueState::Scored, Some(score)) => {
                check_normalized(loc.metric, score)?;
                values.insert(code.clone(), value.clone());
            }
            (ValueState::Scored, None) => {
                return Err(mismatch(format!(
                    "{code} is marked scored but has no value"
                )))
            }
            (ValueState::Unscored, _) => {
                values.remove(code);
            }
        }
    }
    Ok(values)
}

fn check_references(
    template: &FrameworkTemplate,
    assessment: &AssessmentState,
) -> Result<(), ScoringError> {
    if assessment.template != template.template_ref() {
        return Err(mismatch(format!(
            "assessment {} is bound to {}, not {}",
            assessment.id,
            assessment.template,
            template.template_ref()
        )));
    }
    for id in &assessment.excluded_mechanisms {
        if template.mechanism(id).is_none() {
            return Err(mismatch(format!("unknown excluded mechanism {id}")));
        }
    }
    Ok(())
}

/// Scores an assessment against its template, both phases independently.
pub fn assessment_scorecard(
    template: &FrameworkTemplate,
    assessment: &AssessmentState,
) -> Result<Scorecard, ScoringError> {
    check_references(template, assessment)?;
    let values = effective_metric_values(template, assessment)?;
    let policy = MandatoryPolicy::for_status(assessment.status);
    let mut warnings = Vec::new();

    let mut score_phase = |phase: Phase| -> Result<PhaseScores, ScoringError> {
        let mut mechanisms = IndexMap::new();
        let mut metrics = IndexMap::new();
        let mut waiting = 0usize;
        for pillar in &template.pillars {
            for mechanism in pillar.mechanisms.iter().filter(|m| m.has_phase(phase)) {
                let id = pillar.mechanism_id(mechanism);
                let mut node = mechanism_score(pillar, mechanism, phase, &values, policy)?;
                node.excluded = assessment.is_excluded(&id);
                if !node.excluded {
                    for metric in mechanism.phase_metrics(phase) {
                        let value = values
                            .get(&metric.code)
                            .cloned()
                            .unwrap_or_else(|| MetricValue::unscored(metric.code.clone()));
                        if policy == MandatoryPolicy::Lenient
                            && metric.binding_caps().is_some()
                            && !value.is_scored()
                        {
                            warnings.push(format!(
                                "mandatory metric {} is unscored; its caps apply once the assessment leaves draft",
                                metric.code
                            ));
                        }
                        metrics.insert(metric.code.clone(), value);
                    }
                    match node.status {
                        NodeStatus::Incomplete => warnings.push(format!(
                            "{id} ({phase}) is incomplete and left out of its pillar score"
                        )),
                        NodeStatus::Unscored => waiting += 1,
                        _ => {}
                    }
                }
                mechanisms.insert(id, node);
            }
        }
        if waiting > 0 {
            warnings.push(format!(
                "{waiting} included mechanisms have no {phase} scores yet"
            ));
        }

        let mut pillars = IndexMap::new();
        for pillar in &template.pillars {
            let node =
                match pillar_score(pillar, phase, &mechanisms, &assessment.excluded_mechanisms) {
                    Ok(node) => node,
                    Err(ScoringError::NoScorableChildren { .. }) => ScoreNode::empty(
                        pillar.code.clone(),
                        pillar.name.clone(),
                        phase,
                        NodeStatus::NoScorableChildren,
                    ),
                    Err(err) => return Err(err),
                };
            pillars.insert(pillar.code.clone(), node);
        }

        let scored = metrics.values().filter(|v| v.is_scored()).count();
        let completeness = if metrics.is_empty() {
            1.0
        } else {
            scored as f64 / metrics.len() as f64
        };
        Ok(PhaseScores {
            phase,
            completeness,
            pillars,
            mechanisms,
            metrics,
        })
    };

    let design = score_phase(Phase::Design)?;
    let operational = score_phase(Phase::Operational)?;
    Ok(Scorecard {
        assessment_id: assessment.id.clone(),
        template: template.template_ref(),
        status: assessment.status,
        design,
        operational,
        warnings,
    })
}
