use crate::code::Phase;
use crate::model::{FrameworkTemplate, Mechanism, MAX_SCORE};
use crate::scoring::{MetricValue, ScoringError, ValueOrigin};

/// Scores every metric of `mechanism` in `phase` from the chosen answer of
/// its cluster question.
pub fn apply_cluster_answer(
    mechanism: &Mechanism,
    phase: Phase,
    answer_index: usize,
) -> Result<Vec<MetricValue>, ScoringError> {
    let question = mechanism
        .question(phase)
        .ok_or_else(|| ScoringError::NoQuestionForPhase {
            mechanism: mechanism.code.clone(),
            phase,
        })?;
    let answer = question
        .answers
        .get(answer_index)
        .ok_or(ScoringError::BadAnswerIndex {
            mechanism: mechanism.code.clone(),
            phase,
            index: answer_index,
            available: question.answers.len(),
        })?;
    mechanism
        .phase_metrics(phase)
        .map(|metric| {
            let value = answer.configuration.get(&metric.code).ok_or_else(|| {
                ScoringError::TemplateMismatch(format!(
                    "answer \"{}\" does not configure {}",
                    answer.label, metric.code
                ))
            })?;
            Ok(MetricValue::scored(
                metric.code.clone(),
                *value,
                ValueOrigin::ClusterAnswer,
            ))
        })
        .collect()
}

/// Marks every metric mapped to `standard_id` as fully satisfied.
pub fn apply_standard_compliance(
    template: &FrameworkTemplate,
    standard_id: &str,
) -> Result<Vec<MetricValue>, ScoringError> {
    let standard = template
        .standard(standard_id)
        .ok_or_else(|| ScoringError::UnknownStandard(standard_id.to_string()))?;
    // template order, not code order
    let mut values = Vec::with_capacity(standard.satisfied_metrics.len());
    for loc in template.metrics() {
        if standard.satisfied_metrics.contains(&loc.metric.code) {
            values.push(MetricValue::scored(
                loc.metric.code.clone(),
                MAX_SCORE,
                ValueOrigin::Standard,
            ));
        }
    }
    if values.len() != standard.satisfied_metrics.len() {
        return Err(ScoringError::TemplateMismatch(format!(
            "standard {standard_id} maps metrics missing from the template"
        )));
    }
    Ok(values)
}
