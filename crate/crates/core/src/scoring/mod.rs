//! Deterministic score computation: normalization, top-down propagation of
//! cluster answers and standards, bottom-up weighted aggregation, and
//! mandatory-metric caps. Everything here is a pure function of its inputs.

mod engine;
mod propagate;
mod value;

use thiserror::Error;

use crate::code::{MetricCode, Phase};
use crate::model::MetricKind;
use crate::weights::WeightError;

pub use engine::{
    assessment_scorecard, effective_metric_values, mechanism_score, pillar_score, AppliedCap,
    MandatoryPolicy, NodeStatus, PhaseScores, ScoreNode, Scorecard,
};
pub use propagate::{apply_cluster_answer, apply_standard_compliance};
pub use value::{
    check_normalized, normalize_metric_value, MetricValue, RawValue, ValueOrigin, ValueState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("value {value} for {code} is outside [0, 100]")]
    OutOfRange { code: MetricCode, value: f64 },
    #[error("boolean metric {code} only accepts true/false or 0/100, got {value}")]
    NotBoolean { code: MetricCode, value: f64 },
    #[error("{code} is a {expected:?} metric and cannot take this kind of value")]
    KindMismatch {
        code: MetricCode,
        expected: MetricKind,
    },
    #[error("mechanism {mechanism} has no cluster question for the {phase} phase")]
    NoQuestionForPhase { mechanism: String, phase: Phase },
    #[error(
        "answer {index} does not exist for {mechanism} ({phase}); {available} answers available"
    )]
    BadAnswerIndex {
        mechanism: String,
        phase: Phase,
        index: usize,
        available: usize,
    },
    #[error("unknown standard `{0}`")]
    UnknownStandard(String),
    #[error("no scorable children under {subject} ({phase})")]
    NoScorableChildren { subject: String, phase: Phase },
    #[error("weight {value} for `{key}` must be a finite non-negative number")]
    InvalidWeight { key: String, value: f64 },
    #[error("assessment does not match template: {0}")]
    TemplateMismatch(String),
}

impl From<WeightError> for ScoringError {
    fn from(err: WeightError) -> Self {
        match err {
            WeightError::NoScorableChildren { subject, phase } => {
                ScoringError::NoScorableChildren { subject, phase }
            }
            WeightError::InvalidWeight { key, value } => ScoringError::InvalidWeight { key, value },
        }
    }
}

/// Rounds a score to one decimal place for display.
pub fn round_for_display(score: f64) -> f64 {
    (score * 10.0).round() / 10.0
}
