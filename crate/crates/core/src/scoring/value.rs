use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code::MetricCode;
use crate::model::{Metric, MetricKind, MAX_SCORE, MIN_SCORE};
use crate::scoring::ScoringError;

/// An assessor-supplied reading, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Bool(bool),
    Number(f64),
}

impl From<bool> for RawValue {
    fn from(value: bool) -> Self {
        RawValue::Bool(value)
    }
}

impl From<f64> for RawValue {
    fn from(value: f64) -> Self {
        RawValue::Number(value)
    }
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Bool(b) => write!(f, "{b}"),
            RawValue::Number(n) => write!(f, "{n}"),
        }
    }
}

/// Where a metric score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueOrigin {
    Direct,
    ClusterAnswer,
    Standard,
    Inherited,
}

impl ValueOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueOrigin::Direct => "direct",
            ValueOrigin::ClusterAnswer => "cluster_answer",
            ValueOrigin::Standard => "standard",
            ValueOrigin::Inherited => "inherited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueState {
    Unscored,
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub code: MetricCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<f64>,
    pub origin: ValueOrigin,
    pub state: ValueState,
}

impl MetricValue {
    pub fn scored(code: MetricCode, normalized: f64, origin: ValueOrigin) -> Self {
        Self {
            code,
            raw: None,
            normalized: Some(normalized),
            origin,
            state: ValueState::Scored,
        }
    }

    pub fn direct(code: MetricCode, raw: RawValue, normalized: f64) -> Self {
        Self {
            code,
            raw: Some(raw),
            normalized: Some(normalized),
            origin: ValueOrigin::Direct,
            state: ValueState::Scored,
        }
    }

    pub fn unscored(code: MetricCode) -> Self {
        Self {
            code,
            raw: None,
            normalized: None,
            origin: ValueOrigin::Direct,
            state: ValueState::Unscored,
        }
    }

    /// The normalized score if this value is scored.
    pub fn score(&self) -> Option<f64> {
        match self.state {
            ValueState::Scored => self.normalized,
            ValueState::Unscored => None,
        }
    }

    pub fn is_scored(&self) -> bool {
        self.score().is_some()
    }
}

fn out_of_range(metric: &Metric, value: f64) -> ScoringError {
    ScoringError::OutOfRange {
        code: metric.code.clone(),
        value,
    }
}

/// Homogenizes a raw reading to a 0-100 score where 100 is optimal.
///
/// Booleans map to 0/100; boolean metrics also accept the numbers 0 and 100.
/// Percentages must lie in [0, 100] and pass through the metric's transform.
pub fn normalize_metric_value(metric: &Metric, raw: RawValue) -> Result<f64, ScoringError> {
    match (metric.kind, raw) {
        (MetricKind::Boolean, RawValue::Bool(b)) => Ok(if b { MAX_SCORE } else { MIN_SCORE }),
        (MetricKind::Boolean, RawValue::Number(n)) => {
            if n == MIN_SCORE || n == MAX_SCORE {
                Ok(n)
            } else {
                Err(ScoringError::NotBoolean {
                    code: metric.code.clone(),
                    value: n,
                })
            }
        }
        (MetricKind::Percentage, RawValue::Bool(_)) => Err(ScoringError::KindMismatch {
            code: metric.code.clone(),
            expected: metric.kind,
        }),
        (MetricKind::Percentage, RawValue::Number(n)) => {
            if !n.is_finite() || !(MIN_SCORE..=MAX_SCORE).contains(&n) {
                return Err(out_of_range(metric, n));
            }
            let score = metric.transform.unwrap_or_default().apply(n);
            // -0.0 from 100 - 100 is fine numerically but ugly in exports
            Ok(if score == 0.0 { 0.0 } else { score })
        }
    }
}

/// Checks a score that is already on the normalized scale (cluster answers,
/// overlays) against the metric's kind.
pub fn check_normalized(metric: &Metric, value: f64) -> Result<f64, ScoringError> {
    if !value.is_finite() || !(MIN_SCORE..=MAX_SCORE).contains(&value) {
        return Err(out_of_range(metric, value));
    }
    if metric.kind == MetricKind::Boolean && value != MIN_SCORE && value != MAX_SCORE {
        return Err(ScoringError::NotBoolean {
            code: metric.code.clone(),
            value,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SanitizationTransform;

    fn metric(code: &str, kind: MetricKind, transform: Option<SanitizationTransform>) -> Metric {
        Metric {
            code: code.parse().unwrap(),
            title: code.into(),
            description: String::new(),
            kind,
            transform,
            mandatory: None,
            references: vec![],
        }
    }

    #[test]
    fn boolean_true_is_one_hundred() {
        let m = metric("S.AC.D8", MetricKind::Boolean, None);
        assert_eq!(normalize_metric_value(&m, true.into()).unwrap(), 100.0);
        assert_eq!(normalize_metric_value(&m, false.into()).unwrap(), 0.0);
        assert_eq!(normalize_metric_value(&m, 100.0.into()).unwrap(), 100.0);
    }

    #[test]
    fn boolean_rejects_partial_numbers() {
        let m = metric("S.AC.D8", MetricKind::Boolean, None);
        assert!(matches!(
            normalize_metric_value(&m, 50.0.into()),
            Err(ScoringError::NotBoolean { .. })
        ));
    }

    #[test]
    fn frr_is_complemented() {
        let m = metric(
            "S.SAA.O10",
            MetricKind::Percentage,
            Some(SanitizationTransform::COMPLEMENT),
        );
        assert_eq!(normalize_metric_value(&m, 5.0.into()).unwrap(), 95.0);
        assert_eq!(normalize_metric_value(&m, 100.0.into()).unwrap(), 0.0);
        assert!(normalize_metric_value(&m, 100.0.into())
            .unwrap()
            .is_sign_positive());
    }

    #[test]
    fn percentage_out_of_range() {
        let m = metric("S.AC.D9", MetricKind::Percentage, None);
        for bad in [137.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                normalize_metric_value(&m, bad.into()),
                Err(ScoringError::OutOfRange { .. })
            ));
        }
        assert!(matches!(
            normalize_metric_value(&m, true.into()),
            Err(ScoringError::KindMismatch { .. })
        ));
    }

    #[test]
    fn raw_value_json_shape() {
        assert_eq!(
            serde_json::from_str::<RawValue>("true").unwrap(),
            RawValue::Bool(true)
        );
        assert_eq!(
            serde_json::from_str::<RawValue>("12.5").unwrap(),
            RawValue::Number(12.5)
        );
    }
}
