//! Weight normalization for metrics within a mechanism phase and for
//! mechanisms within a pillar.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::code::{MechanismId, MetricCode, Phase};
use crate::model::{Mechanism, Pillar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("no scorable children under {subject} ({phase})")]
    NoScorableChildren { subject: String, phase: Phase },
    #[error("weight {value} for `{key}` must be a finite non-negative number")]
    InvalidWeight { key: String, value: f64 },
}

/// Rescales `(key, raw weight)` pairs so they sum to one.
///
/// Returns `None` when there are no entries or every weight is zero.
pub fn normalize<K>(entries: Vec<(K, f64)>) -> Option<Vec<(K, f64)>> {
    let total: f64 = entries.iter().map(|(_, w)| *w).sum();
    if entries.is_empty() || total <= 0.0 {
        return None;
    }
    Some(entries.into_iter().map(|(k, w)| (k, w / total)).collect())
}

fn check(key: impl ToString, value: f64) -> Result<f64, WeightError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(WeightError::InvalidWeight {
            key: key.to_string(),
            value,
        })
    }
}

/// Normalized weights of a mechanism's metrics for one phase, in template order.
pub fn metric_weights(
    mechanism: &Mechanism,
    phase: Phase,
) -> Result<Vec<(MetricCode, f64)>, WeightError> {
    metric_weights_where(mechanism, phase, |_| true)
}

/// As [`metric_weights`], restricted to the metrics accepted by `include`.
pub fn metric_weights_where(
    mechanism: &Mechanism,
    phase: Phase,
    mut include: impl FnMut(&MetricCode) -> bool,
) -> Result<Vec<(MetricCode, f64)>, WeightError> {
    let mut entries = Vec::new();
    for metric in mechanism.phase_metrics(phase).filter(|m| include(&m.code)) {
        let w = check(&metric.code, mechanism.metric_weight(&metric.code))?;
        entries.push((metric.code.clone(), w));
    }
    normalize(entries).ok_or_else(|| WeightError::NoScorableChildren {
        subject: mechanism.code.clone(),
        phase,
    })
}

/// Normalized weights of a pillar's mechanisms for one phase.
///
/// Mechanisms without metrics in `phase` and those listed in `excluded` are
/// dropped; the remaining weights are rescaled proportionally.
pub fn mechanism_weights(
    pillar: &Pillar,
    phase: Phase,
    excluded: &BTreeSet<MechanismId>,
) -> Result<Vec<(MechanismId, f64)>, WeightError> {
    mechanism_weights_where(pillar, phase, |id| !excluded.contains(id))
}

pub fn mechanism_weights_where(
    pillar: &Pillar,
    phase: Phase,
    mut include: impl FnMut(&MechanismId) -> bool,
) -> Result<Vec<(MechanismId, f64)>, WeightError> {
    let mut entries = Vec::new();
    for mechanism in pillar.mechanisms.iter().filter(|m| m.has_phase(phase)) {
        let id = pillar.mechanism_id(mechanism);
        if !include(&id) {
            continue;
        }
        let w = check(&id, pillar.mechanism_weight(&mechanism.code))?;
        entries.push((id, w));
    }
    normalize(entries).ok_or_else(|| WeightError::NoScorableChildren {
        subject: pillar.code.clone(),
        phase,
    })
}
