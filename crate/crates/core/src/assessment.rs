//! The mutable side of the model: one scoring session against one template.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::code::{MechanismId, MetricCode, Phase};
use crate::model::{FrameworkTemplate, TemplateRef};
use crate::scoring::{effective_metric_values, MetricValue, ScoringError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssessmentStatus {
    Draft,
    Private,
    Public,
}

impl AssessmentStatus {
    pub const ALL: [AssessmentStatus; 3] = [
        AssessmentStatus::Draft,
        AssessmentStatus::Private,
        AssessmentStatus::Public,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssessmentStatus::Draft => "draft",
            AssessmentStatus::Private => "private",
            AssessmentStatus::Public => "public",
        }
    }
}

impl fmt::Display for AssessmentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssessmentStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "draft" => Ok(AssessmentStatus::Draft),
            "private" => Ok(AssessmentStatus::Private),
            "public" => Ok(AssessmentStatus::Public),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentState {
    pub id: String,
    pub description: String,
    pub template: TemplateRef,
    pub created_at: DateTime<Utc>,
    pub last_modified: DateTime<Utc>,
    pub status: AssessmentStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predecessor: Option<String>,
    /// Scored metrics only; anything absent is unscored.
    #[serde(default)]
    pub metric_values: BTreeMap<MetricCode, MetricValue>,
    /// Chosen answer index per mechanism and phase.
    #[serde(default)]
    pub chosen_answers: BTreeMap<MechanismId, BTreeMap<Phase, usize>>,
    #[serde(default)]
    pub declared_standards: BTreeSet<String>,
    #[serde(default)]
    pub excluded_mechanisms: BTreeSet<MechanismId>,
    pub revision: u64,
}

impl AssessmentState {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        template: TemplateRef,
        now: DateTime<Utc>,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            template,
            created_at: now,
            last_modified: now,
            status: AssessmentStatus::Draft,
            predecessor: None,
            metric_values: BTreeMap::new(),
            chosen_answers: BTreeMap::new(),
            declared_standards: BTreeSet::new(),
            excluded_mechanisms: BTreeSet::new(),
            revision: 1,
        }
    }

    pub fn is_excluded(&self, mechanism: &MechanismId) -> bool {
        self.excluded_mechanisms.contains(mechanism)
    }

    pub fn chosen_answer(&self, mechanism: &MechanismId, phase: Phase) -> Option<usize> {
        self.chosen_answers.get(mechanism)?.get(&phase).copied()
    }

    /// Scored share of the included metrics of one phase, or of both phases
    /// when `phase` is `None`. Vacuously 1 when nothing is included.
    pub fn completeness(
        &self,
        template: &FrameworkTemplate,
        phase: Option<Phase>,
    ) -> Result<f64, ScoringError> {
        let values = effective_metric_values(template, self)?;
        let (mut total, mut scored) = (0usize, 0usize);
        for loc in template.metrics() {
            if phase.is_some_and(|p| p != loc.metric.phase())
                || self.is_excluded(&loc.pillar.mechanism_id(loc.mechanism))
            {
                continue;
            }
            total += 1;
            if values.contains_key(&loc.metric.code) {
                scored += 1;
            }
        }
        Ok(if total == 0 {
            1.0
        } else {
            scored as f64 / total as f64
        })
    }

    /// Included metrics still lacking an effective score, in template order.
    pub fn unscored_metrics<'t>(
        &self,
        template: &'t FrameworkTemplate,
    ) -> Result<Vec<&'t MetricCode>, ScoringError> {
        let values = effective_metric_values(template, self)?;
        Ok(template
            .metrics()
            .filter(|loc| !self.is_excluded(&loc.pillar.mechanism_id(loc.mechanism)))
            .filter(|loc| !values.contains_key(&loc.metric.code))
            .map(|loc| &loc.metric.code)
            .collect())
    }
}

/// Export/import envelope for one assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentDocument {
    pub format: String,
    /// Template the assessment is bound to, repeated for integrity checks.
    pub template: TemplateRef,
    pub assessment: AssessmentState,
}

impl AssessmentDocument {
    pub const FORMAT: &'static str = "distaf-assessment/1";

    pub fn new(assessment: AssessmentState) -> Self {
        Self {
            format: Self::FORMAT.to_string(),
            template: assessment.template.clone(),
            assessment,
        }
    }

    /// Checks the envelope against its payload.
    pub fn check(&self) -> Result<(), String> {
        if self.format != Self::FORMAT {
            return Err(format!("unsupported document format `{}`", self.format));
        }
        if self.template != self.assessment.template {
            return Err(format!(
                "envelope template {} does not match assessment template {}",
                self.template, self.assessment.template
            ));
        }
        Ok(())
    }
}
