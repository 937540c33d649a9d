//! Framework data model: pillars, mechanisms, metrics, cluster questions and
//! standards mappings.
//!
//! Field names mirror the template file one-to-one, so these types are also
//! the (de)serialization schema for `templates/*.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code::{MechanismId, MetricCode, Phase};

/// Lower and upper bound of every score.
pub const MIN_SCORE: f64 = 0.0;
pub const MAX_SCORE: f64 = 100.0;

pub(crate) fn default_satisfaction() -> f64 {
    MAX_SCORE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Yes/No; stored as 0 or 100.
    Boolean,
    /// 0-100, where 100 is always the optimum after sanitization.
    Percentage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformForm {
    #[default]
    Identity,
    /// `100 - raw`, for metrics where a low raw reading is the good outcome
    /// (e.g. a false rejection rate).
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanitizationTransform {
    pub form: TransformForm,
}

impl SanitizationTransform {
    pub const COMPLEMENT: Self = Self {
        form: TransformForm::Complement,
    };

    /// Maps a raw percentage onto the "100 is best" scale.
    pub fn apply(&self, raw: f64) -> f64 {
        match self.form {
            TransformForm::Identity => raw,
            TransformForm::Complement => MAX_SCORE - raw,
        }
    }
}

/// Caps imposed on the enclosing mechanism and pillar while a mandatory
/// metric is unsatisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MandatoryCaps {
    pub mechanism_cap: f64,
    pub pillar_cap: f64,
    /// The metric is satisfied once its normalized score reaches this value.
    #[serde(default = "default_satisfaction")]
    pub satisfied_when_at_least: f64,
}

impl MandatoryCaps {
    pub fn new(mechanism_cap: f64, pillar_cap: f64) -> Self {
        Self {
            mechanism_cap,
            pillar_cap,
            satisfied_when_at_least: MAX_SCORE,
        }
    }

    /// Caps of 100% at both levels mean the metric is not actually mandatory.
    pub fn is_binding(&self) -> bool {
        self.mechanism_cap < MAX_SCORE || self.pillar_cap < MAX_SCORE
    }

    pub fn is_satisfied_by(&self, normalized: f64) -> bool {
        normalized >= self.satisfied_when_at_least
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    pub code: MetricCode,
    pub title: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<SanitizationTransform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mandatory: Option<MandatoryCaps>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
}

impl Metric {
    pub fn phase(&self) -> Phase {
        self.code.phase()
    }

    /// Mandatory caps that actually restrict something.
    pub fn binding_caps(&self) -> Option<&MandatoryCaps> {
        self.mandatory.as_ref().filter(|caps| caps.is_binding())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Answer {
    pub label: String,
    /// Normalized score for every metric of the question's phase.
    pub configuration: BTreeMap<MetricCode, f64>,
}

/// Multiple-choice shortcut for scoring all metrics of one mechanism phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterQuestion {
    pub phase: Phase,
    pub prompt: String,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mechanism {
    pub code: String,
    pub name: String,
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric_weights: BTreeMap<MetricCode, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cluster_questions: Vec<ClusterQuestion>,
}

impl Mechanism {
    pub fn phase_metrics(&self, phase: Phase) -> impl Iterator<Item = &Metric> + '_ {
        self.metrics.iter().filter(move |m| m.phase() == phase)
    }

    pub fn has_phase(&self, phase: Phase) -> bool {
        self.phase_metrics(phase).next().is_some()
    }

    pub fn metric(&self, code: &MetricCode) -> Option<&Metric> {
        self.metrics.iter().find(|m| &m.code == code)
    }

    pub fn question(&self, phase: Phase) -> Option<&ClusterQuestion> {
        self.cluster_questions.iter().find(|q| q.phase == phase)
    }

    /// Raw template weight of a metric; absent entries weigh 1.
    pub fn metric_weight(&self, code: &MetricCode) -> f64 {
        self.metric_weights.get(code).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pillar {
    pub code: String,
    pub name: String,
    pub mechanisms: Vec<Mechanism>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mechanism_weights: BTreeMap<String, f64>,
}

impl Pillar {
    pub fn mechanism(&self, code: &str) -> Option<&Mechanism> {
        self.mechanisms.iter().find(|m| m.code == code)
    }

    pub fn mechanism_id(&self, mechanism: &Mechanism) -> MechanismId {
        MechanismId::unchecked(&self.code, &mechanism.code)
    }

    /// Raw template weight of a mechanism; absent entries weigh 1.
    pub fn mechanism_weight(&self, code: &str) -> f64 {
        self.mechanism_weights.get(code).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardsMapping {
    pub standard_id: String,
    pub display_name: String,
    pub satisfied_metrics: BTreeSet<MetricCode>,
}

/// Identifies one version of one template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateRef {
    pub id: String,
    pub version: String,
}

impl TemplateRef {
    pub fn new(id: impl Into<String>, version: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            version: version.into(),
        }
    }
}

impl fmt::Display for TemplateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

/// The immutable catalog every assessment is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkTemplate {
    pub id: String,
    pub version: String,
    pub pillars: Vec<Pillar>,
    #[serde(default)]
    pub standards: Vec<StandardsMapping>,
}

/// A metric together with its enclosing containers.
#[derive(Debug, Clone, Copy)]
pub struct MetricLocation<'a> {
    pub pillar: &'a Pillar,
    pub mechanism: &'a Mechanism,
    pub metric: &'a Metric,
}

impl FrameworkTemplate {
    pub fn template_ref(&self) -> TemplateRef {
        TemplateRef::new(self.id.clone(), self.version.clone())
    }

    pub fn pillar(&self, code: &str) -> Option<&Pillar> {
        self.pillars.iter().find(|p| p.code == code)
    }

    pub fn mechanism(&self, id: &MechanismId) -> Option<(&Pillar, &Mechanism)> {
        let pillar = self.pillar(id.pillar_code())?;
        pillar.mechanism(id.mechanism_code()).map(|m| (pillar, m))
    }

    pub fn find_metric(&self, code: &MetricCode) -> Option<MetricLocation<'_>> {
        let pillar = self.pillar(code.pillar_code())?;
        let mechanism = pillar.mechanism(code.mechanism_code())?;
        let metric = mechanism.metric(code)?;
        Some(MetricLocation {
            pillar,
            mechanism,
            metric,
        })
    }

    pub fn standard(&self, standard_id: &str) -> Option<&StandardsMapping> {
        self.standards.iter().find(|s| s.standard_id == standard_id)
    }

    /// All metrics in template order.
    pub fn metrics(&self) -> impl Iterator<Item = MetricLocation<'_>> + '_ {
        self.pillars.iter().flat_map(|pillar| {
            pillar.mechanisms.iter().flat_map(move |mechanism| {
                mechanism.metrics.iter().map(move |metric| MetricLocation {
                    pillar,
                    mechanism,
                    metric,
                })
            })
        })
    }

    /// All mechanisms in template order, with their qualified ids.
    pub fn mechanisms(&self) -> impl Iterator<Item = (MechanismId, &Pillar, &Mechanism)> + '_ {
        self.pillars.iter().flat_map(|pillar| {
            pillar
                .mechanisms
                .iter()
                .map(move |m| (pillar.mechanism_id(m), pillar, m))
        })
    }
}
