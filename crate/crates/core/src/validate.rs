//! Structural checks run on every template before it is used for scoring.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code::{is_valid_token, MetricCode, Phase};
use crate::model::{FrameworkTemplate, Mechanism, MetricKind, Pillar, TransformForm, MAX_SCORE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    /// Location inside the template, e.g. `S.AC/cluster_questions/design/answers[2]`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

fn in_range(value: f64) -> bool {
    value.is_finite() && (0.0..=MAX_SCORE).contains(&value)
}

fn valid_weight(value: f64) -> bool {
    value.is_finite() && value >= 0.0
}

/// Checks every structural invariant of a template. An empty report means the
/// template is fit for scoring.
pub fn validate_template(template: &FrameworkTemplate) -> ValidationReport {
    let mut report = ValidationReport::default();

    if template.id.trim().is_empty() {
        report.error("id", "template id is empty");
    }
    if template.version.trim().is_empty() {
        report.error("version", "template version is empty");
    }
    if template.pillars.is_empty() {
        report.error("pillars", "template defines no pillars");
    }

    let mut pillar_codes = HashSet::new();
    let mut metric_codes = HashSet::new();
    for pillar in &template.pillars {
        if !pillar_codes.insert(pillar.code.as_str()) {
            report.error(&pillar.code, "duplicate pillar code");
        }
        validate_pillar(pillar, &mut metric_codes, &mut report);
    }

    let mut standard_ids = HashSet::new();
    for standard in &template.standards {
        let path = format!("standards/{}", standard.standard_id);
        if standard.standard_id.trim().is_empty() {
            report.error(&path, "standard id is empty");
        }
        if !standard_ids.insert(standard.standard_id.as_str()) {
            report.error(&path, "duplicate standard id");
        }
        if standard.satisfied_metrics.is_empty() {
            report.error(&path, "standard satisfies no metrics");
        }
        for code in &standard.satisfied_metrics {
            if !metric_codes.contains(code) {
                report.error(&path, format!("standard references unknown metric {code}"));
            }
        }
    }

    report
}

fn validate_pillar(
    pillar: &Pillar,
    metric_codes: &mut HashSet<MetricCode>,
    report: &mut ValidationReport,
) {
    let path = pillar.code.as_str();
    if !is_valid_token(&pillar.code) {
        report.error(path, "pillar code must be 1-8 uppercase letters");
    }
    if pillar.mechanisms.is_empty() {
        report.warning(path, "pillar has no mechanisms");
    }

    let mut mechanism_codes = HashSet::new();
    for mechanism in &pillar.mechanisms {
        if !mechanism_codes.insert(mechanism.code.as_str()) {
            report.error(
                format!("{path}.{}", mechanism.code),
                "duplicate mechanism code",
            );
        }
        validate_mechanism(pillar, mechanism, metric_codes, report);
    }

    for (code, weight) in &pillar.mechanism_weights {
        let wpath = format!("{path}/mechanism_weights/{code}");
        if pillar.mechanism(code).is_none() {
            report.error(&wpath, "weight for unknown mechanism");
        }
        if !valid_weight(*weight) {
            report.error(&wpath, format!("negative or non-finite weight {weight}"));
        }
    }
    if !pillar.mechanism_weights.is_empty() {
        for mechanism in &pillar.mechanisms {
            if !pillar.mechanism_weights.contains_key(&mechanism.code) {
                report.warning(
                    format!("{path}/mechanism_weights/{}", mechanism.code),
                    "weight missing; defaulting to 1",
                );
            }
        }
    }
    for phase in Phase::ALL {
        let mut participating = pillar
            .mechanisms
            .iter()
            .filter(|m| m.has_phase(phase))
            .peekable();
        if participating.peek().is_none() {
            continue;
        }
        if !participating.any(|m| pillar.mechanism_weight(&m.code) > 0.0) {
            report.error(
                path,
                format!("no mechanism has a positive weight for the {phase} phase"),
            );
        }
    }
}

fn validate_mechanism(
    pillar: &Pillar,
    mechanism: &Mechanism,
    metric_codes: &mut HashSet<MetricCode>,
    report: &mut ValidationReport,
) {
    let path = format!("{}.{}", pillar.code, mechanism.code);
    if !is_valid_token(&mechanism.code) {
        report.error(&path, "mechanism code must be 1-8 uppercase letters");
    }
    if mechanism.metrics.is_empty() {
        report.warning(&path, "mechanism has no metrics");
    }

    for metric in &mechanism.metrics {
        let code = &metric.code;
        let mpath = code.to_string();
        if code.pillar_code() != pillar.code || code.mechanism_code() != mechanism.code {
            report.error(
                &mpath,
                format!("metric code does not belong to mechanism {path}"),
            );
        }
        if !metric_codes.insert(code.clone()) {
            report.error(&mpath, "duplicate metric code");
        }
        if metric.title.trim().is_empty() {
            report.warning(&mpath, "metric has no title");
        }
        if let Some(transform) = &metric.transform {
            if metric.kind == MetricKind::Boolean && transform.form != TransformForm::Identity {
                report.error(
                    &mpath,
                    "sanitization transforms only apply to percentage metrics",
                );
            }
        }
        if let Some(caps) = &metric.mandatory {
            for (name, value) in [
                ("mechanism_cap", caps.mechanism_cap),
                ("pillar_cap", caps.pillar_cap),
                ("satisfied_when_at_least", caps.satisfied_when_at_least),
            ] {
                if !in_range(value) {
                    report.error(&mpath, format!("{name} {value} outside [0, 100]"));
                }
            }
        }
    }

    for (code, weight) in &mechanism.metric_weights {
        let wpath = format!("{path}/metric_weights/{code}");
        if mechanism.metric(code).is_none() {
            report.error(&wpath, "weight for metric outside this mechanism");
        }
        if !valid_weight(*weight) {
            report.error(&wpath, format!("negative or non-finite weight {weight}"));
        }
    }
    if !mechanism.metric_weights.is_empty() {
        for metric in &mechanism.metrics {
            if !mechanism.metric_weights.contains_key(&metric.code) {
                report.warning(
                    format!("{path}/metric_weights/{}", metric.code),
                    "weight missing; defaulting to 1",
                );
            }
        }
    }
    for phase in Phase::ALL {
        let mut metrics = mechanism.phase_metrics(phase).peekable();
        if metrics.peek().is_none() {
            continue;
        }
        if !metrics.any(|m| mechanism.metric_weight(&m.code) > 0.0) {
            report.error(
                &path,
                format!("no metric has a positive weight for the {phase} phase"),
            );
        }
    }

    let mut question_phases = HashSet::new();
    for question in &mechanism.cluster_questions {
        let qpath = format!("{path}/cluster_questions/{}", question.phase);
        if !question_phases.insert(question.phase) {
            report.error(&qpath, "more than one cluster question for this phase");
        }
        let expected: BTreeSet<&MetricCode> = mechanism
            .phase_metrics(question.phase)
            .map(|m| &m.code)
            .collect();
        if expected.is_empty() {
            report.error(&qpath, "question targets a phase without metrics");
        }
        if question.answers.is_empty() {
            report.error(&qpath, "question has no answers");
        }
        let kinds: HashMap<&MetricCode, MetricKind> = mechanism
            .metrics
            .iter()
            .map(|m| (&m.code, m.kind))
            .collect();
        for (i, answer) in question.answers.iter().enumerate() {
            let apath = format!("{qpath}/answers[{i}] \"{}\"", answer.label);
            let given: BTreeSet<&MetricCode> = answer.configuration.keys().collect();
            let missing: Vec<String> = expected.difference(&given).map(|c| c.to_string()).collect();
            if !missing.is_empty() {
                report.error(
                    &apath,
                    format!(
                        "answer configuration incomplete: missing {}",
                        missing.join(", ")
                    ),
                );
            }
            let extra: Vec<String> = given.difference(&expected).map(|c| c.to_string()).collect();
            if !extra.is_empty() {
                report.error(
                    &apath,
                    format!(
                        "answer configuration covers metrics outside the question's phase: {}",
                        extra.join(", ")
                    ),
                );
            }
            for (code, value) in &answer.configuration {
                if !in_range(*value) {
                    report.error(&apath, format!("value {value} for {code} outside [0, 100]"));
                } else if kinds.get(code) == Some(&MetricKind::Boolean)
                    && *value != 0.0
                    && *value != MAX_SCORE
                {
                    report.error(&apath, format!("boolean metric {code} must be 0 or 100"));
                }
            }
        }
    }
}
