use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{color_band, fingerprint_series, metric_band, FingerprintLevel, ReportError};
use crate::assessment::{AssessmentDocument, AssessmentState};
use crate::code::Phase;
use crate::model::FrameworkTemplate;
use crate::scoring::{assessment_scorecard, round_for_display, NodeStatus, Scorecard};

pub const TABULAR_HEADER: &str = "code,phase,value,origin,mechanism,pillar,band";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    /// The assessment document plus its scorecard, as JSON. Re-importable.
    Dump,
    /// CSV, one row per included metric and phase.
    Tabular,
    /// Plain-text pillar table and fingerprint values.
    Summary,
}

impl ExportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Dump => "dump",
            ExportFormat::Tabular => "tabular",
            ExportFormat::Summary => "summary",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::Dump => "application/json",
            ExportFormat::Tabular => "text/csv; charset=utf-8",
            ExportFormat::Summary => "text/plain; charset=utf-8",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dump" => Ok(ExportFormat::Dump),
            "tabular" => Ok(ExportFormat::Tabular),
            "summary" => Ok(ExportFormat::Summary),
            other => Err(ReportError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Full dump: the export document fields plus the computed scorecard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpDocument {
    #[serde(flatten)]
    pub document: AssessmentDocument,
    pub scorecard: Scorecard,
}

/// Serializes an assessment in `format`, scoring it afresh.
pub fn export_assessment(
    template: &FrameworkTemplate,
    assessment: &AssessmentState,
    format: ExportFormat,
) -> Result<String, ReportError> {
    let card = assessment_scorecard(template, assessment)?;
    match format {
        ExportFormat::Dump => {
            let dump = DumpDocument {
                document: AssessmentDocument::new(assessment.clone()),
                scorecard: card,
            };
            let mut json = serde_json::to_string_pretty(&dump)
                .map_err(|e| ReportError::Serialize(e.to_string()))?;
            json.push('\n');
            Ok(json)
        }
        ExportFormat::Tabular => tabular(&card),
        ExportFormat::Summary => Ok(summary(&card)),
    }
}

fn tabular(card: &Scorecard) -> Result<String, ReportError> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let ser = |e: csv::Error| ReportError::Serialize(e.to_string());
    out.write_record(TABULAR_HEADER.split(',')).map_err(ser)?;
    for scores in card.phases() {
        for (code, value) in &scores.metrics {
            let id = code.mechanism_id();
            let node = &scores.mechanisms[&id];
            let (number, origin) = match value.score() {
                Some(v) => (v.to_string(), value.origin.as_str()),
                None => (String::new(), ""),
            };
            out.write_record([
                code.to_string().as_str(),
                scores.phase.as_str(),
                &number,
                origin,
                &id.to_string(),
                code.pillar_code(),
                metric_band(value, node).name(),
            ])
            .map_err(ser)?;
        }
    }
    let bytes = out
        .into_inner()
        .map_err(|e| ReportError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Serialize(e.to_string()))
}

fn cell(score: Option<f64>) -> String {
    score.map_or_else(
        || "-".to_string(),
        |s| format!("{:.1}", round_for_display(s)),
    )
}

fn status(s: NodeStatus) -> &'static str {
    match s {
        NodeStatus::Complete => "complete",
        NodeStatus::Incomplete => "incomplete",
        NodeStatus::Unscored => "unscored",
        NodeStatus::NoScorableChildren => "not scorable",
    }
}

/// Plain-text pillar table for the given phases, band names in the last
/// column.
pub fn pillar_table(card: &Scorecard, phases: &[Phase]) -> String {
    let mut out = String::new();
    for &phase in phases {
        let scores = card.phase(phase);
        let _ = writeln!(
            out,
            "{} phase (completeness {:.1}%)",
            capitalize(phase.as_str()),
            scores.completeness * 100.0
        );
        let _ = writeln!(
            out,
            "  {:<6} {:<24} {:>6} {:>7}  {:<14} {:<12} CAP",
            "PILLAR", "NAME", "RAW", "CAPPED", "STATUS", "BAND"
        );
        for node in scores.pillars.values() {
            let cap = node
                .applied_cap
                .as_ref()
                .map_or(String::new(), |c| format!("{} ({:.0})", c.metric, c.cap));
            let line = format!(
                "  {:<6} {:<24} {:>6} {:>7}  {:<14} {:<12} {}",
                node.subject,
                node.name,
                cell(node.raw_score),
                cell(node.capped_score),
                status(node.status),
                color_band(node).name(),
                cap
            );
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars
        .next()
        .map_or_else(String::new, |c| c.to_uppercase().chain(chars).collect())
}

fn summary(card: &Scorecard) -> String {
    let mut out = format!(
        "Assessment {} ({}), status {}\n\n",
        card.assessment_id, card.template, card.status
    );
    out.push_str(&pillar_table(card, &Phase::ALL));
    out.push('\n');
    for phase in Phase::ALL {
        let series = fingerprint_series(card, &FingerprintLevel::Pillars, phase)
            .expect("pillar level always resolves");
        let axes: Vec<String> = series
            .axes
            .iter()
            .map(|a| format!("{}={}", a.subject, cell(a.value)))
            .collect();
        let _ = writeln!(out, "Fingerprint ({phase}): {}", axes.join(" "));
    }
    if !card.warnings.is_empty() {
        out.push_str("\nWarnings:\n");
        for w in &card.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}
