use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{color_band, ColorBand, ReportError};
use crate::code::{MetricCode, Phase};
use crate::scoring::{ScoreNode, Scorecard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeLevel {
    Pillar,
    Mechanism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDelta {
    pub phase: Phase,
    pub level: NodeLevel,
    pub subject: String,
    pub before: Option<f64>,
    pub after: Option<f64>,
    /// `after - before`, when both sides have a score.
    pub delta: Option<f64>,
    pub band_before: Option<ColorBand>,
    pub band_after: Option<ColorBand>,
    pub band_changed: bool,
    pub newly_violated: BTreeSet<MetricCode>,
    pub newly_satisfied: BTreeSet<MetricCode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub template_id: String,
    pub nodes: Vec<NodeDelta>,
}

impl ComparisonReport {
    /// Nodes whose score, band or violations differ.
    pub fn changed(&self) -> impl Iterator<Item = &NodeDelta> {
        self.nodes.iter().filter(|n| {
            n.before != n.after
                || n.band_changed
                || !n.newly_violated.is_empty()
                || !n.newly_satisfied.is_empty()
        })
    }
}

fn delta(
    phase: Phase,
    level: NodeLevel,
    subject: String,
    a: Option<&ScoreNode>,
    b: Option<&ScoreNode>,
) -> NodeDelta {
    let before = a.and_then(|n| n.capped_score);
    let after = b.and_then(|n| n.capped_score);
    let band_before = a.map(color_band);
    let band_after = b.map(color_band);
    let empty = BTreeSet::new();
    let va = a.map_or(&empty, |n| &n.mandatory_violations);
    let vb = b.map_or(&empty, |n| &n.mandatory_violations);
    NodeDelta {
        phase,
        level,
        subject,
        before,
        after,
        delta: before.zip(after).map(|(x, y)| y - x),
        band_before,
        band_after,
        band_changed: band_before != band_after,
        newly_violated: vb.difference(va).cloned().collect(),
        newly_satisfied: va.difference(vb).cloned().collect(),
    }
}

/// Node-by-node differences from `a` to `b`, pillars then mechanisms per
/// phase, in `a`'s template order followed by nodes only `b` has.
pub fn compare(a: &Scorecard, b: &Scorecard) -> Result<ComparisonReport, ReportError> {
    if a.template.id != b.template.id {
        return Err(ReportError::TemplateMismatch(format!(
            "{} uses {} but {} uses {}",
            a.assessment_id, a.template, b.assessment_id, b.template
        )));
    }
    let mut nodes = Vec::new();
    for phase in Phase::ALL {
        let (pa, pb) = (a.phase(phase), b.phase(phase));
        let pillars = pa
            .pillars
            .keys()
            .chain(pb.pillars.keys().filter(|k| !pa.pillars.contains_key(*k)));
        for code in pillars {
            nodes.push(delta(
                phase,
                NodeLevel::Pillar,
                code.clone(),
                pa.pillars.get(code),
                pb.pillars.get(code),
            ));
        }
        let mechanisms = pa.mechanisms.keys().chain(
            pb.mechanisms
                .keys()
                .filter(|k| !pa.mechanisms.contains_key(*k)),
        );
        for id in mechanisms {
            nodes.push(delta(
                phase,
                NodeLevel::Mechanism,
                id.to_string(),
                pa.mechanisms.get(id),
                pb.mechanisms.get(id),
            ));
        }
    }
    Ok(ComparisonReport {
        a: a.assessment_id.clone(),
        b: b.assessment_id.clone(),
        template_id: a.template.id.clone(),
        nodes,
    })
}
