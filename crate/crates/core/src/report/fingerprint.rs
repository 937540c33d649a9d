use serde::{Deserialize, Serialize};

use super::{color_band, ColorBand, ReportError};
use crate::code::Phase;
use crate::scoring::{NodeStatus, ScoreNode, Scorecard};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "pillar", rename_all = "snake_case")]
pub enum FingerprintLevel {
    Pillars,
    MechanismsOf(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintAxis {
    /// Pillar code or qualified mechanism id.
    pub subject: String,
    pub label: String,
    /// Capped score; `None` while nothing feeds the node.
    pub value: Option<f64>,
    /// False for partially scored nodes, whose value is provisional.
    pub complete: bool,
    pub band: ColorBand,
}

/// Data behind one polar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintSeries {
    pub phase: Phase,
    pub level: FingerprintLevel,
    pub axes: Vec<FingerprintAxis>,
}

fn axis(node: &ScoreNode) -> FingerprintAxis {
    FingerprintAxis {
        subject: node.subject.clone(),
        label: node.name.clone(),
        value: node.capped_score,
        complete: node.is_complete(),
        band: color_band(node),
    }
}

/// One axis per included pillar, or per included mechanism of one pillar, in
/// template order.
pub fn fingerprint_series(
    card: &Scorecard,
    level: &FingerprintLevel,
    phase: Phase,
) -> Result<FingerprintSeries, ReportError> {
    let scores = card.phase(phase);
    let axes = match level {
        FingerprintLevel::Pillars => scores
            .pillars
            .values()
            .filter(|n| n.status != NodeStatus::NoScorableChildren)
            .map(axis)
            .collect(),
        FingerprintLevel::MechanismsOf(pillar) => {
            let known = card.design.pillars.contains_key(pillar)
                || card.operational.pillars.contains_key(pillar);
            if !known {
                return Err(ReportError::UnknownPillar(pillar.clone()));
            }
            scores
                .mechanisms
                .iter()
                .filter(|(id, n)| id.pillar_code() == pillar && !n.excluded)
                .map(|(_, n)| axis(n))
                .collect()
        }
    };
    Ok(FingerprintSeries {
        phase,
        level: level.clone(),
        axes,
    })
}
