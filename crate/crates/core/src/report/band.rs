use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code::MetricCode;
use crate::scoring::{MetricValue, ScoreNode};

/// Background color of a score cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorBand {
    /// Excluded mechanism, or nothing to show yet.
    Transparent,
    /// One or more mandatory metrics unsatisfied.
    DeepPink,
    /// Score <= 33.
    TomatoRed,
    /// 33 < score <= 66.
    LemonChiffon,
    /// Score > 66.
    LightGreen,
}

impl ColorBand {
    pub const ALL: [ColorBand; 5] = [
        ColorBand::Transparent,
        ColorBand::DeepPink,
        ColorBand::TomatoRed,
        ColorBand::LemonChiffon,
        ColorBand::LightGreen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorBand::Transparent => "Transparent",
            ColorBand::DeepPink => "DeepPink",
            ColorBand::TomatoRed => "TomatoRed",
            ColorBand::LemonChiffon => "LemonChiffon",
            ColorBand::LightGreen => "LightGreen",
        }
    }

    /// sRGB of the cell background; `None` for transparent.
    pub fn rgb(self) -> Option<(u8, u8, u8)> {
        match self {
            ColorBand::Transparent => None,
            ColorBand::DeepPink => Some((255, 20, 147)),
            ColorBand::TomatoRed => Some((255, 99, 71)),
            ColorBand::LemonChiffon => Some((255, 250, 205)),
            // rgb(0.56, 0.93, 0.56)
            ColorBand::LightGreen => Some((143, 237, 143)),
        }
    }

    /// CSS color value, e.g. `#FF1493`.
    pub fn css(self) -> String {
        match self.rgb() {
            None => "transparent".to_string(),
            Some((r, g, b)) => format!("#{r:02X}{g:02X}{b:02X}"),
        }
    }

    /// Band of a bare score with no mandatory or exclusion context.
    pub fn for_score(score: f64) -> ColorBand {
        if score <= 33.0 {
            ColorBand::TomatoRed
        } else if score <= 66.0 {
            ColorBand::LemonChiffon
        } else {
            ColorBand::LightGreen
        }
    }
}

impl fmt::Display for ColorBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Band of a mechanism or pillar node, judged on its capped score.
pub fn color_band(node: &ScoreNode) -> ColorBand {
    if node.excluded {
        ColorBand::Transparent
    } else if !node.mandatory_violations.is_empty() {
        ColorBand::DeepPink
    } else {
        node.capped_score
            .map_or(ColorBand::Transparent, ColorBand::for_score)
    }
}

/// Band of one metric cell. `mechanism` is the node of the mechanism holding
/// the metric in the same phase.
pub fn metric_band(value: &MetricValue, mechanism: &ScoreNode) -> ColorBand {
    let code: &MetricCode = &value.code;
    if mechanism.excluded {
        ColorBand::Transparent
    } else if mechanism.mandatory_violations.contains(code) {
        ColorBand::DeepPink
    } else {
        value
            .score()
            .map_or(ColorBand::Transparent, ColorBand::for_score)
    }
}
