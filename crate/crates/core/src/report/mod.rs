//! Human-facing views of a scorecard: color bands, fingerprint series,
//! comparisons and exports. Everything is computed on demand from scorecards.

mod band;
mod compare;
mod export;
mod fingerprint;

use thiserror::Error;

use crate::scoring::ScoringError;

pub use band::{color_band, metric_band, ColorBand};
pub use compare::{compare, ComparisonReport, NodeDelta, NodeLevel};
pub use export::{export_assessment, pillar_table, DumpDocument, ExportFormat, TABULAR_HEADER};
pub use fingerprint::{fingerprint_series, FingerprintAxis, FingerprintLevel, FingerprintSeries};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown pillar {0}")]
    UnknownPillar(String),
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("unsupported export format `{0}` (use dump, tabular or summary)")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("cannot serialize export: {0}")]
    Serialize(String),
}
