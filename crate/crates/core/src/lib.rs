//! Core of the DISTAF assessment platform: the framework model, the scoring
//! engine, assessment persistence and report generation.

pub mod access;
pub mod assessment;
pub mod code;
pub mod model;
pub mod report;
pub mod scoring;
pub mod store;
pub mod template;
pub mod validate;
pub mod weights;

pub use assessment::{AssessmentDocument, AssessmentState, AssessmentStatus};
pub use code::{parse_metric_code, MechanismId, MetricCode, Phase};
pub use model::{FrameworkTemplate, TemplateRef};
pub use scoring::{assessment_scorecard, Scorecard};
pub use template::TemplateRegistry;
