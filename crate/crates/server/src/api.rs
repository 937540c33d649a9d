//! Templates, assessments, reports and comparison.

use std::collections::BTreeMap;

use axum::extract::{Path, Query, State};
use axum::http::header::{CONTENT_TYPE, ETAG};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{DateTime, Utc};
use distaf_core::access::Action;
use distaf_core::report::{
    compare as compare_cards, export_assessment, fingerprint_series, ExportFormat, FingerprintLevel,
};
use distaf_core::store::{AnswerChoice, CreateRequest, MetricEdit, Overlay};
use distaf_core::{
    AssessmentDocument, AssessmentState, AssessmentStatus, MechanismId, Phase, TemplateRef,
};
use serde::{Deserialize, Serialize};

use crate::auth::Caller;
use crate::error::{ApiError, ApiResult};
use crate::AppState;

/// State after a write, with the new revision echoed in the ETag.
fn written(status: StatusCode, body: impl Serialize, revision: u64) -> Response {
    let mut response = (status, Json(body)).into_response();
    response.headers_mut().insert(
        ETAG,
        HeaderValue::from_str(&format!("\"{revision}\"")).unwrap(),
    );
    response
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TemplateSummary {
    pub id: String,
    pub version: String,
    pub pillars: Vec<String>,
    pub mechanisms: usize,
    pub metrics: usize,
    pub standards: Vec<String>,
}

pub async fn list_templates(
    State(state): State<AppState>,
    _caller: Caller,
) -> Json<Vec<TemplateSummary>> {
    let list = state
        .store
        .templates()
        .list()
        .iter()
        .map(|t| TemplateSummary {
            id: t.id.clone(),
            version: t.version.clone(),
            pillars: t.pillars.iter().map(|p| p.code.clone()).collect(),
            mechanisms: t.mechanisms().count(),
            metrics: t.metrics().count(),
            standards: t.standards.iter().map(|s| s.standard_id.clone()).collect(),
        })
        .collect();
    Json(list)
}

#[derive(Debug, Deserialize)]
pub struct VersionQuery {
    pub version: Option<String>,
}

pub async fn get_template(
    State(state): State<AppState>,
    _caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    let registry = state.store.templates();
    let template = match q.version {
        Some(v) => registry.get(&TemplateRef::new(id.clone(), v)),
        None => registry.latest(&id),
    };
    let template = template.ok_or_else(|| ApiError::not_found(format!("template `{id}`")))?;
    Ok(Json(&*template).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AssessmentSummary {
    pub id: String,
    pub description: String,
    pub template: TemplateRef,
    pub status: AssessmentStatus,
    pub predecessor: Option<String>,
    pub created_at: DateTime<Utc>,
    pub last_modified: DateTime<Utc>,
    pub revision: u64,
    pub completeness: f64,
}

pub async fn list_assessments(
    State(state): State<AppState>,
    caller: Caller,
) -> ApiResult<Json<Vec<AssessmentSummary>>> {
    let mut out = Vec::new();
    for a in state.store.list() {
        if !caller.may(Action::ReadAssessment, a.status) {
            continue;
        }
        let template = state.store.template_of(&a.id)?;
        let completeness = a
            .completeness(&template, None)
            .map_err(distaf_core::store::StoreError::from)?;
        out.push(AssessmentSummary {
            id: a.id,
            description: a.description,
            template: a.template,
            status: a.status,
            predecessor: a.predecessor,
            created_at: a.created_at,
            last_modified: a.last_modified,
            revision: a.revision,
            completeness,
        });
    }
    Ok(Json(out))
}

pub async fn create_assessment(
    State(state): State<AppState>,
    caller: Caller,
    Json(req): Json<CreateRequest>,
) -> ApiResult<Response> {
    caller.require(Action::CreateAssessment)?;
    if let Some(from) = &req.from {
        caller.assessment(&state, from, Action::ReadAssessment)?;
    }
    let out = state.store.create(req)?;
    let revision = out.assessment.revision;
    Ok(written(StatusCode::CREATED, out, revision))
}

pub async fn import_assessment(
    State(state): State<AppState>,
    caller: Caller,
    Json(doc): Json<AssessmentDocument>,
) -> ApiResult<Response> {
    caller.require(Action::CreateAssessment)?;
    let a = state.store.import_document(&doc)?;
    let revision = a.revision;
    Ok(written(StatusCode::CREATED, a, revision))
}

pub async fn get_assessment(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let a = caller.assessment(&state, &id, Action::ReadAssessment)?;
    let revision = a.revision;
    Ok(written(StatusCode::OK, a, revision))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsPatch {
    pub revision: u64,
    pub edits: Vec<MetricEdit>,
}

fn edited(a: AssessmentState) -> Response {
    let revision = a.revision;
    written(StatusCode::OK, a, revision)
}

pub async fn set_metrics(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<MetricsPatch>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    Ok(edited(state.store.set_metric_values(
        &id,
        req.revision,
        &req.edits,
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub revision: u64,
    pub mechanism: MechanismId,
    pub phase: Phase,
    pub answer: Option<usize>,
}

pub async fn choose_answer(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    let choice = AnswerChoice {
        mechanism: req.mechanism,
        phase: req.phase,
        answer: req.answer,
    };
    Ok(edited(state.store.choose_answer(
        &id,
        req.revision,
        &choice,
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardRequest {
    pub revision: u64,
    pub standard: String,
    #[serde(default = "yes")]
    pub declared: bool,
}

fn yes() -> bool {
    true
}

pub async fn declare_standard(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<StandardRequest>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    Ok(edited(state.store.declare_standard(
        &id,
        req.revision,
        &req.standard,
        req.declared,
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionRequest {
    pub revision: u64,
    pub mechanism: MechanismId,
    #[serde(default = "yes")]
    pub excluded: bool,
}

pub async fn set_exclusion(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<ExclusionRequest>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    Ok(edited(state.store.set_mechanism_exclusion(
        &id,
        req.revision,
        &req.mechanism,
        req.excluded,
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusRequest {
    pub revision: u64,
    pub status: AssessmentStatus,
}

pub async fn transition_status(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<StatusRequest>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    Ok(edited(state.store.transition_status(
        &id,
        req.revision,
        req.status,
    )?))
}

pub async fn scorecard(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::ReadAssessment)?;
    Ok(Json(state.store.scorecard(&id)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct FingerprintQuery {
    /// `pillars` (default) or `mechanisms`.
    pub level: Option<String>,
    /// Required with `level=mechanisms`.
    pub pillar: Option<String>,
    pub phase: Option<String>,
}

fn parse_phase(text: Option<&str>) -> ApiResult<Phase> {
    match text.map(str::to_ascii_lowercase).as_deref() {
        None | Some("design") | Some("d") => Ok(Phase::Design),
        Some("operational") | Some("o") => Ok(Phase::Operational),
        Some(other) => Err(ApiError::bad_request(format!("unknown phase `{other}`"))),
    }
}

pub async fn fingerprint(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<FingerprintQuery>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::ReadAssessment)?;
    let phase = parse_phase(q.phase.as_deref())?;
    let level = match (q.level.as_deref(), q.pillar) {
        (None | Some("pillars"), None) => FingerprintLevel::Pillars,
        (Some("mechanisms"), Some(p)) | (None, Some(p)) => FingerprintLevel::MechanismsOf(p),
        (Some("mechanisms"), None) => {
            return Err(ApiError::bad_request("level=mechanisms needs a pillar"))
        }
        (Some(other), _) => return Err(ApiError::bad_request(format!("unknown level `{other}`"))),
    };
    let card = state.store.scorecard(&id)?;
    Ok(Json(fingerprint_series(&card, &level, phase)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

pub async fn export(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let a = caller.assessment(&state, &id, Action::Export)?;
    let format: ExportFormat = q.format.as_deref().unwrap_or("dump").parse()?;
    let template = state.store.template_of(&id)?;
    let body = export_assessment(&template, &a, format)?;
    Ok(([(CONTENT_TYPE, format.content_type())], body).into_response())
}

pub async fn preview(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(overlay): Json<Overlay>,
) -> ApiResult<Response> {
    caller.assessment(&state, &id, Action::EditAssessment)?;
    Ok(Json(state.store.preview(&id, &overlay)?).into_response())
}

pub async fn compare(
    State(state): State<AppState>,
    caller: Caller,
    Query(q): Query<BTreeMap<String, String>>,
) -> ApiResult<Response> {
    caller.require(Action::Compare)?;
    let (Some(a), Some(b)) = (q.get("a"), q.get("b")) else {
        return Err(ApiError::bad_request("compare needs `a` and `b`"));
    };
    caller.assessment(&state, a, Action::Compare)?;
    caller.assessment(&state, b, Action::Compare)?;
    let report = compare_cards(&state.store.scorecard(a)?, &state.store.scorecard(b)?)?;
    Ok(Json(report).into_response())
}
