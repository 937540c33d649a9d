//! Assessment persistence and lifecycle.
//!
//! Every write is a compare-and-set on the assessment's revision, serialized
//! per assessment. Writes to different assessments do not contend. With a
//! directory backend each assessment lives in its own export document, written
//! atomically before the in-memory copy is replaced, so a failed write leaves
//! both unchanged.

mod disk;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{AssessmentDocument, AssessmentState, AssessmentStatus};
use crate::code::{MechanismId, MetricCode, Phase};
use crate::model::{FrameworkTemplate, TemplateRef};
use crate::scoring::{
    apply_cluster_answer, apply_standard_compliance, assessment_scorecard, normalize_metric_value,
    MetricValue, RawValue, Scorecard, ScoringError, ValueOrigin,
};
use crate::template::TemplateRegistry;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("unknown predecessor assessment `{0}`")]
    UnknownPredecessor(String),
    #[error("unknown assessment `{0}`")]
    UnknownAssessment(String),
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("assessment `{0}` already exists")]
    DuplicateId(String),
    #[error("invalid assessment id `{0}`: use 1-64 letters, digits, `-`, `_` or `.`")]
    InvalidId(String),
    #[error("assessment `{id}` is {status}; only drafts can be edited")]
    NotDraft {
        id: String,
        status: AssessmentStatus,
    },
    #[error("revision conflict on `{id}`: expected {expected}, current is {current}")]
    RevisionConflict {
        id: String,
        expected: u64,
        current: u64,
    },
    #[error("unknown metric code {0}")]
    UnknownCode(String),
    #[error("unknown mechanism {0}")]
    UnknownMechanism(String),
    #[error("unknown standard {0}")]
    UnknownStandard(String),
    #[error("assessment `{id}` has {} unscored included metrics (first: {})", .unscored.len(), .unscored.first().map(String::as_str).unwrap_or("-"))]
    IncompleteAssessment { id: String, unscored: Vec<String> },
    #[error("invalid assessment document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Scoring(ScoringError),
    #[error("storage error at {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

impl From<ScoringError> for StoreError {
    fn from(err: ScoringError) -> Self {
        match err {
            ScoringError::UnknownStandard(s) => StoreError::UnknownStandard(s),
            ScoringError::TemplateMismatch(m) => StoreError::TemplateMismatch(m),
            other => StoreError::Scoring(other),
        }
    }
}

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Parameters of `create`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    /// Generated when absent.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub description: String,
    /// Optional when deriving: defaults to the predecessor's template.
    #[serde(default)]
    pub template_id: Option<String>,
    /// Latest registered version when absent.
    #[serde(default)]
    pub template_version: Option<String>,
    /// Predecessor to derive from.
    #[serde(default)]
    pub from: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateOutcome {
    pub assessment: AssessmentState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// One metric edit: a raw reading, or `None` to reset the metric to unscored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEdit {
    pub code: MetricCode,
    pub value: Option<RawValue>,
}

/// Uncommitted changes scored on top of a draft without persisting anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overlay {
    #[serde(default)]
    pub metrics: Vec<MetricEdit>,
    #[serde(default)]
    pub answers: Vec<AnswerChoice>,
    #[serde(default)]
    pub standards: BTreeMap<String, bool>,
    #[serde(default)]
    pub exclusions: BTreeMap<MechanismId, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerChoice {
    pub mechanism: MechanismId,
    pub phase: Phase,
    /// `None` forgets the recorded choice; the metric values stay.
    pub answer: Option<usize>,
}

fn valid_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

type Entry = Arc<Mutex<AssessmentState>>;

pub struct AssessmentStore {
    templates: Arc<TemplateRegistry>,
    dir: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, Entry>>,
    clock: Clock,
}

impl std::fmt::Debug for AssessmentStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssessmentStore")
            .field("dir", &self.dir)
            .field("assessments", &self.entries.read().len())
            .finish()
    }
}

impl AssessmentStore {
    pub fn in_memory(templates: Arc<TemplateRegistry>) -> Self {
        Self {
            templates,
            dir: None,
            entries: RwLock::default(),
            clock: Arc::new(Utc::now),
        }
    }

    /// Opens (or initializes) a directory-backed store and loads every
    /// assessment found there.
    pub fn open(templates: Arc<TemplateRegistry>, dir: &Path) -> Result<Self, StoreError> {
        let docs = disk::load_all(dir)?;
        let store = Self {
            templates,
            dir: Some(dir.to_path_buf()),
            entries: RwLock::default(),
            clock: Arc::new(Utc::now),
        };
        {
            let mut entries = store.entries.write();
            for (path, doc) in docs {
                let state = store
                    .check_document(&doc)
                    .map_err(|e| StoreError::Storage {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                entries.insert(state.id.clone(), Arc::new(Mutex::new(state)));
            }
        }
        Ok(store)
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.templates
    }

    pub fn directory(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn template(&self, reference: &TemplateRef) -> Result<Arc<FrameworkTemplate>, StoreError> {
        self.templates
            .get(reference)
            .ok_or_else(|| StoreError::UnknownTemplate(reference.to_string()))
    }

    fn entry(&self, id: &str) -> Result<Entry, StoreError> {
        self.entries
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownAssessment(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Result<AssessmentState, StoreError> {
        Ok(self.entry(id)?.lock().clone())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.read().contains_key(id)
    }

    /// All assessments ordered by id.
    pub fn list(&self) -> Vec<AssessmentState> {
        let entries: Vec<Entry> = self.entries.read().values().cloned().collect();
        entries.iter().map(|e| e.lock().clone()).collect()
    }

    /// Template the assessment is bound to.
    pub fn template_of(&self, id: &str) -> Result<Arc<FrameworkTemplate>, StoreError> {
        let state = self.get(id)?;
        self.template(&state.template)
    }

    pub fn scorecard(&self, id: &str) -> Result<Scorecard, StoreError> {
        let state = self.get(id)?;
        let template = self.template(&state.template)?;
        Ok(assessment_scorecard(&template, &state)?)
    }

    fn persist(&self, state: &AssessmentState) -> Result<(), StoreError> {
        match &self.dir {
            Some(dir) => disk::write(dir, &AssessmentDocument::new(state.clone())),
            None => Ok(()),
        }
    }

    fn insert_new(&self, state: AssessmentState) -> Result<AssessmentState, StoreError> {
        let mut entries = self.entries.write();
        if entries.contains_key(&state.id) {
            return Err(StoreError::DuplicateId(state.id));
        }
        self.persist(&state)?;
        entries.insert(state.id.clone(), Arc::new(Mutex::new(state.clone())));
        Ok(state)
    }

    fn new_id(&self, requested: Option<String>) -> Result<String, StoreError> {
        match requested {
            Some(id) if valid_id(&id) => Ok(id),
            Some(id) => Err(StoreError::InvalidId(id)),
            None => Ok(uuid::Uuid::new_v4().to_string()),
        }
    }

    /// Creates a blank draft, or a draft deriving every score, answer,
    /// standard and exclusion from a predecessor.
    pub fn create(&self, request: CreateRequest) -> Result<CreateOutcome, StoreError> {
        let id = self.new_id(request.id)?;
        if self.contains(&id) {
            return Err(StoreError::DuplicateId(id));
        }
        let now = (self.clock)();
        let mut warnings = Vec::new();

        let predecessor = match &request.from {
            Some(from) => Some(
                self.get(from)
                    .map_err(|_| StoreError::UnknownPredecessor(from.clone()))?,
            ),
            None => None,
        };
        let template = match (&request.template_id, &predecessor) {
            (None, None) => return Err(StoreError::UnknownTemplate("(none given)".into())),
            (None, Some(p)) => match &request.template_version {
                Some(version) => {
                    self.template(&TemplateRef::new(p.template.id.clone(), version.clone()))?
                }
                None => self.template(&p.template)?,
            },
            (Some(tid), _) => match &request.template_version {
                Some(version) => self.template(&TemplateRef::new(tid.clone(), version.clone()))?,
                None => self
                    .templates
                    .latest(tid)
                    .ok_or_else(|| StoreError::UnknownTemplate(tid.clone()))?,
            },
        };

        let mut state = AssessmentState::new(id, request.description, template.template_ref(), now);
        if let Some(p) = predecessor {
            if p.template.id != template.id {
                return Err(StoreError::TemplateMismatch(format!(
                    "predecessor `{}` uses template {}, not {}",
                    p.id,
                    p.template,
                    template.template_ref()
                )));
            }
            if p.template.version != template.version {
                warnings.push(format!(
                    "predecessor uses template version {}, this assessment {}; entries unknown to {} are dropped",
                    p.template.version, template.version, template.version
                ));
            }
            state.predecessor = Some(p.id.clone());
            inherit(&template, &p, &mut state, &mut warnings);
        }
        // refuse anything the engine could not score
        assessment_scorecard(&template, &state)?;
        Ok(CreateOutcome {
            assessment: self.insert_new(state)?,
            warnings,
        })
    }

    /// Runs `edit` against a copy of the current state and commits it if the
    /// base revision still matches and the result scores cleanly.
    fn write(
        &self,
        id: &str,
        revision: u64,
        draft_only: bool,
        edit: impl FnOnce(&FrameworkTemplate, &mut AssessmentState) -> Result<(), StoreError>,
    ) -> Result<AssessmentState, StoreError> {
        let entry = self.entry(id)?;
        let mut current = entry.lock();
        if current.revision != revision {
            return Err(StoreError::RevisionConflict {
                id: id.to_string(),
                expected: revision,
                current: current.revision,
            });
        }
        if draft_only && current.status != AssessmentStatus::Draft {
            return Err(StoreError::NotDraft {
                id: id.to_string(),
                status: current.status,
            });
        }
        let template = self.template(&current.template)?;
        let mut next = current.clone();
        edit(&template, &mut next)?;
        assessment_scorecard(&template, &next)?;
        next.revision = current.revision + 1;
        next.last_modified = (self.clock)().max(current.last_modified);
        self.persist(&next)?;
        *current = next.clone();
        Ok(next)
    }

    pub fn set_metric_value(
        &self,
        id: &str,
        revision: u64,
        code: &MetricCode,
        raw: RawValue,
    ) -> Result<AssessmentState, StoreError> {
        self.set_metric_values(
            id,
            revision,
            &[MetricEdit {
                code: code.clone(),
                value: Some(raw),
            }],
        )
    }

    /// Applies several metric edits as one write (one revision step).
    pub fn set_metric_values(
        &self,
        id: &str,
        revision: u64,
        edits: &[MetricEdit],
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, true, |t, state| {
            apply_metric_edits(t, state, edits)
        })
    }

    /// Records the answer to a mechanism's cluster question and scores its
    /// metrics accordingly, replacing earlier values of those metrics.
    pub fn choose_answer(
        &self,
        id: &str,
        revision: u64,
        choice: &AnswerChoice,
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, true, |t, state| {
            apply_answer(t, state, choice)
        })
    }

    pub fn declare_standard(
        &self,
        id: &str,
        revision: u64,
        standard: &str,
        declared: bool,
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, true, |t, state| {
            apply_standard(t, state, standard, declared)
        })
    }

    pub fn set_mechanism_exclusion(
        &self,
        id: &str,
        revision: u64,
        mechanism: &MechanismId,
        excluded: bool,
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, true, |t, state| {
            apply_exclusion(t, state, mechanism, excluded)
        })
    }

    pub fn set_description(
        &self,
        id: &str,
        revision: u64,
        description: &str,
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, true, |_, state| {
            state.description = description.to_string();
            Ok(())
        })
    }

    /// Moves between draft, private and public. Leaving draft requires every
    /// included metric of both phases to be scored.
    pub fn transition_status(
        &self,
        id: &str,
        revision: u64,
        to: AssessmentStatus,
    ) -> Result<AssessmentState, StoreError> {
        self.write(id, revision, false, |t, state| {
            if state.status == AssessmentStatus::Draft && to != AssessmentStatus::Draft {
                let unscored = state.unscored_metrics(t)?;
                if !unscored.is_empty() {
                    return Err(StoreError::IncompleteAssessment {
                        id: state.id.clone(),
                        unscored: unscored.iter().map(|c| c.to_string()).collect(),
                    });
                }
            }
            state.status = to;
            Ok(())
        })
    }

    /// Scores a draft with `overlay` applied on top, persisting nothing.
    pub fn preview(&self, id: &str, overlay: &Overlay) -> Result<Scorecard, StoreError> {
        let mut state = self.get(id)?;
        if state.status != AssessmentStatus::Draft {
            return Err(StoreError::NotDraft {
                id: id.to_string(),
                status: state.status,
            });
        }
        let template = self.template(&state.template)?;
        apply_overlay(&template, &mut state, overlay)?;
        Ok(assessment_scorecard(&template, &state)?)
    }

    pub fn export_document(&self, id: &str) -> Result<AssessmentDocument, StoreError> {
        Ok(AssessmentDocument::new(self.get(id)?))
    }

    fn check_document(&self, doc: &AssessmentDocument) -> Result<AssessmentState, StoreError> {
        doc.check().map_err(StoreError::InvalidDocument)?;
        let state = &doc.assessment;
        if !valid_id(&state.id) {
            return Err(StoreError::InvalidId(state.id.clone()));
        }
        if state.revision == 0 || state.last_modified < state.created_at {
            return Err(StoreError::InvalidDocument(format!(
                "assessment `{}` has an inconsistent revision or timestamps",
                state.id
            )));
        }
        let template = self.template(&state.template)?;
        assessment_scorecard(&template, state)?;
        if state.status != AssessmentStatus::Draft && !state.unscored_metrics(&template)?.is_empty()
        {
            return Err(StoreError::InvalidDocument(format!(
                "assessment `{}` is {} but not fully scored",
                state.id, state.status
            )));
        }
        Ok(state.clone())
    }

    /// Adds an exported assessment as-is (id, revision, status, timestamps).
    pub fn import_document(&self, doc: &AssessmentDocument) -> Result<AssessmentState, StoreError> {
        let state = self.check_document(doc)?;
        self.insert_new(state)
    }
}

fn unknown_code(code: &MetricCode) -> StoreError {
    StoreError::UnknownCode(code.to_string())
}

fn apply_metric_edits(
    t: &FrameworkTemplate,
    state: &mut AssessmentState,
    edits: &[MetricEdit],
) -> Result<(), StoreError> {
    for edit in edits {
        let loc = t
            .find_metric(&edit.code)
            .ok_or_else(|| unknown_code(&edit.code))?;
        let value = match edit.value {
            Some(raw) => {
                let normalized = normalize_metric_value(loc.metric, raw)?;
                MetricValue::direct(edit.code.clone(), raw, normalized)
            }
            None => MetricValue::unscored(edit.code.clone()),
        };
        state.metric_values.insert(edit.code.clone(), value);
    }
    Ok(())
}

fn apply_answer(
    t: &FrameworkTemplate,
    state: &mut AssessmentState,
    choice: &AnswerChoice,
) -> Result<(), StoreError> {
    let (_, mechanism) = t
        .mechanism(&choice.mechanism)
        .ok_or_else(|| StoreError::UnknownMechanism(choice.mechanism.to_string()))?;
    match choice.answer {
        Some(index) => {
            for value in apply_cluster_answer(mechanism, choice.phase, index)? {
                state.metric_values.insert(value.code.clone(), value);
            }
            state
                .chosen_answers
                .entry(choice.mechanism.clone())
                .or_default()
                .insert(choice.phase, index);
        }
        None => {
            if let Some(answers) = state.chosen_answers.get_mut(&choice.mechanism) {
                answers.remove(&choice.phase);
                if answers.is_empty() {
                    state.chosen_answers.remove(&choice.mechanism);
                }
            }
        }
    }
    Ok(())
}

fn apply_standard(
    t: &FrameworkTemplate,
    state: &mut AssessmentState,
    standard: &str,
    declared: bool,
) -> Result<(), StoreError> {
    let values = apply_standard_compliance(t, standard)?;
    if declared {
        for value in values {
            state.metric_values.insert(value.code.clone(), value);
        }
        state.declared_standards.insert(standard.to_string());
    } else if state.declared_standards.remove(standard) {
        // drop the values this standard put in place, unless another declared
        // standard still vouches for them
        let still_covered: BTreeSet<&MetricCode> = state
            .declared_standards
            .iter()
            .filter_map(|s| t.standard(s))
            .flat_map(|s| s.satisfied_metrics.iter())
            .collect();
        for value in values {
            let stale = state.metric_values.get(&value.code).is_some_and(|v| {
                v.origin == ValueOrigin::Standard && !still_covered.contains(&value.code)
            });
            if stale {
                state.metric_values.insert(
                    value.code.clone(),
                    MetricValue::unscored(value.code.clone()),
                );
            }
        }
    }
    Ok(())
}

fn apply_exclusion(
    t: &FrameworkTemplate,
    state: &mut AssessmentState,
    mechanism: &MechanismId,
    excluded: bool,
) -> Result<(), StoreError> {
    if t.mechanism(mechanism).is_none() {
        return Err(StoreError::UnknownMechanism(mechanism.to_string()));
    }
    if excluded {
        state.excluded_mechanisms.insert(mechanism.clone());
    } else {
        state.excluded_mechanisms.remove(mechanism);
    }
    Ok(())
}

/// Applies an overlay in a fixed order: standards, answers, metric edits,
/// exclusions.
pub fn apply_overlay(
    t: &FrameworkTemplate,
    state: &mut AssessmentState,
    overlay: &Overlay,
) -> Result<(), StoreError> {
    for (standard, declared) in &overlay.standards {
        apply_standard(t, state, standard, *declared)?;
    }
    for choice in &overlay.answers {
        apply_answer(t, state, choice)?;
    }
    apply_metric_edits(t, state, &overlay.metrics)?;
    for (mechanism, excluded) in &overlay.exclusions {
        apply_exclusion(t, state, mechanism, *excluded)?;
    }
    Ok(())
}

/// Copies a predecessor's scoring state, marking values as inherited and
/// dropping whatever `template` does not know.
fn inherit(
    t: &FrameworkTemplate,
    from: &AssessmentState,
    into: &mut AssessmentState,
    warnings: &mut Vec<String>,
) {
    for (code, value) in &from.metric_values {
        match t.find_metric(code) {
            Some(loc)
                if value
                    .score()
                    .is_none_or(|s| crate::scoring::check_normalized(loc.metric, s).is_ok()) =>
            {
                let mut value = value.clone();
                value.origin = ValueOrigin::Inherited;
                into.metric_values.insert(code.clone(), value);
            }
            _ => warnings.push(format!("value of {code} not carried over")),
        }
    }
    for (mechanism, answers) in &from.chosen_answers {
        for (phase, index) in answers {
            let valid = t
                .mechanism(mechanism)
                .is_some_and(|(_, m)| m.question(*phase).is_some_and(|q| *index < q.answers.len()));
            if valid {
                into.chosen_answers
                    .entry(mechanism.clone())
                    .or_default()
                    .insert(*phase, *index);
            } else {
                warnings.push(format!("answer of {mechanism} ({phase}) not carried over"));
            }
        }
    }
    for standard in &from.declared_standards {
        if t.standard(standard).is_some() {
            into.declared_standards.insert(standard.clone());
        } else {
            warnings.push(format!("standard {standard} not carried over"));
        }
    }
    for mechanism in &from.excluded_mechanisms {
        if t.mechanism(mechanism).is_some() {
            into.excluded_mechanisms.insert(mechanism.clone());
        } else {
            warnings.push(format!("exclusion of {mechanism} not carried over"));
        }
    }
}

/// Compares the scoring content of two assessments: values (ignoring their
/// origin), answers, standards and exclusions.
pub fn same_scoring_state(a: &AssessmentState, b: &AssessmentState) -> bool {
    let strip = |s: &AssessmentState| -> Vec<(
        MetricCode,
        Option<RawValue>,
        Option<f64>,
        crate::scoring::ValueState,
    )> {
        s.metric_values
            .values()
            .map(|v| (v.code.clone(), v.raw, v.normalized, v.state))
            .collect()
    };
    strip(a) == strip(b)
        && a.chosen_answers == b.chosen_answers
        && a.declared_standards == b.declared_standards
        && a.excluded_mechanisms == b.excluded_mechanisms
}
