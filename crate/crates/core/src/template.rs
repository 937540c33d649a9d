//! Loading framework templates from disk and keeping them in a registry.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::model::{FrameworkTemplate, TemplateRef};
use crate::validate::{validate_template, ValidationReport};

const SAMPLE_TEMPLATE: &str = include_str!("../../../templates/distaf-sample.json");

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse template: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("template {template} failed validation:\n{report}")]
    Invalid {
        template: TemplateRef,
        report: ValidationReport,
    },
    #[error("template {0} is already registered")]
    Duplicate(TemplateRef),
}

/// Parses a template document without validating it.
pub fn parse_template(json: &str) -> Result<FrameworkTemplate, TemplateError> {
    Ok(serde_json::from_str(json)?)
}

/// Parses and validates; warnings are tolerated, errors are not.
pub fn load_template_str(json: &str) -> Result<FrameworkTemplate, TemplateError> {
    let template = parse_template(json)?;
    let report = validate_template(&template);
    if report.has_errors() {
        return Err(TemplateError::Invalid {
            template: template.template_ref(),
            report,
        });
    }
    Ok(template)
}

pub fn load_template(path: &Path) -> Result<FrameworkTemplate, TemplateError> {
    let text = fs::read_to_string(path).map_err(|source| TemplateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_template_str(&text)
}

/// The bundled sample template (six pillars, appendix sample metrics).
pub fn sample_template() -> FrameworkTemplate {
    parse_template(SAMPLE_TEMPLATE).expect("bundled sample template is well-formed")
}

/// Raw JSON of the bundled sample template.
pub fn sample_template_json() -> &'static str {
    SAMPLE_TEMPLATE
}

/// Validated templates, addressable by id and version.
#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    // id -> versions in registration order; the last one is the latest
    templates: BTreeMap<String, Vec<Arc<FrameworkTemplate>>>,
}

impl TemplateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sample() -> Self {
        let mut registry = Self::new();
        registry.insert(sample_template()).expect("empty registry");
        registry
    }

    /// Loads every `*.json` file in `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let entries = fs::read_dir(dir).map_err(|source| TemplateError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        let mut registry = Self::new();
        for path in paths {
            registry.insert(load_template(&path)?)?;
        }
        Ok(registry)
    }

    pub fn insert(
        &mut self,
        template: FrameworkTemplate,
    ) -> Result<Arc<FrameworkTemplate>, TemplateError> {
        let report = validate_template(&template);
        if report.has_errors() {
            return Err(TemplateError::Invalid {
                template: template.template_ref(),
                report,
            });
        }
        if self.get(&template.template_ref()).is_some() {
            return Err(TemplateError::Duplicate(template.template_ref()));
        }
        let template = Arc::new(template);
        self.templates
            .entry(template.id.clone())
            .or_default()
            .push(Arc::clone(&template));
        Ok(template)
    }

    pub fn get(&self, reference: &TemplateRef) -> Option<Arc<FrameworkTemplate>> {
        self.templates
            .get(&reference.id)?
            .iter()
            .find(|t| t.version == reference.version)
            .cloned()
    }

    pub fn latest(&self, id: &str) -> Option<Arc<FrameworkTemplate>> {
        self.templates.get(id)?.last().cloned()
    }

    /// Latest version of every template, ordered by id.
    pub fn list(&self) -> Vec<Arc<FrameworkTemplate>> {
        self.templates
            .values()
            .filter_map(|v| v.last().cloned())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}
