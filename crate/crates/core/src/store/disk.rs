//! One JSON export document per assessment, replaced atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::StoreError;
use crate::assessment::AssessmentDocument;

fn storage(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Storage {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub(super) fn path_for(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

pub(super) fn load_all(dir: &Path) -> Result<Vec<(PathBuf, AssessmentDocument)>, StoreError> {
    fs::create_dir_all(dir).map_err(|e| storage(dir, e))?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| storage(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| storage(&path, e))?;
        let doc: AssessmentDocument = serde_json::from_str(&text).map_err(|e| storage(&path, e))?;
        if path_for(dir, &doc.assessment.id) != path {
            return Err(storage(
                &path,
                format!("file holds assessment `{}`", doc.assessment.id),
            ));
        }
        docs.push((path, doc));
    }
    Ok(docs)
}

pub(super) fn write(dir: &Path, doc: &AssessmentDocument) -> Result<(), StoreError> {
    let path = path_for(dir, &doc.assessment.id);
    let mut json = serde_json::to_vec_pretty(doc).map_err(|e| storage(&path, e))?;
    json.push(b'\n');
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| storage(dir, e))?;
    tmp.write_all(&json).map_err(|e| storage(&path, e))?;
    tmp.as_file().sync_all().map_err(|e| storage(&path, e))?;
    tmp.persist(&path).map_err(|e| storage(&path, e.error))?;
    Ok(())
}
