//! Shared test support for the workspace.

pub mod criteria;
pub mod gen;
pub mod oracle;
pub mod props;

use std::path::PathBuf;

/// Root of the workspace checkout.
pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

pub fn templates_dir() -> PathBuf {
    workspace_root().join("templates")
}

pub fn sample_template_path() -> PathBuf {
    templates_dir().join("distaf-sample.json")
}

pub fn fixture_path(name: &str) -> PathBuf {
    workspace_root().join("fixtures").join(name)
}
