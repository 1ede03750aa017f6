//! Shared fixtures for the benchmark targets.

use std::path::PathBuf;

pub fn samples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

pub fn load(project: &str) -> amw_core::Model {
    amw_core::load_project(&samples_dir().join(project)).expect("sample loads")
}
