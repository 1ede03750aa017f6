//! Shared test support: independent oracles and seeded generators.
//!
//! Each integration-test target compiles this module separately and uses
//! its own subset, so dead-code analysis is silenced here.
#![allow(dead_code)]

pub mod brute;
pub mod gen;
pub mod naive_eval;
pub mod naive_wf;

use std::path::PathBuf;

/// Workspace-level samples directory.
pub fn samples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

pub fn sample(path: &str) -> PathBuf {
    samples_dir().join(path)
}

pub fn load_sample(path: &str) -> amw_core::Model {
    amw_core::load_project(&sample(path)).expect("sample project loads")
}

pub fn read_sample_file(path: &str) -> String {
    std::fs::read_to_string(sample(path)).expect("sample file exists")
}

/// Golden-file comparison. Set AMW_BLESS=1 to rewrite the goldens.
pub fn assert_golden(name: &str, actual: &str) {
    let path = samples_dir().join("golden").join(name);
    if std::env::var("AMW_BLESS").is_ok() {
        std::fs::write(&path, actual).expect("write golden");
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {} (run with AMW_BLESS=1)", path.display()));
    assert_eq!(
        actual,
        expected,
        "output differs from golden {}",
        path.display()
    );
}
