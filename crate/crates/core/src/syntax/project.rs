//! Project loading: a project is a directory of `.amw` files, optionally
//! narrowed by a `project.amw` manifest (`project NAME { files "glob"; }`).
//! Without a manifest every `.amw` file in the directory belongs to the
//! project. Globs match file names within the project directory; `*`
//! matches any run of characters except `/`, `?` exactly one.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::diag::Diagnostic;
use crate::model::Model;
use crate::syntax::parser::{parse_model, SourceUnit};

pub const MANIFEST_FILE: &str = "project.amw";
pub const EXTENSION: &str = "amw";

/// Errors from loading a project directory.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("syntax errors")]
    Syntax(Vec<Diagnostic>),
}

/// Simple file-name glob: `*` any run (no `/`), `?` one character.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    fn rec(p: &[char], n: &[char]) -> bool {
        match p.first() {
            None => n.is_empty(),
            Some('*') => {
                for skip in 0..=n.len() {
                    if n[..skip].contains(&'/') {
                        break;
                    }
                    if rec(&p[1..], &n[skip..]) {
                        return true;
                    }
                }
                false
            }
            Some('?') => !n.is_empty() && rec(&p[1..], &n[1..]),
            Some(c) => n.first() == Some(c) && rec(&p[1..], &n[1..]),
        }
    }
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    rec(&p, &n)
}

fn read_unit(path: &Path) -> Result<SourceUnit, LoadError> {
    let bytes = fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|_| LoadError::Encoding {
        path: path.to_path_buf(),
    })?;
    Ok(SourceUnit::new(path.to_string_lossy(), text))
}

/// Collects the source units of the project in `dir`, honoring the
/// manifest when present. Paths inside the units are the full paths, so
/// diagnostics and per-file rewrites point at real files.
pub fn collect_sources(dir: &Path) -> Result<Vec<SourceUnit>, LoadError> {
    let mut names: Vec<String> = Vec::new();
    let entries = fs::read_dir(dir).map_err(|source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| LoadError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some(EXTENSION) && path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();

    let manifest_path = dir.join(MANIFEST_FILE);
    let globs: Vec<String> = if manifest_path.is_file() {
        let unit = read_unit(&manifest_path)?;
        match parse_model(&[unit]) {
            Ok(m) => m.manifest.map(|p| p.globs).unwrap_or_default(),
            Err(diags) => return Err(LoadError::Syntax(diags)),
        }
    } else {
        Vec::new()
    };

    let selected: Vec<String> = if globs.is_empty() {
        names
    } else {
        let mut picked: Vec<String> = names
            .into_iter()
            .filter(|n| n == MANIFEST_FILE || globs.iter().any(|g| glob_match(g, n)))
            .collect();
        if !picked.iter().any(|n| n == MANIFEST_FILE) {
            picked.push(MANIFEST_FILE.to_string());
            picked.sort();
        }
        picked
    };

    selected
        .iter()
        .map(|name| read_unit(&dir.join(name)))
        .collect()
}

/// Loads and parses the project in `dir`. The model name falls back to the
/// directory name when no manifest provides one.
pub fn load_project(dir: &Path) -> Result<Model, LoadError> {
    let sources = collect_sources(dir)?;
    let mut model = parse_model(&sources).map_err(LoadError::Syntax)?;
    if model.manifest.is_none() {
        model.name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("model")
            .to_string();
    }
    Ok(model)
}
