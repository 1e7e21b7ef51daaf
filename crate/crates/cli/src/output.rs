use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Outcome of one command: the files it wrote, warnings, a JSON summary for
/// `--json` and the text printed otherwise.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub results: serde_json::Value,
    #[serde(skip)]
    pub text: String,
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so readers never observe a partially written file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
