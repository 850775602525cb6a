//! All-or-nothing output directories: files are staged in a sibling
//! temporary directory and moved into place once every file is written.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Failure;

pub struct Staging {
    dir: tempfile::TempDir,
    target: PathBuf,
    files: Vec<String>,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self, Failure> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)
            .map_err(|e| Failure::validation(format!("output_dir parent {}: {e}", parent.display())))?;
        let dir = tempfile::Builder::new()
            .prefix(".qfames-staging-")
            .tempdir_in(&parent)
            .map_err(|e| Failure::validation(format!("cannot stage outputs in {}: {e}", parent.display())))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), Failure> {
        std::fs::write(self.dir.path().join(name), contents)
            .map_err(|e| Failure::numerical(format!("writing {name}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Replaces `target` with the staged directory.
    pub fn commit(self) -> Result<PathBuf, Failure> {
        let staged = self.dir.keep();
        if self.target.exists() {
            std::fs::remove_dir_all(&self.target)
                .map_err(|e| Failure::numerical(format!("replacing {}: {e}", self.target.display())))?;
        }
        std::fs::rename(&staged, &self.target)
            .map_err(|e| Failure::numerical(format!("moving outputs to {}: {e}", self.target.display())))?;
        Ok(self.target)
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Failure::numerical(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Failure::numerical(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::numerical(e.to_string()))
}

/// Shortest round-trip formatting.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
