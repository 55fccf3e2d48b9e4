//! Line-oriented reports with a versioned header, written atomically.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{CliError, CliResult, REPORT_VERSION};

pub struct Report {
    body: String,
}

impl Report {
    pub fn new(kind: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, "format: {REPORT_VERSION}");
        let _ = writeln!(body, "report: {kind}");
        Report { body }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.body, "{key}: {value}");
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.body, "{key}: {value:.12e}");
        self
    }

    pub fn text(&self) -> &str {
        &self.body
    }
}

/// Write via a temp file and rename so readers never see partial output.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::config(format!("cannot create temp file: {e}")))?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes())
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::config(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}
