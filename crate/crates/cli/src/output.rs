//! File writing with provenance headers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Comment line carried at the top of every CSV.
pub fn digest_comment(digest: &str) -> String {
    format!("# config_sha256={digest}\n")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// Builds a numeric CSV in memory: comment lines, a header, then rows.
pub struct CsvText {
    text: String,
}

impl CsvText {
    pub fn new(digest: &str) -> Self {
        CsvText { text: digest_comment(digest) }
    }

    pub fn comment(&mut self, line: &str) -> &mut Self {
        let _ = writeln!(self.text, "# {line}");
        self
    }

    pub fn header<S: AsRef<str>>(&mut self, cols: impl IntoIterator<Item = S>) -> &mut Self {
        self.line(cols)
    }

    pub fn row(&mut self, cols: impl IntoIterator<Item = f64>) -> &mut Self {
        self.line(cols.into_iter().map(|v| v.to_string()))
    }

    fn line<S: AsRef<str>>(&mut self, cols: impl IntoIterator<Item = S>) -> &mut Self {
        let mut first = true;
        for c in cols {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
            first = false;
        }
        self.text.push('\n');
        self
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// `dir/name`, creating nothing.
pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Drops `#` comment lines so the core CSV readers see a plain table.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}
