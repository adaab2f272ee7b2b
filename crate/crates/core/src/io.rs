//! Small helpers for the delimited text formats used between pipeline stages.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::ReadFile {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| Error::WriteFile {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    let mut f = fs::File::create(path).map_err(|source| Error::WriteFile {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(contents.as_bytes())
        .map_err(|source| Error::WriteFile {
            path: path.display().to_string(),
            source,
        })
}

/// Pick a delimiter for a ratings-style file: `::` for MovieLens-style
/// content, tab when present, `,` otherwise.
pub(crate) fn sniff_delimiter(contents: &str) -> &'static str {
    for line in contents.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if line.contains("::") {
            return "::";
        }
        if line.contains('\t') {
            return "\t";
        }
        return ",";
    }
    ","
}

/// Iterate data rows of a delimited file, splitting each line on `delim`.
/// Blank lines are skipped; `f` gets the 1-based line number and fields.
pub(crate) fn for_each_row<F>(
    path: &Path,
    contents: &str,
    delim: &str,
    mut f: F,
) -> Result<()>
where
    F: FnMut(usize, &[&str]) -> Result<()>,
{
    for (idx, line) in contents.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).collect();
        f(idx + 1, &fields).map_err(|e| match e {
            Error::ParseRow { message, .. } => Error::ParseRow {
                path: path.display().to_string(),
                line: idx + 1,
                message,
            },
            other => other,
        })?;
    }
    Ok(())
}

pub(crate) fn row_error(message: impl Into<String>) -> Error {
    Error::ParseRow {
        path: String::new(),
        line: 0,
        message: message.into(),
    }
}

/// Format an `f64` for the emitted CSVs; `Display` round-trips exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
