use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::HarnessError;

fn io_error(path: &Path, e: impl ToString) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<PathBuf, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes `header` and `lines`, then a `# excluded_replicates=N` footer when
/// `excluded > 0`.
pub fn write_csv(path: &Path, header: &str, lines: &[String], excluded: usize) -> Result<PathBuf, HarnessError> {
    let mut out = String::with_capacity(64 * (lines.len() + 2));
    out.push_str(header);
    out.push('\n');
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    if excluded > 0 {
        let _ = writeln!(out, "# excluded_replicates={excluded}");
    }
    write_text(path, &out)
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<PathBuf, HarnessError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| io_error(path, e))?);
        out.push('\n');
    }
    write_text(path, &out)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    write_text(path, &(text + "\n"))
}

/// Drops every `"wall_time"` field from a JSON-lines document, for
/// comparing the outputs of two runs.
pub fn strip_wall_time(jsonl: &str) -> String {
    jsonl
        .lines()
        .map(|line| match serde_json::from_str::<serde_json::Value>(line) {
            Ok(mut v) => {
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("wall_time");
                }
                v.to_string()
            }
            Err(_) => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
