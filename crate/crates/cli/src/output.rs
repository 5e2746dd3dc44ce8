//! Output helpers: atomic file writes, JSON documents, CSV fields.

use std::fs;
use std::path::Path;

use serde::Serialize;

pub type BoxError = Box<dyn std::error::Error>;

/// Current output schema version, stamped into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Write bytes through a temporary file and rename into place.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), BoxError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize to pretty JSON and write atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BoxError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, &text)
}

/// CSV field for an optional value; undefined prints as an empty field.
pub fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
