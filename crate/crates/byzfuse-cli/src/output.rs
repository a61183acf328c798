//! Result rows and atomic CSV/JSON writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::runspec::ResolvedSpec;

/// Fixed CSV column order: axis_value, rule, per_state_error,
/// sequence_error, stderr, trials, seed.
pub const CSV_HEADER: &str = "axis_value,rule,per_state_error,sequence_error,stderr,trials,seed";

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub axis_value: f64,
    pub rule: String,
    pub per_state_error: f64,
    pub sequence_error: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Document<'a> {
    pub spec: &'a ResolvedSpec,
    pub rows: &'a [Row],
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.axis_value, r.rule, r.per_state_error, r.sequence_error, r.stderr, r.trials, r.seed
        ));
    }
    out
}

pub fn to_json(spec: &ResolvedSpec, rows: &[Row]) -> String {
    let doc = Document { spec, rows };
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

/// Write the payload via a temporary file in the destination directory and
/// rename it into place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, payload: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(payload.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
