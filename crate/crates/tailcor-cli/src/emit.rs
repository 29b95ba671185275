//! Deterministic serialization: every float is rounded to 12 significant
//! digits before formatting and JSON keys are emitted in sorted order, so a
//! repeated run writes byte-identical artifacts.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{CliError, Result};

pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let exp = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(11 - exp);
    let r = (v * factor).round() / factor;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Recursively round every number in a JSON tree.
pub fn round_tree(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    *v = serde_json::Number::from_f64(round_sig(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_tree),
        Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

/// A float formatted for CSV cells: 12 significant digits, plain decimal.
pub fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v))
}

pub fn option_num(v: Option<f64>) -> Value {
    match v {
        Some(x) => serde_json::json!(x),
        None => Value::Null,
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Where the companion artifacts of a CSV export live.
pub fn companion(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

pub struct Artifacts {
    /// The primary document, already serialized.
    pub primary: String,
    /// Manifest JSON when it cannot ride inside the primary document.
    pub manifest: Option<String>,
    /// Standard-error companion table for CSV matrix exports.
    pub se_table: Option<String>,
}

/// Send the artifacts to a file set or to stdout/stderr.
pub fn deliver(artifacts: &Artifacts, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            write_file(path, &artifacts.primary)?;
            if let Some(manifest) = &artifacts.manifest {
                write_file(&companion(path, ".manifest.json"), manifest)?;
            }
            if let Some(se) = &artifacts.se_table {
                write_file(&companion(path, ".se.csv"), se)?;
            }
        }
        None => {
            print!("{}", artifacts.primary);
            if let Some(manifest) = &artifacts.manifest {
                eprint!("{manifest}");
            }
        }
    }
    Ok(())
}

/// Render {manifest, result} as stable pretty JSON with a trailing newline.
pub fn json_document(manifest: Value, result: Value) -> String {
    let mut doc = serde_json::json!({ "manifest": manifest, "result": result });
    round_tree(&mut doc);
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable document");
    s.push('\n');
    s
}

pub fn manifest_document(manifest: Value) -> String {
    let mut m = manifest;
    round_tree(&mut m);
    let mut s = serde_json::to_string_pretty(&m).expect("serializable manifest");
    s.push('\n');
    s
}
