//! Run header and result sinks.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

pub const OUTPUT_DIR_ENV: &str = "FINETTI_OUTPUT_DIR";

/// Resolves where a result goes: an explicit path (relative to the output
/// directory when one is configured), else `<dir>/<default_name>`, else stdout.
pub fn resolve(explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    let dir = env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
    match (explicit, dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    }
}

pub fn emit(target: Option<&Path>, body: &str) -> Result<()> {
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// One-line JSON header printed before any result.
pub fn header(command: &str, params: &impl Serialize, seed: u64, output: Option<&Path>) -> Result<String> {
    Ok(json!({
        "command": command,
        "params": serde_json::to_value(params)?,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "output": output.map(|p| p.display().to_string()),
    })
    .to_string())
}

pub fn csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
