//! Flat `key = value` run files with an optional `[sweep]` section.
//!
//! ```text
//! # thresholds over bias and squeezing
//! k = 2e7
//! n = 2e9
//! [sweep]
//! q = 0.1:0.9:9
//! r = -0.5:0.5:5
//! ```
//!
//! Top-level keys are long flag names of the chosen command; switches take
//! `true` or `false`. Flags given on the command line win over the file.

use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, PartialEq)]
pub struct RunFile {
    pub values: Vec<(String, String)>,
    pub sweep: Vec<String>,
}

pub fn parse(text: &str) -> Result<RunFile> {
    let mut out = RunFile::default();
    let mut in_sweep = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line != "[sweep]" {
                bail!("line {}: unknown section {line}", lineno + 1);
            }
            if in_sweep {
                bail!("line {}: duplicate [sweep] section", lineno + 1);
            }
            in_sweep = true;
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value", lineno + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            bail!("line {}: empty key or value", lineno + 1);
        }
        if in_sweep {
            out.sweep.push(format!("{key}={value}"));
        } else {
            out.values.push((key, value));
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<RunFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("in config {}", path.display()))
}

/// Pulls `--config <path>` out of `args`.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a path");
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(path) = args[i].strip_prefix("--config=") {
            found = Some(path.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

fn has_flag(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let eq = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&eq))
}

/// Appends file values that the command line does not already set.
pub fn merge(args: &mut Vec<String>, file: &RunFile) {
    let mut extra = Vec::new();
    for (key, value) in &file.values {
        if has_flag(args, key) || value == "false" {
            continue;
        }
        extra.push(format!("--{key}"));
        if value != "true" {
            extra.push(value.clone());
        }
    }
    if !has_flag(args, "sweep") {
        for s in &file.sweep {
            extra.push("--sweep".into());
            extra.push(s.clone());
        }
    }
    args.extend(extra);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_sections_and_comments() {
        let f = parse("k = 2e7  # samples\nseed=3\n\n[sweep]\nq = 0.1:0.9:9\n").unwrap();
        assert_eq!(f.values, vec![("k".into(), "2e7".into()), ("seed".into(), "3".into())]);
        assert_eq!(f.sweep, vec!["q=0.1:0.9:9".to_string()]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("k 2").is_err());
        assert!(parse("[grid]\nq=1").is_err());
        assert!(parse("[sweep]\n[sweep]").is_err());
        assert!(parse("k =").is_err());
    }

    #[test]
    fn command_line_wins() {
        let f = parse("k = 1e3\nq = 0.2\nverbose = true\nnumeric-gamma = false\n[sweep]\nr=0:1:3").unwrap();
        let mut args = strings(&["finetti", "threshold", "--q=0.3"]);
        merge(&mut args, &f);
        assert_eq!(
            args,
            strings(&[
                "finetti",
                "threshold",
                "--q=0.3",
                "--k",
                "1e3",
                "--verbose",
                "--sweep",
                "r=0:1:3"
            ])
        );
    }

    #[test]
    fn config_flag_is_removed() {
        let mut args = strings(&["finetti", "--config", "a.cfg", "bounds"]);
        assert_eq!(take_config_flag(&mut args).unwrap().as_deref(), Some("a.cfg"));
        assert_eq!(args, strings(&["finetti", "bounds"]));
        let mut args = strings(&["finetti", "bounds", "--config=b.cfg"]);
        assert_eq!(take_config_flag(&mut args).unwrap().as_deref(), Some("b.cfg"));
        assert!(take_config_flag(&mut strings(&["x", "--config"])).is_err());
    }
}
