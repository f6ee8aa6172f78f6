//! `--config FILE`: `key = value` lines become `--key value` flags placed
//! before the command-line flags, which therefore win.

use std::ffi::OsString;
use std::path::Path;

use anyhow::Context;

use crate::UsageError;

pub fn parse_config(text: &str) -> anyhow::Result<Vec<String>> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return Err(UsageError(format!("config line {}: expected key = value", n + 1)).into()),
        };
        if key.is_empty() || key.starts_with('-') {
            return Err(UsageError(format!("config line {}: bad key '{key}'", n + 1)).into());
        }
        let key = key.replace('_', "-");
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            v => {
                flags.push(format!("--{key}"));
                flags.push(v.trim_matches('"').to_string());
            }
        }
    }
    Ok(flags)
}

/// Removes `--config` from `argv` and splices the file's flags in right
/// after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => match it.next() {
                Some(p) => config = Some(p),
                None => return Err(UsageError("--config needs a file".into()).into()),
            },
            Some(s) if s.starts_with("--config=") => config = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let flags = parse_config(&text)?;
    // first positional after the program name is the subcommand
    let at = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map_or(rest.len(), |i| i + 2);
    let tail = rest.split_off(at.min(rest.len()));
    rest.extend(flags.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}
