//! `key = value` config files, expanded into command-line flags.

use std::path::Path;

use crate::error::CliError;

/// Turns a config file into `--key value` arguments.
///
/// Keys are long flag names, with or without the leading dashes; underscores
/// are accepted in place of hyphens. `true` and `false` switch a boolean flag
/// on or off. Blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key", i + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Finds `--config FILE` (or `--config=FILE`) in raw arguments.
fn config_path(args: &[String]) -> Option<&str> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(String::as_str);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p);
        }
    }
    None
}

/// Position of the first argument that is neither a flag nor the config path.
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            i += 2;
        } else if args[i].starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Inserts the flags of a config file right after the subcommand, so that
/// flags given on the command line override them.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let extra = parse(&text)?;
    let Some(sub) = subcommand_index(&args) else { return Ok(args) };
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}
