//! Flat `key = value` config files. Each key is a long flag name without the
//! leading dashes; values are spliced into the argument list right after
//! the subcommand, so flags given on the command line still win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Parses config text into `--key value` pairs. `#` starts a comment;
/// `true` makes a bare switch and `false` drops the key.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected `key = value`, got `{line}`",
                origin.display(),
                i + 1
            );
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            bail!("{}:{}: empty key", origin.display(), i + 1);
        }
        if key == "config" {
            bail!(
                "{}:{}: config files cannot include other config files",
                origin.display(),
                i + 1
            );
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Where `--config` appears in `args`, returns the path.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts the config file's flags after the subcommand name (the first
/// non-flag argument).
pub fn splice_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let extra = parse_config(&text, &path)?;
    let Some(sub) = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
    else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
