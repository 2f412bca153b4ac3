use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = dir.join(name);
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    write().with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// `<stem>.meta.json` next to the outputs: tool version, command and the
/// effective parameters.
pub fn write_meta(
    dir: &Path,
    stem: &str,
    command: &str,
    params: Value,
    outputs: &[PathBuf],
) -> Result<()> {
    let path = dir.join(format!("{stem}.meta.json"));
    let names: Vec<String> = outputs
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "tool": "epps",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": params,
        "outputs": names,
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
