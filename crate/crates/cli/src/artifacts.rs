//! Deterministic artifact writers. Floats are rendered with Rust's
//! shortest-roundtrip formatting, so identical inputs always produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

/// Deterministic cell rendering for CSV: shortest-roundtrip floats,
/// lowercase specials.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Write a UTF-8 CSV with a header row and `\n` line endings.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{header}")?;
    let width = header.split(',').count();
    for row in rows {
        anyhow::ensure!(
            row.len() == width,
            "row has {} cells, header has {width}",
            row.len()
        );
        writeln!(out, "{}", row.join(","))?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
