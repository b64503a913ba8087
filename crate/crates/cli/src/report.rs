use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use simplex_learn::geometry::format_f64_17;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// One row per point, full precision, no header.
pub fn write_rows_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format_f64_17(x)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
