//! Table and summary emission with provenance headers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance stamped on every emitted file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub dispersion_model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_omega: Option<f64>,
}

impl Provenance {
    pub fn new(config_sha256: &str, dispersion_model: &str) -> Self {
        Self {
            tool: "cfs",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_sha256.to_string(),
            dispersion_model: dispersion_model.to_string(),
            truncation_omega: None,
        }
    }

    fn header_lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {}", self.tool, self.version);
        let _ = writeln!(s, "# config_sha256 = {}", self.config_sha256);
        let _ = writeln!(s, "# dispersion_model = {}", self.dispersion_model);
        if let Some(t) = self.truncation_omega {
            let _ = writeln!(s, "# truncation_omega_rad_s = {t:.6e}");
        }
        s
    }
}

/// A tabular result: fixed column names and rows of numbers or strings.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes a table in the requested format; CSV carries the provenance as
/// `#` comment lines, JSON embeds it as a field.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: Format,
    prov: &Provenance,
    table: &Table,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut s = prov.header_lines();
            let _ = writeln!(s, "{}", table.columns.join(","));
            for row in &table.rows {
                let _ = writeln!(s, "{}", row.join(","));
            }
            std::fs::write(&path, s).with_context(|| format!("write {}", path.display()))?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            let doc = serde_json::json!({
                "provenance": prov,
                "columns": table.columns,
                "rows": table.rows,
            });
            std::fs::write(&path, serde_json::to_string_pretty(&doc)?)
                .with_context(|| format!("write {}", path.display()))?;
            Ok(path)
        }
    }
}

/// Writes a JSON summary document (verdicts, maps) regardless of the table
/// format.
pub fn write_summary<T: Serialize>(
    dir: &Path,
    stem: &str,
    prov: &Provenance,
    payload: &T,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.json"));
    let doc = serde_json::json!({
        "provenance": prov,
        "result": payload,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("write {}", path.display()))?;
    Ok(path)
}
