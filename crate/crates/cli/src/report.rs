use std::io::Write;
use std::path::{Path, PathBuf};

use biphoton_povm::grid::FrequencyGrid;
use biphoton_povm::Warning;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Rows of numbers under a header. Matrices put the row-axis value in the
/// first column and the column-axis values in the header.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Table { name: name.to_string(), header, rows }
    }

    /// `values[(r, c)]` over `row_axis × col_axis`.
    pub fn matrix(name: &str, corner: &str, row_axis: &[f64], col_axis: &[f64], values: &DMatrix<f64>) -> Self {
        let mut header = vec![corner.to_string()];
        header.extend(col_axis.iter().map(|v| v.to_string()));
        let rows = row_axis
            .iter()
            .enumerate()
            .map(|(r, x)| std::iter::once(*x).chain(values.row(r).iter().copied()).collect())
            .collect();
        Table::new(name, header, rows)
    }

    pub fn joint(name: &str, gs: &FrequencyGrid, gi: &FrequencyGrid, values: &DMatrix<f64>) -> Self {
        Table::matrix(name, "omega_s\\omega_i", &gs.points(), &gi.points(), values)
    }

    fn write_csv(&self, w: impl Write) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub struct RunReport {
    pub command: &'static str,
    pub inputs: Value,
    pub results: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
    pub warnings: Vec<Warning>,
    pub tables: Vec<Table>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &'static str, inputs: Value) -> Self {
        RunReport {
            command,
            inputs,
            results: Map::new(),
            diagnostics: Map::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).expect("serializable result"));
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.to_string(), serde_json::to_value(value).expect("serializable diagnostic"));
    }

    fn envelope(&self, tables: Value) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": self.inputs,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "tables": tables,
            "wall_time_s": self.wall_time_s,
        })
    }

    /// Full report with every table inlined.
    pub fn to_json(&self) -> Value {
        let tables: Map<String, Value> = self
            .tables
            .iter()
            .map(|t| (t.name.clone(), json!({"header": t.header, "rows": t.rows})))
            .collect();
        self.envelope(Value::Object(tables))
    }

    /// Report with tables replaced by their shape and, for CSV runs, path.
    pub fn summary(&self, paths: &[(String, PathBuf)]) -> Value {
        let tables: Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                let path = paths.iter().find(|(n, _)| *n == t.name).map(|(_, p)| p.display().to_string());
                (t.name.clone(), json!({"rows": t.rows.len(), "columns": t.header.len(), "path": path}))
            })
            .collect();
        self.envelope(Value::Object(tables))
    }

    /// Writes the report and returns the CSV paths written, if any. With CSV
    /// the first table goes to `out` and the others next to it as
    /// `<stem>_<name>.csv`.
    pub fn write(&self, out: &Path, format: Format) -> Result<Vec<(String, PathBuf)>, CliError> {
        match format {
            Format::Json => {
                let text = serde_json::to_string_pretty(&self.to_json())?;
                atomic_write(out, |w| Ok(w.write_all(text.as_bytes())?))?;
                Ok(Vec::new())
            }
            Format::Csv => {
                let mut written = Vec::new();
                for (idx, table) in self.tables.iter().enumerate() {
                    let path = if idx == 0 { out.to_path_buf() } else { sibling(out, &table.name) };
                    atomic_write(&path, |w| table.write_csv(w))?;
                    written.push((table.name.clone(), path));
                }
                Ok(written)
            }
        }
    }
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}_{name}.csv"))
}

/// Writes through a temporary file in the target directory, then renames.
fn atomic_write(
    path: &Path,
    fill: impl FnOnce(&mut std::fs::File) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
