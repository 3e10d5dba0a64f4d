use std::fs;
use std::path::Path;

use pqlap_core::Field;
use serde::Serialize;

use crate::{Outcome, RunError};

/// Run facts that change between otherwise identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: Option<String>,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

/// `x,value` or `x,y,value`, one row per node.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<(), RunError> {
    let grid = field.grid();
    let mut w = csv::Writer::from_path(path)?;
    if grid.dim() == 1 {
        w.write_record(["x", "value"])?;
    } else {
        w.write_record(["x", "y", "value"])?;
    }
    for i in 0..grid.node_count() {
        let (x, y) = grid.coords(i);
        let v = field.get(i);
        if grid.dim() == 1 {
            w.write_record([x.to_string(), v.to_string()])?;
        } else {
            w.write_record([x.to_string(), y.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `report.json`, `metadata.json`, `fields/*.csv` and `iterations.csv`
/// under `dir`.
pub fn write_outputs(dir: &Path, outcome: &Outcome, meta: &Metadata) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_json(&dir.join("metadata.json"), meta)?;
    if !outcome.fields.is_empty() {
        let fields = dir.join("fields");
        fs::create_dir_all(&fields)?;
        for (name, f) in &outcome.fields {
            write_field_csv(&fields.join(format!("{name}.csv")), f)?;
        }
    }
    if let Some((column, values)) = &outcome.iterations {
        let mut w = csv::Writer::from_path(dir.join("iterations.csv"))?;
        w.write_record(["iteration", column.as_str()])?;
        for (k, v) in values.iter().enumerate() {
            w.write_record([(k + 1).to_string(), v.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}
