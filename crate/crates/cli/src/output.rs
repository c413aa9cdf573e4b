//! Result files. CSV data carries `#` header lines (tool version and the
//! resolved run config as one JSON line); JSON output holds the same config
//! next to `columns` and `rows`. Every run also writes a `<out>.meta.json`
//! sidecar with timing and thread count, which are kept out of the data file
//! so that reruns reproduce it byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig, CONFIG_HEADER};
use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<u8> for Cell {
    fn from(x: u8) -> Self {
        Self::Int(x.into())
    }
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Float(x) => x,
            Self::Int(i) => i as f64,
        }
    }

    /// 17 significant digits, `.` as decimal point regardless of locale.
    fn csv(self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Float(x) if x.is_nan() => "NaN".into(),
            Self::Float(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.into(),
            Self::Float(x) => format!("{x:.16e}"),
        }
    }

    fn json(self) -> Value {
        match self {
            Self::Int(i) => json!(i),
            // serde_json maps non-finite floats to null
            Self::Float(x) => json!(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].as_f64()).collect())
    }
}

pub fn render_csv(cfg: &RunConfig, table: &Table) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# sshlab {VERSION} {}\n", cfg.experiment));
    out.push_str(CONFIG_HEADER);
    out.push_str(&serde_json::to_string(cfg)?);
    out.push('\n');
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|c| c.csv()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn render_json(cfg: &RunConfig, table: &Table) -> Result<String> {
    let rows: Vec<Vec<Value>> = table
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.json()).collect())
        .collect();
    let doc = json!({
        "generator": format!("sshlab {VERSION}"),
        "config": cfg,
        "columns": table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn render(cfg: &RunConfig, table: &Table) -> Result<String> {
    match cfg.output_format {
        OutputFormat::Csv => render_csv(cfg, table),
        OutputFormat::Json => render_json(cfg, table),
    }
}

/// The data part of a result file: CSV lines after the `#` header, or the
/// `columns` and `rows` of a JSON result.
pub fn data_section(text: &str) -> Result<String> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text)?;
        return Ok(serde_json::to_string(&json!({
            "columns": doc["columns"],
            "rows": doc["rows"],
        }))?);
    }
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect())
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    output.with_file_name(name)
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    generator: String,
    config: &'a RunConfig,
    master_seed: u64,
    rows: usize,
    threads: usize,
    wall_time_seconds: f64,
}

/// Writes the result file and its metadata sidecar.
pub fn write_result(
    cfg: &RunConfig,
    table: &Table,
    threads: usize,
    wall_time_seconds: f64,
) -> Result<PathBuf> {
    let path = PathBuf::from(&cfg.output_path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    fs::write(&path, render(cfg, table)?).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let meta = Sidecar {
        generator: format!("sshlab {VERSION}"),
        config: cfg,
        master_seed: cfg.master_seed,
        rows: table.rows.len(),
        threads,
        wall_time_seconds,
    };
    let side = sidecar_path(&path);
    fs::write(&side, serde_json::to_string_pretty(&meta)? + "\n")
        .map_err(|e| CliError::io(side.display().to_string(), e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConfigOverrides, Experiment};

    fn sample() -> (RunConfig, Table) {
        let cfg = RunConfig::resolve(Experiment::GapScan, None, &ConfigOverrides::default()).unwrap();
        let mut t = Table::new(["gamma", "value", "count"]);
        t.push(vec![0.1.into(), (1.0 / 3.0).into(), 4usize.into()]);
        t.push(vec![0.2.into(), f64::NAN.into(), 0usize.into()]);
        (cfg, t)
    }

    #[test]
    fn csv_layout() {
        let (cfg, t) = sample();
        let text = render_csv(&cfg, &t).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# sshlab"));
        assert!(lines[1].starts_with(CONFIG_HEADER));
        assert_eq!(lines[2], "gamma,value,count");
        assert_eq!(lines[3], "1.0000000000000001e-1,3.3333333333333331e-1,4");
        assert_eq!(lines[4], "2.0000000000000001e-1,NaN,0");
        assert_eq!(data_section(&text).unwrap().lines().count(), 3);
        let back: f64 = "3.3333333333333331e-1".parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn json_layout() {
        let (mut cfg, t) = sample();
        cfg.output_format = OutputFormat::Json;
        let text = render_json(&cfg, &t).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["columns"][1], "value");
        assert!(doc["rows"][1][1].is_null());
        assert_eq!(
            serde_json::from_value::<RunConfig>(doc["config"].clone()).unwrap(),
            cfg
        );
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.meta.json")
        );
    }
}
