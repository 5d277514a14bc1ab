//! CSV and JSON emission.
//!
//! A CSV file starts with `# key: value` metadata lines, then a header row,
//! then data rows. Numbers are written with 17 significant digits so they
//! parse back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use scramble_core::TimeSeriesRecord;

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        match s.parse::<f64>() {
            Ok(v) => Cell::Num(v),
            Err(_) => Cell::Text(s.to_string()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// One output file: named columns and metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }

    /// Time column `t` plus one column per record. All records must share a grid.
    pub fn from_records(name: impl Into<String>, records: &[&TimeSeriesRecord]) -> RunResult<Self> {
        let name = name.into();
        let first = records.first().ok_or_else(|| RunError::config(format!("table {name} has no records")))?;
        let mut columns = vec!["t"];
        columns.extend(records.iter().map(|r| r.label.as_str()));
        let mut table = Table::new(name, &columns);
        for r in records {
            if r.times != first.times {
                return Err(RunError::config(format!("record {} is on a different time grid", r.label)));
            }
            for (k, v) in &r.metadata {
                table.metadata.insert(format!("{}.{k}", r.label), v.clone());
            }
        }
        for (i, &t) in first.times.iter().enumerate() {
            let mut row = vec![t];
            row.extend(records.iter().map(|r| r.values[i]));
            table.push_nums(&row);
        }
        Ok(table)
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[idx].as_f64()).collect()
    }

    /// One record per non-`t` column of a time table.
    pub fn to_records(&self) -> RunResult<Vec<TimeSeriesRecord>> {
        let times = self
            .column("t")
            .ok_or_else(|| RunError::config(format!("table {} has no numeric t column", self.name)))?;
        let mut out = Vec::new();
        for c in self.columns.iter().filter(|c| c.as_str() != "t") {
            let values = self
                .column(c)
                .ok_or_else(|| RunError::config(format!("column {c} of {} is not numeric", self.name)))?;
            out.push(TimeSeriesRecord::new(c.clone(), times.clone(), values)?);
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}: {}", v.replace('\n', " "));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        s.push_str(&self.csv_body());
        s
    }

    fn csv_body(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self, String> {
        let mut metadata = BTreeMap::new();
        let mut lines = text.lines();
        let header = loop {
            let line = lines.next().ok_or("missing header row")?;
            match line.strip_prefix('#') {
                Some(rest) => {
                    let (k, v) = rest.trim_start().split_once(": ").ok_or_else(|| format!("bad metadata line {line:?}"))?;
                    metadata.insert(k.to_string(), v.to_string());
                }
                None => break line,
            }
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines {
            let row: Vec<Cell> = line.split(',').map(Cell::parse).collect();
            if row.len() != columns.len() {
                return Err(format!("row has {} cells, header has {}", row.len(), columns.len()));
            }
            rows.push(row);
        }
        Ok(Table { name: name.into(), metadata, columns, rows })
    }

    pub fn read_csv(path: &Path) -> RunResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        Table::from_csv(name, &text).map_err(|reason| RunError::Parse { path: path.to_path_buf(), reason })
    }
}

/// SHA-256 of a CSV with its `#` lines removed.
pub fn body_checksum(csv: &str) -> String {
    let mut h = Sha256::new();
    for line in csv.lines().filter(|l| !l.starts_with('#')) {
        h.update(line.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> RunResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let file_name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        RunError::io(path, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.1).parse::<f64>().unwrap(), -0.1);
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_round_trip_with_text() {
        let mut t = Table::new("fits", &["protocol", "exponent"]).meta("physics.N", 100);
        t.push(vec!["regular".into(), 2.0000001.into()]);
        t.push(vec!["dpt".into(), (1.0f64 / 3.0).into()]);
        let back = Table::from_csv("fits", &t.to_csv()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn checksum_ignores_metadata() {
        let mut a = Table::new("x", &["t", "v"]).meta("start", "now");
        a.push_nums(&[0.0, 1.0]);
        let b = Table { metadata: BTreeMap::new(), ..a.clone() };
        assert_eq!(body_checksum(&a.to_csv()), body_checksum(&b.to_csv()));
        assert_ne!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn records_share_grid() {
        let r1 = TimeSeriesRecord::new("a", vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let r2 = TimeSeriesRecord::new("b", vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(Table::from_records("x", &[&r1, &r2]).is_err());
        let t = Table::from_records("x", &[&r1]).unwrap();
        assert_eq!(t.to_records().unwrap()[0], r1);
    }
}
