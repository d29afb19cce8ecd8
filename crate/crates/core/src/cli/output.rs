//! CSV and SVG emission with the resolved configuration as a comment header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::PixelatedPulse;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

/// Lossless text form: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A `result.csv` value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<i32> for Cell {
    fn from(n: i32) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// Where and how one command writes its files.
#[derive(Debug, Clone)]
pub struct Sink {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    header: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(directory: &Path, formats: &[Format], command: &str, seed: u64, resolved: &Value) -> Result<Self> {
        fs::create_dir_all(directory).map_err(|source| Error::Io {
            path: directory.to_path_buf(),
            source,
        })?;
        let mut header = vec![
            format!("lzforge {}", env!("CARGO_PKG_VERSION")),
            format!("command: {command}"),
            format!("seed: {seed}"),
            "config:".to_string(),
        ];
        let pretty = serde_json::to_string_pretty(resolved).unwrap_or_else(|_| resolved.to_string());
        header.extend(pretty.lines().map(str::to_string));
        Ok(Sink {
            directory: directory.to_path_buf(),
            formats: formats.to_vec(),
            header,
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Header lines, each prefixed `# `.
    pub fn comment(&self) -> String {
        self.header.iter().map(|l| format!("# {l}\n")).collect()
    }

    fn write_file(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let path = self.directory.join(name);
        let io = |source| Error::Io {
            path: path.clone(),
            source,
        };
        let mut f = fs::File::create(&path).map_err(io)?;
        f.write_all(body).map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    /// Numeric table; skipped unless CSV output is enabled.
    pub fn table(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut body = self.comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut body);
            w.write_record(columns).map_err(csv_err)?;
            for row in rows {
                w.write_record(row.iter().map(|x| num(*x))).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Numeric(e.to_string()))?;
        }
        self.write_file(name, &body)
    }

    /// `name,value` rows.
    pub fn results(&mut self, name: &str, rows: &[(&str, Cell)]) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut body = self.comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut body);
            w.write_record(["name", "value"]).map_err(csv_err)?;
            for (k, v) in rows {
                w.write_record([k.to_string(), v.render()]).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Numeric(e.to_string()))?;
        }
        self.write_file(name, &body)
    }

    /// Pixel midpoint times and values.
    pub fn pulse(&mut self, name: &str, pulse: &PixelatedPulse) -> Result<()> {
        let rows = pulse
            .values
            .iter()
            .enumerate()
            .map(|(k, &e)| vec![pulse.pixel_time(k), e]);
        self.table(name, &["t", "epsilon"], rows)
    }

    pub fn svg(&mut self, name: &str, render: impl FnOnce(&str) -> String) -> Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let body = render(&self.comment());
        self.write_file(name, body.as_bytes())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numeric(format!("csv: {e}"))
}

/// Numeric columns of a CSV file with a header row and `#` comments.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let bad = |message: String| Error::Validation {
        field: path.display().to_string(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => bad(format!("{other:?}")),
        })?;
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("row {}: `{s}` is not a number", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Rebuilds a pixelated pulse from a `t, epsilon` table of pixel midpoints.
pub fn read_pulse(path: &Path) -> Result<PixelatedPulse> {
    let (columns, rows) = read_table(path)?;
    let bad = |message: &str| Error::Validation {
        field: path.display().to_string(),
        message: message.into(),
    };
    let ti = columns.iter().position(|c| c == "t").ok_or_else(|| bad("missing column `t`"))?;
    let ei = columns
        .iter()
        .position(|c| c == "epsilon")
        .ok_or_else(|| bad("missing column `epsilon`"))?;
    if rows.len() < 2 {
        return Err(bad("a pulse table needs at least two pixels"));
    }
    let t: Vec<f64> = rows.iter().map(|r| r[ti]).collect();
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(bad("pixel times must be evenly spaced and increasing"));
    }
    PixelatedPulse::new(rows.iter().map(|r| r[ei]).collect(), dt, t[0] - 0.5 * dt)
}
