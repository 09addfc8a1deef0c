//! CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

/// A CSV cell. Floats use Rust's shortest round-trip formatting.
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl Cell {
    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        match self {
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Float(v) => write!(out, "{v}"),
        }
    }
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            cell.write(&mut out)?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub achieved_tolerances: BTreeMap<String, f64>,
    /// command-specific results that are not tables
    pub results: BTreeMap<String, serde_json::Value>,
    pub wall_time_ms: u64,
}

/// Collects the manifest of one command run into its output directory.
pub struct Run {
    dir: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

impl Run {
    pub fn start(command: &str, dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Run {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                parameters: BTreeMap::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                achieved_tolerances: BTreeMap::new(),
                results: BTreeMap::new(),
                wall_time_ms: 0,
            },
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.manifest.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.manifest.achieved_tolerances.insert(key.to_string(), value);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.manifest.results.insert(key.to_string(), v);
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.manifest.wall_time_ms = self.started.elapsed().as_millis() as u64;
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)
    }
}
