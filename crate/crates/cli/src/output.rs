use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clampfold::ProblemConfig;
use serde::Serialize;

/// Environment variable naming the output directory.
pub const OUTPUT_DIR_VAR: &str = "CLAMPFOLD_OUTPUT_DIR";
pub const FORMAT_VERSION: u32 = 1;
pub const RADIAL_CAVEAT: &str = "eigenvalues are computed on radial modes only";

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64.
            Cell::F(v) => format!("{v:.16e}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Serialize)]
pub struct Timestamps {
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub args: Vec<String>,
    pub configs: Vec<ProblemConfig>,
    pub meshes: Vec<usize>,
    pub outputs: Vec<String>,
    pub software_version: String,
    pub timestamps: Timestamps,
}

/// Collects the artifacts of one command and writes its manifest last.
pub struct Run {
    dir: PathBuf,
    command: String,
    args: Vec<String>,
    stem: String,
    started: u64,
    configs: Vec<ProblemConfig>,
    outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn resolve_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("clampfold-out"))
}

impl Run {
    pub fn new(dir: PathBuf, command: &str, stem: String) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            stem,
            started: unix_now(),
            configs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn stem(&self) -> &str {
        &self.stem
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add_config(&mut self, cfg: &ProblemConfig) {
        if !self.configs.contains(cfg) {
            self.configs.push(cfg.clone());
        }
    }

    fn record(&mut self, name: String) {
        debug_assert!(!self.outputs.contains(&name));
        self.outputs.push(name);
    }

    pub fn write_csv(&mut self, suffix: &str, table: &Table) -> std::io::Result<PathBuf> {
        let name = format!("{}{suffix}.csv", self.stem);
        let path = self.dir.join(&name);
        write_table(&path, table)?;
        self.record(name);
        Ok(path)
    }

    /// Record a file written by a worker (see [`write_table`]).
    pub fn adopt(&mut self, name: String) {
        self.record(name);
    }

    pub fn write_json<T: Serialize>(&mut self, suffix: &str, value: &T) -> std::io::Result<PathBuf> {
        let name = format!("{}{suffix}.json", self.stem);
        let path = self.dir.join(&name);
        write_json(&path, value)?;
        self.record(name);
        Ok(path)
    }

    pub fn finish(self, meshes: Vec<usize>) -> std::io::Result<PathBuf> {
        let manifest = RunManifest {
            format_version: FORMAT_VERSION,
            command: self.command,
            args: self.args,
            configs: self.configs,
            meshes,
            outputs: self.outputs,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamps: Timestamps {
                started_unix: self.started,
                finished_unix: unix_now(),
            },
        };
        let path = self.dir.join(format!("{}_manifest.json", self.stem));
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

pub fn write_table(path: &Path, table: &Table) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

/// Format a float for a file stem: `15`, `0.9`, `1e-3`.
pub fn stem_float(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 8 {
        s
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 22.915_123_456_789, 1e-300, f64::MAX] {
            let s = Cell::F(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn stems() {
        assert_eq!(stem_float(15.0), "15");
        assert_eq!(stem_float(0.001), "0.001");
        assert_eq!(stem_float(1.0 / 3.0), "3.333333333333333e-1");
    }
}
