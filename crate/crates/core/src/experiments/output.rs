//! Result files for one command run.
//!
//! Data files are staged in memory and written only when the run finishes:
//! into the output directory on success, or into its `quarantine/`
//! subdirectory when a stage failed. Every CSV row and JSON line carries the
//! config hash; run-dependent facts such as timestamps go to the metadata
//! sidecar only, so data files are byte-identical across reruns.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// A CSV table whose first two columns are `seed` and `method`.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// `columns` are the data columns after `seed` and `method`.
    pub fn new(columns: &[&str]) -> Self {
        let mut all = vec!["seed".to_string(), "method".to_string()];
        all.extend(columns.iter().map(|c| c.to_string()));
        Table { columns: all, rows: Vec::new() }
    }

    pub fn push(&mut self, seed: u64, method: &str, values: Vec<String>) {
        assert_eq!(values.len() + 2, self.columns.len(), "row width does not match the header");
        let mut row = vec![seed.to_string(), method.to_string()];
        row.extend(values);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn render(&self, hash: &str) -> String {
        let mut out = self.columns.join(",");
        out.push_str(",config_hash\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{hash}", row.join(","));
        }
        out
    }
}

/// Formats a row of displayable values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($v.to_string()),*]
    };
}

#[derive(Debug)]
pub struct RunOutput {
    id: String,
    hash: String,
    out_dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    metadata: Map<String, Value>,
    started: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunOutput {
    pub fn new(config: &ExperimentConfig) -> Self {
        let mut metadata = Map::new();
        metadata.insert("experiment".into(), json!(config.id));
        metadata.insert("config_hash".into(), json!(config.hash()));
        metadata.insert("seeds".into(), json!(config.seeds));
        metadata.insert("config".into(), json!(config.settings.canonical()));
        metadata.insert("crate_version".into(), json!(env!("CARGO_PKG_VERSION")));
        RunOutput {
            id: config.id.clone(),
            hash: config.hash(),
            out_dir: config.out_dir.clone(),
            files: Vec::new(),
            metadata,
            started: unix_now(),
        }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Records a named fact in the metadata sidecar.
    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn table(&mut self, name: &str, table: &Table) {
        let text = table.render(&self.hash);
        self.files.push((name.to_string(), text.into_bytes()));
    }

    /// JSON lines; each object gains a `config_hash` field.
    pub fn json_lines(&mut self, name: &str, rows: Vec<Value>) -> Result<()> {
        let mut out = String::new();
        for mut row in rows {
            let obj = row.as_object_mut().ok_or_else(|| Error::config("JSON rows must be objects"))?;
            if !obj.contains_key("seed") || !obj.contains_key("method") {
                return Err(Error::config("JSON rows need seed and method fields"));
            }
            obj.insert("config_hash".into(), json!(self.hash));
            out.push_str(&serde_json::to_string(&row).map_err(|e| Error::Format(e.to_string()))?);
            out.push('\n');
        }
        self.files.push((name.to_string(), out.into_bytes()));
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn file_names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn write_into(&mut self, dir: &Path, status: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        self.metadata.insert("status".into(), json!(status));
        self.metadata.insert("started_unix".into(), json!(self.started));
        self.metadata.insert("finished_unix".into(), json!(unix_now()));
        self.metadata.insert("files".into(), json!(self.file_names()));
        let meta = serde_json::to_string_pretty(&Value::Object(self.metadata.clone())).map_err(|e| Error::Format(e.to_string()))?;
        let meta_path = dir.join(format!("{}.meta.json", self.id));
        std::fs::write(&meta_path, meta + "\n")?;
        Ok(written)
    }

    /// Writes staged files to the output directory, or to `quarantine/`
    /// and returns the stage error if `outcome` failed.
    pub fn finish(mut self, outcome: Result<()>) -> Result<Vec<PathBuf>> {
        match outcome {
            Ok(()) => self.write_into(&self.out_dir.clone(), "ok"),
            Err(e) => {
                self.note("error", e.to_string());
                let dir = self.out_dir.join("quarantine");
                self.write_into(&dir, "failed")?;
                Err(e)
            }
        }
    }
}

/// Wraps a stage error with the stage name, keeping its kind.
pub fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{name}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{name}: {m}")),
        Error::Format(m) => Error::Format(format!("{name}: {m}")),
        Error::Dimension { context, expected, found } => Error::Config(format!("{name}: dimension mismatch in {context}: expected {expected}, found {found}")),
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{name}: {io}"))),
    })
}
