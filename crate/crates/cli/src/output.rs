//! Artifact writer. Only the coordinating thread touches the filesystem.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pavg_core::measures::fmt_f64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> Result<()> {
        self.write(name, &table.render())
    }

    /// `<command>.json`: results plus the resolved config, version and seeds.
    pub fn summary(&mut self, command: &str, cfg: &ExperimentConfig, seeds: Value, results: Value) -> Result<()> {
        let base: serde_json::Map<String, Value> = cfg
            .seeds
            .named()
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let doc = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "seeds": { "base": base, "derived": seeds },
            "files": self.written,
            "results": results,
        });
        let text = serde_json::to_string_pretty(&doc)?;
        self.write(&format!("{command}.json"), &(text + "\n"))
    }
}

/// Plain CSV table; floats always go through [`Csv::f`].
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: ToString>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// 17 significant digits.
    pub fn f(v: f64) -> String {
        fmt_f64(v)
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Numbered column names `prefix_1..=n`.
pub fn cols(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}_{k}"))
}
