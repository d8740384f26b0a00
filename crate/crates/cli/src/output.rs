//! Deterministic text output: CSV data files and TOML summaries.
//!
//! Every float is written with 17 significant digits so a file re-parses to
//! the exact same doubles, and data files never contain anything that varies
//! between runs with the same seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::AppError;

/// `{:.16e}` with TOML-compatible spellings of the non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Resolved config as `# `-prefixed lines.
pub fn comment_block(config_toml: &str) -> String {
    let mut out = String::from("# resolved configuration\n");
    for line in config_toml.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(config_toml: &str, header: &[&str]) -> Self {
        let mut text = comment_block(config_toml);
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Ordered `key = value` pairs followed by the echoed config.
#[derive(Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new(version: &str, experiment: &str) -> Self {
        let mut s = Self::default();
        s.string("version", version);
        s.string("experiment", experiment);
        s
    }

    pub fn float(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key} = {}", num(v));
    }

    pub fn int(&mut self, key: &str, v: u64) {
        let _ = writeln!(self.text, "{key} = {v}");
    }

    pub fn boolean(&mut self, key: &str, v: bool) {
        let _ = writeln!(self.text, "{key} = {v}");
    }

    pub fn string(&mut self, key: &str, v: &str) {
        let _ = writeln!(self.text, "{key} = {}", toml::Value::String(v.to_string()));
    }

    pub fn floats(&mut self, key: &str, v: &[f64]) {
        let items: Vec<String> = v.iter().map(|x| num(*x)).collect();
        let _ = writeln!(self.text, "{key} = [{}]", items.join(", "));
    }

    /// Appends the resolved config under `[config]` and returns the document.
    pub fn finish(self, config: &toml::Table) -> Result<String, AppError> {
        let mut doc = toml::Table::new();
        doc.insert("config".into(), toml::Value::Table(config.clone()));
        let tail = toml::to_string(&doc).map_err(|e| AppError::Config(format!("cannot echo config: {e}")))?;
        Ok(format!("{}\n{tail}", self.text))
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, AppError> {
    fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
