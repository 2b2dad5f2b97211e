//! Artifact writers: every file starts with the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::config::{Command, RunConfig};
use crate::error::{Error, Result};

/// One CSV cell.
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub struct Output {
    dir: PathBuf,
    command: Command,
    config: RunConfig,
}

impl Output {
    pub fn new(dir: &Path, command: Command, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), command, config: config.clone() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn header(&self) -> String {
        let mut s = format!("# phonocav {}\n", self.command.as_str());
        for line in self.config.to_toml().lines() {
            let _ = writeln!(s, "# {line}");
        }
        s
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn csv<I>(&self, name: &str, columns: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<Cell>>,
    {
        let mut s = self.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = match c {
                    Cell::Num(v) => write!(s, "{v:e}"),
                    Cell::Int(v) => write!(s, "{v}"),
                    Cell::Text(v) => write!(s, "{v}"),
                };
            }
            s.push('\n');
        }
        self.write(name, &s)
    }

    /// Writes `value` (an object) with the configuration under `_config`.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut map = Map::new();
        let mut config = match serde_json::to_value(&self.config)? {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        config.insert("command".into(), Value::String(self.command.as_str().into()));
        map.insert("_config".into(), Value::Object(config));
        match serde_json::to_value(value)? {
            Value::Object(m) => map.extend(m),
            other => {
                map.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(map))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Plain text with the header as leading comment lines.
    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let mut s = self.header();
        s.push_str(body);
        self.write(name, &s)
    }
}
