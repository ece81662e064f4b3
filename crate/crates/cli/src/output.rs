//! Deterministic JSON/CSV writers and the run manifest.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use stringfock::util::fmt_f64;

/// Data produced by a command.
pub enum Data {
    Json(Value),
    Csv { header: Vec<String>, rows: Vec<Vec<String>> },
}

pub struct Report {
    pub data: Data,
    pub passed: bool,
    pub summary: Value,
}

impl Report {
    pub fn json(value: Value, passed: bool) -> Self {
        Report { data: Data::Json(value), passed, summary: Value::Null }
    }

    pub fn csv(header: &[&str], rows: Vec<Vec<String>>, passed: bool) -> Self {
        Report {
            data: Data::Csv { header: header.iter().map(|s| s.to_string()).collect(), rows },
            passed,
            summary: Value::Null,
        }
    }

    pub fn with_summary(mut self, summary: Value) -> Self {
        self.summary = summary;
        self
    }
}

/// Pretty JSON with every non-integer number written to 17 significant digits.
pub fn to_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_value(s: &mut String, v: &Value, depth: usize) {
    let pad = |s: &mut String, d: usize| s.push_str(&"  ".repeat(d));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => s.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                s.push_str(&fmt_f64(x));
            } else {
                s.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                s.push_str("[]");
                return;
            }
            s.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(s, depth + 1);
                write_value(s, item, depth + 1);
                s.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                s.push_str("{}");
                return;
            }
            s.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(s, depth + 1);
                let _ = write!(s, "{}: ", Value::String(k.clone()));
                write_value(s, item, depth + 1);
                s.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push('}');
        }
    }
}

pub fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn render(data: &Data) -> String {
    match data {
        Data::Json(v) => to_json(v),
        Data::Csv { header, rows } => to_csv(header, rows),
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes data to `out` (or stdout) and the manifest next to it (or to stderr).
pub fn emit(out: Option<&Path>, data: &Data, manifest: &Value) -> std::io::Result<()> {
    let body = render(data);
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            std::fs::write(manifest_path(path), to_json(manifest))?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            std::io::stderr().write_all(to_json(manifest).as_bytes())?;
        }
    }
    Ok(())
}

pub fn f(x: f64) -> String {
    fmt_f64(x)
}
