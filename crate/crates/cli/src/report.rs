//! CSV files with a `# key=value` header: one timestamp line, then the resolved config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::CliError;

pub const TIMESTAMP_KEY: &str = "# generated_unix=";

pub struct Csv {
    meta: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    /// Adds every top-level field of a serializable config as a header entry.
    pub fn meta_from<T: serde::Serialize>(&mut self, cfg: &T) {
        if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(cfg) {
            for (k, v) in map {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                self.meta(&k, s);
            }
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        debug_assert!(fields.iter().all(|f| !f.contains(',')), "unquoted comma in {fields:?}");
        self.rows.push(fields);
    }

    pub fn render(&self) -> String {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut out = format!("{TIMESTAMP_KEY}{stamp}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        write_file(dir, name, &self.render())
    }
}

pub fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Everything except the timestamp line, for comparing reruns.
pub fn body_without_timestamp(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with(TIMESTAMP_KEY))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.meta("delta", 0.05);
        c.row(vec![num(1.0), "x".into()]);
        let s = c.render();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with(TIMESTAMP_KEY));
        assert_eq!(&lines[1..], ["# delta=0.05", "a,b", "1.000000000000e0,x"]);
        assert_eq!(body_without_timestamp(&s), "# delta=0.05\na,b\n1.000000000000e0,x");
    }
}
