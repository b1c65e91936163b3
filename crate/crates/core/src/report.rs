//! Versioned JSON envelopes and CSV tables for command output.

use std::path::Path;

use serde::Serialize;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: crate::config::digest(bytes),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub format_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub warnings: Vec<String>,
    pub results: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, config_hash: String, seed: u64, inputs: Vec<InputDigest>, warnings: Vec<String>, results: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool: TOOL_NAME,
            tool_version: TOOL_VERSION,
            command: command.into(),
            config_hash,
            seed,
            inputs,
            warnings,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }
}

/// A CSV table with a `# format_version` comment line ahead of the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        let body = String::from_utf8(w.into_inner().unwrap()).unwrap();
        format!("# format_version={FORMAT_VERSION}\n{body}")
    }
}

/// Fixed-precision float formatting for tables.
pub fn f(v: f64) -> String {
    format!("{v:.9e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_has_version_fields() {
        let e = Envelope::new("design", "abc".into(), 7, vec![], vec![], 1.5);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["tool_version"], TOOL_VERSION);
        assert_eq!(v["config_hash"], "abc");
        assert_eq!(v["results"], 1.5);
    }

    #[test]
    fn table_quotes_and_versions() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(["1".to_string(), "p, q".to_string()]);
        assert_eq!(t.to_csv(), "# format_version=1\na,b\n1,\"p, q\"\n");
    }
}
