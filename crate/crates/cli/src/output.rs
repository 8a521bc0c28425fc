use crate::error::CliError;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;
use superefficiency::extended::format_extended;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => Err(CliError::config(None, format!("--format must be csv, json or both, got {other:?}"))),
        }
    }

    fn csv(self) -> bool {
        self != Format::Json
    }

    fn json(self) -> bool {
        self != Format::Csv
    }
}

pub struct Table {
    pub name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self { name, header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// CSV cell for a real number; infinities as `inf`/`-inf`.
pub fn num(x: f64) -> String {
    format_extended(x)
}

/// Everything a command produces, written once at the end of the run.
pub struct Artifact {
    pub command: &'static str,
    pub tables: Vec<Table>,
    pub texts: Vec<(String, String)>,
    pub result: Value,
    pub summary: String,
}

impl Artifact {
    pub fn new(command: &'static str, result: impl Serialize) -> Self {
        Self {
            command,
            tables: Vec::new(),
            texts: Vec::new(),
            result: serde_json::to_value(result).expect("results serialize"),
            summary: String::new(),
        }
    }

    pub fn write(&self, dir: &Path, format: Format, config: &Value) -> Result<Vec<String>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = Vec::new();
        if format.csv() {
            files.extend(self.tables.iter().map(|t| (format!("{}.csv", t.name), t.render())));
        }
        files.extend(self.texts.iter().cloned());
        if format.json() {
            let doc = json!({
                "artifact_version": superefficiency::ARTIFACT_VERSION,
                "command": self.command,
                "config": config,
                "result": self.result,
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("json");
            text.push('\n');
            files.push((format!("{}.json", self.command), text));
        }
        for (name, contents) in &files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(files.into_iter().map(|(name, _)| name).collect())
    }
}
