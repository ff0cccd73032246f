use clap::ValueEnum;
use serde::Serialize;
use std::path::Path;

use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Result of one command in every format it supports.
pub struct Rendered {
    pub json: serde_json::Value,
    pub text: String,
    pub csv: Option<String>,
    /// Set when the command ran but its checks failed.
    pub validation_failure: Option<String>,
}

impl Rendered {
    pub fn new(value: &impl Serialize, text: String) -> Result<Self, CliError> {
        Ok(Rendered { json: serde_json::to_value(value)?, text, csv: None, validation_failure: None })
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    pub fn failing(mut self, reason: Option<String>) -> Self {
        self.validation_failure = reason;
        self
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    manifest: &'a RunManifest,
    result: &'a serde_json::Value,
}

pub fn render(manifest: &RunManifest, out: &Rendered, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&Envelope { manifest, result: &out.json })?;
            s.push('\n');
            s
        }
        Format::Text => format!("{}{}", manifest.comment_block(), out.text),
        Format::Csv => {
            let csv = out
                .csv
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("{} has no CSV output; use text or json", manifest.command)))?;
            format!("{}{}", manifest.comment_block(), csv)
        }
    })
}

pub fn write(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}
