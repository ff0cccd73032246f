use serde::Serialize;
use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance block embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub version: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; omitted under `--reproducible`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<String>, config: serde_json::Value, seed: u64, reproducible: bool) -> Self {
        let timestamp =
            if reproducible { None } else { SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs()) };
        RunManifest {
            command: command.to_string(),
            inputs,
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp,
        }
    }

    /// `# key: value` lines for text and CSV outputs.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# multimon {} {}\n", self.command, self.version);
        if !self.inputs.is_empty() {
            s.push_str(&format!("# inputs: {}\n", self.inputs.join(", ")));
        }
        s.push_str(&format!("# seed: {}\n", self.seed));
        s.push_str(&format!("# config: {}\n", serde_json::to_string(&self.config).expect("json value")));
        if let Some(t) = self.timestamp {
            s.push_str(&format!("# timestamp: {t}\n"));
        }
        s
    }
}
