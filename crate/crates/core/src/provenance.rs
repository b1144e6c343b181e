//! Run metadata stamped at the top of every output file.

use serde::{Deserialize, Serialize};

use crate::TOOL_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub seeds: Vec<(String, u64)>,
    /// Unix seconds; left out when byte-identical reruns are wanted.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<u64>,
}

impl Provenance {
    pub fn new(command: impl Into<String>) -> Self {
        Self { tool: TOOL_VERSION.to_string(), command: command.into(), seeds: Vec::new(), timestamp: None }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.push((name.to_string(), value));
        self
    }

    pub fn timestamp(mut self, unix_seconds: Option<u64>) -> Self {
        self.timestamp = unix_seconds;
        self
    }

    pub fn seeds_line(&self) -> String {
        self.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }

    /// `#`-prefixed header block for text outputs.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# tool: {}\n# command: {}\n# seeds: {}\n", self.tool, self.command, self.seeds_line());
        if let Some(t) = self.timestamp {
            s.push_str(&format!("# timestamp: {t}\n"));
        }
        s
    }
}

impl Default for Provenance {
    fn default() -> Self {
        Self::new("library")
    }
}
