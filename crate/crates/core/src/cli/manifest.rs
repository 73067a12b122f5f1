//! Run manifests written next to every output file.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::Global;
use crate::error::Result;
use crate::model::Config;
use crate::optimize::Mode;

/// Everything needed to regenerate an output, plus wall-clock bookkeeping.
/// Timestamps live only here so that the outputs themselves stay
/// byte-reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub arguments: serde_json::Value,
    pub config: Config,
    pub mode: Mode,
    pub quadrature_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_generator: Option<String>,
    /// How feasibility of a policy is decided.
    pub feasibility: &'static str,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &'static str, cfg: &Config, global: &Global) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            arguments: serde_json::Value::Null,
            config: cfg.clone(),
            mode: global.mode.into(),
            quadrature_nodes: cfg.quadrature_nodes,
            seed: None,
            mc_generator: None,
            feasibility: "expected rate >= 0 under the average power budget",
            outputs: Vec::new(),
            started_unix: now(),
            finished_unix: None,
        }
    }

    pub fn finish_and_write(mut self, path: &Path) -> Result<()> {
        self.finished_unix = Some(now());
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
