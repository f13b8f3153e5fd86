use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

/// Written next to every output file as `<output>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
    pub summary: Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, threads: usize, wall_time_seconds: f64, summary: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            threads,
            wall_time_seconds,
            config: config.clone(),
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_reproduces_hash() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version": 1, "weights": {"a": [0.5, 0.5], "b": [1.0]}, "samples": 2, "seed": 11, "T_grid": [1.5, 2.5]}"#,
        )
        .unwrap();
        let m = RunManifest::new("count", &cfg, 4, 0.25, serde_json::json!({"x": 1}));
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config.hash(), m.config_hash);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("/tmp/run/out.csv")), PathBuf::from("/tmp/run/out.csv.manifest.json"));
    }
}
