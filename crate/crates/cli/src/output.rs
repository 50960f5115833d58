use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::CliError;

/// Provenance written next to every output file.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    fn to_json(&self) -> String {
        // Wall-clock time would break byte-identical reruns.
        let timestamp = std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unspecified".into());
        let value = json!({
            "command": self.command,
            "parameters": self.parameters,
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "timestamp": timestamp,
        });
        let mut text = serde_json::to_string_pretty(&value).expect("manifest serializes");
        text.push('\n');
        text
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `contents` to `path` and its manifest to `<path>.manifest.json`.
pub fn write_artifact(path: &Path, contents: &str, manifest: &RunManifest) -> Result<(), CliError> {
    fs::write(path, contents)?;
    fs::write(sidecar(path), manifest.to_json())?;
    Ok(())
}

/// Gnuplot data: one block per series, blocks separated by two blank lines.
pub fn plot_blocks(series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    for (i, (name, points)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {name}\n"));
        for (x, y) in points {
            out.push_str(&format!(
                "{} {}\n",
                covertcap_core::fmt17(*x),
                covertcap_core::fmt17(*y)
            ));
        }
    }
    out
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}
