use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Output directory of one run. Every file carries the resolved config and
/// its hash.
pub struct Artifacts {
    dir: PathBuf,
    config: Value,
    hash: String,
}

impl Artifacts {
    pub fn create(cfg: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", cfg.output_dir.display()))
        })?;
        Ok(Artifacts {
            dir: cfg.output_dir.clone(),
            config: serde_json::to_value(cfg).expect("config serializes"),
            hash: cfg.hash(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `{"config": .., "config_hash": .., <key>: payload}`.
    pub fn envelope(&self, key: &str, payload: Value) -> Value {
        let mut v = json!({ "config": self.config, "config_hash": self.hash });
        v[key] = payload;
        v
    }

    pub fn write_json(&self, name: &str, key: &str, payload: Value) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(&self.envelope(key, payload)).expect("json");
        self.write(name, text + "\n")
    }

    /// CSV preceded by `#` comment lines with the hash and the config.
    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let text = format!(
            "# config_hash: {}\n# config: {}\n{body}",
            self.hash,
            serde_json::to_string(&self.config).expect("json")
        );
        self.write(name, text)
    }

    fn write(&self, name: &str, text: String) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}
