//! Output directory with config-hash stamping.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Output {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

impl Output {
    pub fn create(dir: &Path, config: &Value) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hash: config_hash(config), written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// CSV body preceded by a `# config_sha256=` line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# config_sha256={}\n{body}", self.hash);
        self.write(name, &text)
    }

    /// JSON object with a `config_sha256` field added.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
        if let Value::Object(map) = &mut v {
            map.insert("config_sha256".into(), Value::String(self.hash.clone()));
        }
        let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        self.write(name, &text)
    }

    pub fn manifest(mut self, command: &str, config: &Value) -> Result<(), CliError> {
        let mut outputs = self.written.clone();
        outputs.sort();
        let m = json!({
            "software": "m2hs",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "outputs": outputs,
        });
        self.json("manifest.json", &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let a: Value = serde_json::from_str(r#"{"a": 1, "b": [1.5, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b": [1.5, 2], "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        let c: Value = serde_json::from_str(r#"{"a": 2, "b": [1.5, 2]}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
