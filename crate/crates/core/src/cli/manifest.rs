use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crypto::hash128;

use super::config::RunConfig;

pub const MANIFEST_SCHEMA: &str = "tpka.manifest/1";

/// Everything that determines a command's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<String>,
    /// Resolved configuration after command-line overrides.
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    /// Hash of auxiliary inputs such as an attack script.
    pub inputs: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hash: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, config: RunConfig, seeds: Vec<u64>) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            config,
            seeds,
            inputs: Vec::new(),
            out_dir: None,
            hash: None,
        }
    }

    pub fn add_input(&mut self, name: &str, content: &[u8]) {
        self.inputs.push((name.to_string(), hash128(content).to_hex()));
    }

    /// Content hash over the inputs. The output directory is excluded so
    /// identical inputs written to different places carry the same hash.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        canonical.hash = None;
        let json = serde_json::to_vec(&canonical).expect("manifest serializes");
        hash128(&json).to_hex()
    }

    pub fn finalize(mut self, out_dir: &Path) -> Self {
        self.hash = Some(self.content_hash());
        self.out_dir = Some(out_dir.display().to_string());
        self
    }

    pub fn hash(&self) -> &str {
        self.hash.as_deref().unwrap_or("")
    }
}
