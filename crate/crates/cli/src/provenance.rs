use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputProvenance {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Input role to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

impl OutputProvenance {
    pub fn new(command: &str, config: &RunConfig, inputs: &[(&str, &Path)]) -> Result<Self, CliError> {
        let inputs = inputs
            .iter()
            .map(|(role, path)| Ok((role.to_string(), sha256_file(path)?)))
            .collect::<Result<_, CliError>>()?;
        Ok(Self {
            tool: "morphoscope".into(),
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            inputs,
            config: serde_json::to_value(config).expect("config serializes"),
        })
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Short stable id for a dataset from its two file digests.
pub fn dataset_id(matrix_sha: &str, labels_sha: &str) -> String {
    let joined = format!("{matrix_sha}:{labels_sha}");
    hex::encode(Sha256::digest(joined.as_bytes()))[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc");
        std::fs::write(&path, "abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(dataset_id("a", "b").len(), 16);
    }
}
