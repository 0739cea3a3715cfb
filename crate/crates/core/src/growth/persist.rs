//! Versioned single-document save format for trained networks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GrowthError, Network};

pub const NETWORK_MAGIC: &str = "slotnet-network";
pub const NETWORK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub magic: String,
    pub schema_version: u32,
    pub network: Network,
}

impl Network {
    pub fn to_json(&self) -> Result<String, GrowthError> {
        let file = NetworkFile {
            magic: NETWORK_MAGIC.to_string(),
            schema_version: NETWORK_SCHEMA_VERSION,
            network: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| GrowthError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, GrowthError> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| GrowthError::Format(e.to_string()))?;
        if file.magic != NETWORK_MAGIC {
            return Err(GrowthError::Format(format!("bad magic string {:?}", file.magic)));
        }
        if file.schema_version != NETWORK_SCHEMA_VERSION {
            return Err(GrowthError::Format(format!(
                "unsupported schema version {} (expected {NETWORK_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        file.network.config.validate()?;
        file.network.params.validate()?;
        Ok(file.network)
    }

    pub fn save(&self, path: &Path) -> Result<(), GrowthError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GrowthError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
