use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureNet, NamModel};
use crate::task::Task;
use crate::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

// Doubles are written in shortest round-trip form and parsed with
// serde_json's exact float parser, so save/load is bit-exact.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: u32,
    task: Task,
    feature_names: Vec<String>,
    feature_nets: Vec<FeatureNet>,
    output_weights: Vec<f64>,
    output_bias: Vec<f64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

impl NamModel {
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            task: self.task,
            feature_names: self.feature_names.clone(),
            feature_nets: self.nets.clone(),
            output_weights: self.output_weights.clone(),
            output_bias: self.output_bias.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(s)?;
        if probe.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: MODEL_SCHEMA_VERSION,
                found: probe.schema_version,
            });
        }
        let doc: ModelDocument = serde_json::from_str(s)?;
        NamModel::from_parts(
            doc.feature_names,
            doc.task,
            doc.feature_nets,
            doc.output_weights,
            doc.output_bias,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
