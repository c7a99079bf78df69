//! Versioned JSON document holding a [`MetaModel`] and its manifest.

use std::fs;
use std::path::Path;

use hpod_core::pipeline::DatasetInfo;
use hpod_core::{Algorithm, MetaModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub format_version: u32,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub datasets: Vec<DatasetInfo>,
    pub grid_size: usize,
    /// FNV-1a fingerprint of the HP space, hex.
    pub space_hash: String,
}

impl Manifest {
    pub fn for_model(meta: &MetaModel) -> Self {
        Self {
            tool: "hpod".into(),
            tool_version: TOOL_VERSION.into(),
            format_version: FORMAT_VERSION,
            seed: meta.seed,
            algorithm: meta.space.algorithm,
            datasets: meta.datasets.clone(),
            grid_size: meta.perf.cols(),
            space_hash: format!("{:016x}", meta.space.fingerprint()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub manifest: Manifest,
    pub model: MetaModel,
}

pub fn to_json(meta: &MetaModel) -> String {
    let doc = ModelDocument { manifest: Manifest::for_model(meta), model: meta.clone() };
    let mut s = serde_json::to_string_pretty(&doc).expect("meta-model serializes");
    s.push('\n');
    s
}

pub fn save(meta: &MetaModel, path: &Path) -> Result<()> {
    fs::write(path, to_json(meta)).map_err(|e| CliError::io(path, e))
}

/// Parses a document, refusing files of another format version and
/// documents whose manifest disagrees with the model.
pub fn from_json(text: &str, path: &Path) -> Result<MetaModel> {
    let json_err = |e| CliError::Json { path: path.into(), source: e };
    let raw: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
    let found = raw.pointer("/manifest/format_version").and_then(serde_json::Value::as_u64);
    if found != Some(u64::from(FORMAT_VERSION)) {
        return Err(CliError::Version {
            found: found.map_or_else(|| "unknown".into(), |v| v.to_string()),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let doc: ModelDocument = serde_json::from_value(raw).map_err(json_err)?;
    if doc.manifest.tool_version != TOOL_VERSION {
        log::warn!("model written by hpod {}, running {TOOL_VERSION}", doc.manifest.tool_version);
    }
    if doc.manifest != Manifest::for_model(&doc.model).with_tool_version(&doc.manifest.tool_version) {
        return Err(CliError::data(path, "manifest does not match the stored model"));
    }
    doc.model.validate().map_err(|e| match e {
        hpod_core::Error::SchemaMismatch { .. } => CliError::Core(e),
        other => CliError::data(path, other.to_string()),
    })?;
    Ok(doc.model)
}

impl Manifest {
    fn with_tool_version(mut self, v: &str) -> Self {
        self.tool_version = v.into();
        self
    }
}

pub fn load(path: &Path) -> Result<MetaModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_json(&text, path)
}
