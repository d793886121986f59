//! Exporters and run manifests.

mod boxdata;
mod geo;
mod heatmap;

pub use boxdata::{export_boxdata, write_boxdata, BoxData, BoxRow, BoxSummary};
pub use geo::{export_geo, write_geojson, GeoFeature};
pub use heatmap::{export_heatmap, write_blocks, Block, BlockLevel, Heatmap};

use crate::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Comment tag carrying the manifest digest inside exported files.
pub const MANIFEST_TAG: &str = "atd-manifest";

/// What produced an output: tool version, content digests of the inputs and
/// the effective configuration.
///
/// [`RunManifest::digest`] covers only these deterministic fields; the wall
/// clock time goes to the sidecar file alone so that identical runs embed
/// identical digests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Input role (`dump`, `matrix`, `tree`, ...) to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub config: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "atd".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn input_bytes(&mut self, role: &str, bytes: &[u8]) -> &mut Self {
        self.inputs.insert(role.into(), sha256_hex(bytes));
        self
    }

    pub fn input_file(&mut self, role: &str, path: impl AsRef<Path>) -> Result<&mut Self> {
        let bytes = std::fs::read(path)?;
        Ok(self.input_bytes(role, &bytes))
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("manifest serializes");
        sha256_hex(&canonical)
    }

    pub fn comment(&self) -> String {
        format!("{MANIFEST_TAG} sha256={}", self.digest())
    }

    /// Write `<output>.manifest.json` next to `output`.
    pub fn write_sidecar(&self, output: impl AsRef<Path>) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            #[serde(flatten)]
            manifest: &'a RunManifest,
            digest: String,
            created_unix: u64,
        }
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut path = output.as_ref().as_os_str().to_owned();
        path.push(".manifest.json");
        let path = PathBuf::from(path);
        let body = serde_json::to_string_pretty(&Sidecar {
            manifest: self,
            digest: self.digest(),
            created_unix,
        })?;
        std::fs::write(&path, body + "\n")?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
