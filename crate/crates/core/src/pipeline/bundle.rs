//! Versioned, checksummed model files.
//!
//! A bundle is a one-line ASCII header followed by a JSON payload:
//!
//! ```text
//! DEPAI-BUNDLE <format version> <payload bytes> <sha256 of payload, hex>\n
//! {"format_version":1,"space":{...},"model":{...},"config":{...},"train_fingerprint":"..."}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::ExperimentConfig;
use crate::conllu::DepDocument;
use crate::featurize::FeatureSpace;
use crate::gbdt::GbdtModel;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "DEPAI-BUNDLE";
const MAX_HEADER: usize = 256;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("not a model bundle (missing {MAGIC} header)")]
    NotABundle,
    #[error("bundle format version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("bundle checksum failure: {0}")]
    Checksum(String),
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("bundle I/O on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub space: FeatureSpace,
    pub model: GbdtModel,
    pub config: ExperimentConfig,
    /// SHA-256 over the training documents, see [`train_fingerprint`].
    pub train_fingerprint: String,
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = serde_json::to_vec(self).expect("bundles always serialize");
        let digest = hex::encode(Sha256::digest(&payload));
        let mut out = format!("{MAGIC} {} {} {digest}\n", self.format_version, payload.len()).into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        let newline = bytes
            .iter()
            .take(MAX_HEADER)
            .position(|&b| b == b'\n')
            .ok_or(BundleError::NotABundle)?;
        let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| BundleError::NotABundle)?;
        let mut fields = header.split(' ');
        if fields.next() != Some(MAGIC) {
            return Err(BundleError::NotABundle);
        }
        let parts: Vec<&str> = fields.collect();
        let [version, len, digest] = parts[..] else {
            return Err(BundleError::Malformed(format!(
                "header has {} fields, expected 3",
                parts.len()
            )));
        };
        let version: u32 = version
            .parse()
            .map_err(|_| BundleError::Malformed(format!("bad version {version:?}")))?;
        if version > BUNDLE_FORMAT_VERSION {
            return Err(BundleError::UnsupportedVersion {
                found: version,
                supported: BUNDLE_FORMAT_VERSION,
            });
        }
        if version == 0 {
            return Err(BundleError::Malformed("version 0".into()));
        }
        let len: usize = len
            .parse()
            .map_err(|_| BundleError::Malformed(format!("bad payload length {len:?}")))?;
        let payload = &bytes[newline + 1..];
        if payload.len() != len {
            return Err(BundleError::Checksum(format!(
                "payload is {} bytes, header says {len} (truncated or padded file)",
                payload.len()
            )));
        }
        if hex::encode(Sha256::digest(payload)) != digest {
            return Err(BundleError::Checksum("payload SHA-256 does not match header".into()));
        }
        let bundle: ModelBundle = serde_json::from_slice(payload).map_err(|e| BundleError::Malformed(e.to_string()))?;
        if bundle.format_version != version {
            return Err(BundleError::Malformed(format!(
                "header version {version} but payload version {}",
                bundle.format_version
            )));
        }
        bundle
            .model
            .validate()
            .map_err(|e| BundleError::Malformed(e.to_string()))?;
        if bundle.space.len() != bundle.model.feature_dim() {
            return Err(BundleError::Malformed(format!(
                "feature space has {} features, model expects {}",
                bundle.space.len(),
                bundle.model.feature_dim()
            )));
        }
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        fs::write(path, self.to_bytes()).map_err(|source| BundleError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let bytes = fs::read(path).map_err(|source| BundleError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<(), BundleError> {
    bundle.save(path)
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle, BundleError> {
    ModelBundle::load(path)
}

fn put(h: &mut Sha256, s: &str) {
    h.update((s.len() as u64).to_le_bytes());
    h.update(s.as_bytes());
}

/// Content hash of a training set, independent of document order. Covers
/// each document's id, metadata and label sequences.
pub fn train_fingerprint(docs: &[DepDocument]) -> String {
    let mut sorted: Vec<&DepDocument> = docs.iter().collect();
    sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut h = Sha256::new();
    h.update((sorted.len() as u64).to_le_bytes());
    for d in sorted {
        put(&mut h, &d.doc_id);
        put(&mut h, &d.class_label);
        put(&mut h, &d.domain);
        put(&mut h, &d.language);
        h.update((d.sentences.len() as u64).to_le_bytes());
        for s in &d.sentences {
            h.update((s.len() as u64).to_le_bytes());
            for label in s {
                put(&mut h, label);
            }
        }
    }
    hex::encode(h.finalize())
}
