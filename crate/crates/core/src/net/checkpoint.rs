use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::AdamConfig;
use super::arch::{ArchConfig, ARCH_VERSION};
use super::network::{PolicyNetwork, Scalar};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NTRL";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub arch: ArchConfig,
    pub step: u64,
    pub seed: u64,
    pub reward_config_hash: String,
    #[serde(default)]
    pub experiment_digest: Option<String>,
    pub optimizer: AdamConfig,
}

/// File layout: `NTRL`, u32 format version, u32 metadata length, metadata
/// JSON, u64 parameter count, little-endian f32 parameters, SHA-256 of all
/// preceding bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: Vec<f32>,
}

impl Checkpoint {
    pub fn from_network<T: Scalar>(net: &PolicyNetwork<T>, meta: CheckpointMeta) -> Self {
        Self {
            params: net.params().iter().map(|v| v.widen() as f32).collect(),
            meta,
        }
    }

    pub fn network<T: Scalar>(&self) -> Result<PolicyNetwork<T>> {
        let params = self.params.iter().map(|&v| T::of(v as f64)).collect();
        PolicyNetwork::from_params(self.meta.arch.clone(), params)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::with_capacity(24 + meta.len() + 4 * self.params.len() + DIGEST_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for v in &self.params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
        if bytes.len() < 4 + 4 + 4 + 8 + DIGEST_LEN {
            return Err(corrupt("file too short"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("digest mismatch"));
        }
        let u32_at = |at: usize| u32::from_le_bytes(body[at..at + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let meta_len = u32_at(8) as usize;
        let meta_end = 12 + meta_len;
        if body.len() < meta_end + 8 {
            return Err(corrupt("metadata overruns the file"));
        }
        let meta: CheckpointMeta =
            serde_json::from_slice(&body[12..meta_end]).map_err(|e| corrupt(&format!("metadata: {e}")))?;
        if meta.arch.version != ARCH_VERSION {
            return Err(Error::VersionMismatch(format!(
                "architecture version {}, expected {ARCH_VERSION}",
                meta.arch.version
            )));
        }
        let count = u64::from_le_bytes(body[meta_end..meta_end + 8].try_into().expect("8 bytes")) as usize;
        let data = &body[meta_end + 8..];
        if data.len() != 4 * count {
            return Err(corrupt("parameter block length"));
        }
        let params = data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self { meta, params })
    }

    /// Writes to a temporary sibling, then renames over `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        let bytes = self.to_bytes()?;
        let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile { path: path.into() });
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// As [`Checkpoint::load`], rejecting a different architecture.
    pub fn load_for(path: impl AsRef<Path>, arch: &ArchConfig) -> Result<Self> {
        let ck = Self::load(path)?;
        if &ck.meta.arch != arch {
            return Err(Error::VersionMismatch(
                "checkpoint architecture differs from the expected configuration".into(),
            ));
        }
        Ok(ck)
    }
}
