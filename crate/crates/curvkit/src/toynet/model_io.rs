//! Versioned binary model file: magic, version, JSON-encoded config, then
//! raw little-endian f64 weight blobs in the network's fixed layer order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic_write;

use super::net::Network;

const MAGIC: &[u8; 8] = b"CVKTMDL\0";
pub const MODEL_VERSION: u32 = 1;

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    let config = serde_json::to_vec(&net.config).expect("config serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u64).to_le_bytes());
    out.extend_from_slice(&config);
    for layer in net.layers() {
        for blob in [&layer.weight, &layer.bias] {
            out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
            for v in blob {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    atomic_write(path, &out)
}

pub fn load_model(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let malformed = |reason: String| Error::MalformedFile {
        format: "model",
        path: path.display().to_string(),
        reason,
    };
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(malformed("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let config_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() < 20 + config_len {
        return Err(malformed("truncated config".into()));
    }
    let config = serde_json::from_slice(&bytes[20..20 + config_len])
        .map_err(|e| malformed(format!("bad config: {e}")))?;
    let mut net = Network::build(config)?;
    let mut pos = 20 + config_len;
    for layer in net.layers_mut() {
        for blob in [&mut layer.weight, &mut layer.bias] {
            if bytes.len() < pos + 8 {
                return Err(malformed("truncated blob header".into()));
            }
            let len = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
            pos += 8;
            if len != blob.len() {
                return Err(malformed(format!(
                    "blob length {len} does not match layer expectation {}",
                    blob.len()
                )));
            }
            if bytes.len() < pos + 8 * len {
                return Err(malformed("truncated blob payload".into()));
            }
            for v in blob.iter_mut() {
                *v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
                pos += 8;
            }
        }
    }
    if pos != bytes.len() {
        return Err(malformed("trailing bytes after weights".into()));
    }
    Ok(net)
}
