//! Shared checkpoint container: one JSON header line followed by a raw
//! little-endian f64 blob. The router and the matrix-factorization
//! baseline both use it, distinguished by `kind`. Round trips are
//! bit-exact because the payload is stored as raw IEEE-754 bytes.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Header line of a checkpoint file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckpointHeader {
    pub kind: String,
    pub version: u32,
    pub n: usize,
    pub dim: usize,
    pub dim_base: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_cross: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_capability: Option<bool>,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    header: &CheckpointHeader,
    blob: &[f64],
) -> Result<()> {
    let mut file = fs::File::create(path)?;
    let header_json = serde_json::to_string(header)?;
    file.write_all(header_json.as_bytes())?;
    file.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(blob.len() * 8);
    for v in blob {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(CheckpointHeader, Vec<f64>)> {
    let file = fs::File::open(&path)?;
    let mut reader = BufReader::new(file);
    let mut header_line = String::new();
    reader.read_line(&mut header_line)?;
    let header: CheckpointHeader = serde_json::from_str(header_line.trim_end())?;

    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Invalid(format!(
            "checkpoint blob length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    let blob: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect();
    Ok((header, blob))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let header = CheckpointHeader {
            kind: "router".into(),
            version: CHECKPOINT_VERSION,
            n: 3,
            dim: 8,
            dim_base: 16,
            seed: 42,
            heads: Some(2),
            rank: None,
            use_cross: Some(true),
            use_capability: Some(true),
        };
        let blob = vec![0.1, -2.5e-300, f64::MIN_POSITIVE, 1.0 / 3.0, -0.0];
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(f.path(), &header, &blob).unwrap();
        let (h2, b2) = load_checkpoint(f.path()).unwrap();
        assert_eq!(h2, header);
        assert_eq!(b2.len(), blob.len());
        for (a, b) in blob.iter().zip(&b2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_blob_rejected() {
        let header = CheckpointHeader {
            kind: "router".into(),
            version: CHECKPOINT_VERSION,
            n: 1,
            dim: 1,
            dim_base: 1,
            seed: 0,
            heads: None,
            rank: None,
            use_cross: None,
            use_capability: None,
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(f.path(), &header, &[1.0]).unwrap();
        let bytes = fs::read(f.path()).unwrap();
        fs::write(f.path(), &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_checkpoint(f.path()).is_err());
    }
}
