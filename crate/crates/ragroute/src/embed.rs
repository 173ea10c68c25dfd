//! Frozen base-embedding providers.
//!
//! The trainable part of the router is a pair of projection heads; the
//! text encoder underneath stays frozen. Two providers implement that
//! frozen stage:
//!
//! - a deterministic feature-hash encoder (FNV-1a over lowercased
//!   whitespace tokens, signed buckets, L2-normalized) for desk-scale
//!   runs, and
//! - a loader for precomputed embeddings, so outputs of real sentence
//!   or cross encoders can be dropped in via a manifest + binary file.
//!
//! Query and document channels share one salt (one shared encoder); the
//! cross channel hashes `doc + '\x1f' + query` under a distinct salt so
//! the pair signature is order-sensitive.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Providers must emit unit vectors to within this tolerance.
pub const UNIT_NORM_TOL: f64 = 1e-6;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Default salt shared by the query and document channels.
pub const DEFAULT_TEXT_SALT: u64 = 0x7122_8d10_36c5_9ae3;
/// Default salt for the cross (document, query) channel.
pub const DEFAULT_CROSS_SALT: u64 = 0x03a0_77f1_9c24_b68d;

/// Which single-text channel an embedding belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextChannel {
    Query,
    Document,
}

/// Channel for a precomputed-embedding manifest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestChannel {
    Query,
    Document,
    Cross,
}

/// L2-normalized dense vector emitted by a provider.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseEmbedding {
    values: Vec<f64>,
}

impl BaseEmbedding {
    /// Normalizes and wraps; rejects zero-norm or non-finite input.
    pub fn from_unnormalized(mut values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("embedding contains non-finite values".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Invalid("embedding has zero norm".into()));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Channel salts: query/document share one, cross gets its own.
#[derive(Clone, Copy, Debug)]
pub struct SaltSet {
    text: u64,
    cross: u64,
}

impl SaltSet {
    pub fn new(text: u64, cross: u64) -> Result<Self> {
        if text == cross {
            return Err(Error::Invalid(
                "text and cross salts must be distinct".into(),
            ));
        }
        Ok(Self { text, cross })
    }

    pub fn text(&self) -> u64 {
        self.text
    }

    pub fn cross(&self) -> u64 {
        self.cross
    }
}

impl Default for SaltSet {
    fn default() -> Self {
        Self {
            text: DEFAULT_TEXT_SALT,
            cross: DEFAULT_CROSS_SALT,
        }
    }
}

/// Deterministic feature-hash text encoder.
#[derive(Clone, Debug)]
pub struct FeatureHashEncoder {
    dim: usize,
    salts: SaltSet,
}

impl FeatureHashEncoder {
    pub fn new(dim: usize, salts: SaltSet) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        Ok(Self { dim, salts })
    }

    fn hash_accumulate(&self, text: &str, salt: u64) -> Result<Vec<f64>> {
        let lowered = text.to_lowercase();
        let mut acc = vec![0.0f64; self.dim];
        let mut any = false;
        for token in lowered.split_whitespace() {
            any = true;
            let h = fnv1a_salted(salt, token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            acc[bucket] += sign;
        }
        if !any {
            return Err(Error::Invalid(
                "text is empty after lowercasing and whitespace tokenization".into(),
            ));
        }
        Ok(acc)
    }

    fn embed_text(&self, text: &str, salt: u64) -> Result<BaseEmbedding> {
        BaseEmbedding::from_unnormalized(self.hash_accumulate(text, salt)?)
    }
}

/// FNV-1a over the salt's little-endian bytes followed by the payload.
fn fnv1a_salted(salt: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in salt.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Manifest describing one channel of precomputed embeddings. The
/// binary file holds `ids.len() * dim` 32-bit little-endian floats,
/// row-major in id order.
#[derive(Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub dim: usize,
    pub channel: ManifestChannel,
    pub ids: Vec<String>,
    pub file: String,
}

#[derive(Clone, Debug, Default)]
struct ChannelTable {
    index: BTreeMap<String, usize>,
    rows: Vec<Vec<f64>>,
}

impl ChannelTable {
    fn lookup(&self, id: &str) -> Result<BaseEmbedding> {
        let row = self
            .index
            .get(id)
            .ok_or_else(|| Error::Invalid(format!("no precomputed embedding for id {id:?}")))?;
        Ok(BaseEmbedding {
            values: self.rows[*row].clone(),
        })
    }

    fn is_loaded(&self) -> bool {
        !self.rows.is_empty()
    }
}

/// Precomputed embeddings, looked up by id string. Lookups on the cross
/// channel key on the query id (one retrieved context per query).
#[derive(Clone, Debug)]
pub struct PrecomputedStore {
    dim: usize,
    query: ChannelTable,
    document: ChannelTable,
    cross: ChannelTable,
}

impl PrecomputedStore {
    /// Loads one manifest; further channels can be merged with
    /// [`PrecomputedStore::add_manifest`].
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let mut store = Self {
            dim: 0,
            query: ChannelTable::default(),
            document: ChannelTable::default(),
            cross: ChannelTable::default(),
        };
        store.add_manifest(manifest_path)?;
        Ok(store)
    }

    pub fn add_manifest(&mut self, manifest_path: impl AsRef<Path>) -> Result<()> {
        let manifest_path = manifest_path.as_ref();
        let text = fs::read_to_string(manifest_path)?;
        let manifest: EmbeddingManifest = serde_json::from_str(&text)?;
        if manifest.dim == 0 {
            return Err(Error::Invalid("manifest dim must be positive".into()));
        }
        if self.dim != 0 && self.dim != manifest.dim {
            return Err(Error::ShapeMismatch(format!(
                "manifest dim {} conflicts with already-loaded dim {}",
                manifest.dim, self.dim
            )));
        }

        let data_path = manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.file);
        let bytes = fs::read(&data_path)?;
        let expected = manifest.ids.len() * manifest.dim * 4;
        if bytes.len() != expected {
            return Err(Error::Invalid(format!(
                "size mismatch: {} holds {} bytes, manifest implies {}",
                data_path.display(),
                bytes.len(),
                expected
            )));
        }

        let mut table = ChannelTable::default();
        for (row, id) in manifest.ids.iter().enumerate() {
            let start = row * manifest.dim * 4;
            let mut values = Vec::with_capacity(manifest.dim);
            for i in 0..manifest.dim {
                let off = start + i * 4;
                let raw = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
                values.push(f32::from_le_bytes(raw) as f64);
            }
            let embedding = BaseEmbedding::from_unnormalized(values).map_err(|e| {
                Error::Invalid(format!("row {row} (id {id:?}) rejected: {e}"))
            })?;
            if table.index.insert(id.clone(), row).is_some() {
                return Err(Error::Invalid(format!("duplicate id {id:?} in manifest")));
            }
            table.rows.push(embedding.into_values());
        }

        self.dim = manifest.dim;
        match manifest.channel {
            ManifestChannel::Query => self.query = table,
            ManifestChannel::Document => self.document = table,
            ManifestChannel::Cross => self.cross = table,
        }
        Ok(())
    }

    pub fn ids(&self, channel: ManifestChannel) -> Vec<&str> {
        let table = match channel {
            ManifestChannel::Query => &self.query,
            ManifestChannel::Document => &self.document,
            ManifestChannel::Cross => &self.cross,
        };
        table.index.keys().map(String::as_str).collect()
    }
}

/// Base-embedding source: frozen feature hashing or precomputed rows.
#[derive(Clone, Debug)]
pub enum EmbeddingProvider {
    FeatureHash(FeatureHashEncoder),
    Precomputed(PrecomputedStore),
}

impl EmbeddingProvider {
    /// Feature-hash provider with the default salts.
    pub fn feature_hash(dim: usize) -> Result<Self> {
        Ok(Self::FeatureHash(FeatureHashEncoder::new(
            dim,
            SaltSet::default(),
        )?))
    }

    pub fn feature_hash_with_salts(dim: usize, salts: SaltSet) -> Result<Self> {
        Ok(Self::FeatureHash(FeatureHashEncoder::new(dim, salts)?))
    }

    pub fn precomputed(manifest_path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::Precomputed(PrecomputedStore::load(manifest_path)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FeatureHash(e) => e.dim,
            Self::Precomputed(s) => s.dim,
        }
    }

    /// Embedding of a single text. For the feature-hash provider the
    /// query and document channels are identical by construction; for
    /// the precomputed provider `text` is the lookup id.
    pub fn text_embedding(&self, text: &str, channel: TextChannel) -> Result<BaseEmbedding> {
        match self {
            Self::FeatureHash(e) => e.embed_text(text, e.salts.text()),
            Self::Precomputed(s) => {
                let table = match channel {
                    TextChannel::Query => &s.query,
                    TextChannel::Document => &s.document,
                };
                if !table.is_loaded() {
                    return Err(Error::Invalid(format!(
                        "no precomputed table loaded for channel {channel:?}"
                    )));
                }
                table.lookup(text)
            }
        }
    }

    /// Interaction embedding of a (document, query) pair, document
    /// first. For the precomputed provider the pair is keyed by the
    /// query id (second argument).
    pub fn cross_embedding(&self, doc_text: &str, query_text: &str) -> Result<BaseEmbedding> {
        match self {
            Self::FeatureHash(e) => {
                if doc_text.split_whitespace().next().is_none() {
                    return Err(Error::Invalid(
                        "document text is empty after tokenization".into(),
                    ));
                }
                if query_text.split_whitespace().next().is_none() {
                    return Err(Error::Invalid(
                        "query text is empty after tokenization".into(),
                    ));
                }
                let joined = format!("{doc_text}\u{1f}{query_text}");
                e.embed_text(&joined, e.salts.cross())
            }
            Self::Precomputed(s) => {
                if !s.cross.is_loaded() {
                    return Err(Error::Invalid(
                        "no precomputed table loaded for the cross channel".into(),
                    ));
                }
                s.cross.lookup(query_text)
            }
        }
    }
}
