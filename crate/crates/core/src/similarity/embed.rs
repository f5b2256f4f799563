//! Embedding adapters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::RestClient;
use crate::image::content_digest;

use super::EmbeddingVector;

pub trait TextEmbedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
    fn is_remote(&self) -> bool {
        false
    }
    fn probe(&self) -> bool {
        true
    }
}

pub trait ImageEmbedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, image: &[u8]) -> Result<EmbeddingVector>;
    fn is_remote(&self) -> bool {
        false
    }
    fn probe(&self) -> bool {
        true
    }
}

/// Embed `text` after the shared empty-text precondition.
pub fn embed_text(text: &str, provider: &dyn TextEmbedder) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    provider.embed(text)
}

pub fn embed_image(image: &[u8], provider: &dyn ImageEmbedder) -> Result<EmbeddingVector> {
    if image.is_empty() {
        return Err(Error::image("<bytes>", "zero-length image"));
    }
    provider.embed(image)
}

/// On-disk fixture: `{"dim": n, "vectors": {"<key>": [..]}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VectorTable {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::config(path.display().to_string(), e))?;
        let table: VectorTable = serde_json::from_slice(&bytes)
            .map_err(|e| Error::config(path.display().to_string(), e))?;
        for (k, v) in &table.vectors {
            if v.len() != table.dim {
                return Err(Error::config(
                    path.display().to_string(),
                    format!("vector for `{k}` has {} entries, dim is {}", v.len(), table.dim),
                ));
            }
        }
        Ok(table)
    }

    fn lookup(&self, provider: &str, key: &str) -> Result<EmbeddingVector> {
        let values = self
            .vectors
            .get(key)
            .ok_or_else(|| Error::unavailable(provider, format!("no fixture vector for `{key}`")))?;
        EmbeddingVector::from_provider(values.clone())
    }
}

/// Looks text up verbatim in a [`VectorTable`].
#[derive(Debug, Clone)]
pub struct FixtureTextEmbedder {
    id: String,
    table: VectorTable,
}

impl FixtureTextEmbedder {
    pub fn new(id: impl Into<String>, table: VectorTable) -> Self {
        Self { id: id.into(), table }
    }
}

impl TextEmbedder for FixtureTextEmbedder {
    fn id(&self) -> &str {
        &self.id
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.table.lookup(&self.id, text)
    }
}

/// Looks images up by the hex SHA-256 of their bytes.
#[derive(Debug, Clone)]
pub struct FixtureImageEmbedder {
    id: String,
    table: VectorTable,
}

impl FixtureImageEmbedder {
    pub fn new(id: impl Into<String>, table: VectorTable) -> Self {
        Self { id: id.into(), table }
    }
}

impl ImageEmbedder for FixtureImageEmbedder {
    fn id(&self) -> &str {
        &self.id
    }
    fn embed(&self, image: &[u8]) -> Result<EmbeddingVector> {
        self.table.lookup(&self.id, &content_digest(image))
    }
}

/// Signed feature hashing of lowercase word tokens. No learned weights;
/// useful as a deterministic stand-in when no embedding service is set up.
#[derive(Debug, Clone)]
pub struct HashingTextEmbedder {
    id: String,
    dim: usize,
}

impl HashingTextEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            id: format!("hashing-{dim}"),
            dim: dim.max(1),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl TextEmbedder for HashingTextEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut values = vec![0.0; self.dim];
        let lowered = text.to_lowercase();
        for token in lowered.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = fnv1a(token.as_bytes());
            let slot = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            values[slot] += sign;
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::EmptyText);
        }
        EmbeddingVector::new(values)
    }
}

#[derive(Serialize)]
struct RestEmbedBody<'a> {
    modality: &'static str,
    payload: &'a str,
}

#[derive(Deserialize)]
struct RestEmbedResponse {
    vector: Vec<f64>,
    dim: usize,
}

fn parse_rest_vector(body: &[u8]) -> Result<EmbeddingVector> {
    let parsed: RestEmbedResponse = serde_json::from_slice(body)
        .map_err(|e| Error::MalformedResponse(format!("embedding response: {e}")))?;
    if parsed.vector.len() != parsed.dim {
        return Err(Error::MalformedResponse(format!(
            "embedding declares dim {} but has {} values",
            parsed.dim,
            parsed.vector.len()
        )));
    }
    EmbeddingVector::from_provider(parsed.vector)
}

/// Generic REST embedder: `POST {modality, payload}` -> `{vector, dim}`.
/// Image payloads are sent base64-encoded.
#[derive(Debug, Clone)]
pub struct RestEmbedder {
    id: String,
    client: RestClient,
}

impl RestEmbedder {
    pub fn new(id: impl Into<String>, client: RestClient) -> Self {
        Self { id: id.into(), client }
    }
}

impl TextEmbedder for RestEmbedder {
    fn id(&self) -> &str {
        &self.id
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let body = self.client.post_json(&RestEmbedBody {
            modality: "text",
            payload: text,
        })?;
        parse_rest_vector(&body)
    }
    fn is_remote(&self) -> bool {
        true
    }
    fn probe(&self) -> bool {
        self.client.probe()
    }
}

impl ImageEmbedder for RestEmbedder {
    fn id(&self) -> &str {
        &self.id
    }
    fn embed(&self, image: &[u8]) -> Result<EmbeddingVector> {
        use base64::Engine as _;
        let encoded = base64::engine::general_purpose::STANDARD.encode(image);
        let body = self.client.post_json(&RestEmbedBody {
            modality: "image",
            payload: &encoded,
        })?;
        parse_rest_vector(&body)
    }
    fn is_remote(&self) -> bool {
        true
    }
    fn probe(&self) -> bool {
        self.client.probe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(&str, &[f64])]) -> VectorTable {
        VectorTable {
            dim: entries.first().map(|e| e.1.len()).unwrap_or(0),
            vectors: entries.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect(),
        }
    }

    #[test]
    fn fixture_text_pass_through_and_determinism() {
        let e = FixtureTextEmbedder::new("fx", table(&[("abc", &[0.6, 0.8])]));
        let v = embed_text("abc", &e).unwrap();
        assert_eq!(v.dim(), 2);
        assert_eq!(v.values(), &[0.6, 0.8]);
        assert_eq!(embed_text("abc", &e).unwrap(), v);
    }

    #[test]
    fn empty_text_rejected_before_provider() {
        let e = FixtureTextEmbedder::new("fx", table(&[("", &[1.0])]));
        assert_eq!(embed_text("", &e).unwrap_err().code(), "EEmptyText");
        assert_eq!(embed_text("  \n", &e).unwrap_err().code(), "EEmptyText");
    }

    #[test]
    fn image_fixture_is_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("one.img"), b"same-bytes").unwrap();
        std::fs::write(dir.path().join("two.img"), b"same-bytes").unwrap();
        let digest = content_digest(b"same-bytes");
        let e = FixtureImageEmbedder::new("fx", table(&[(&digest, &[0.0, 1.0, 0.0])]));
        let a = embed_image(&std::fs::read(dir.path().join("one.img")).unwrap(), &e).unwrap();
        let b = embed_image(&std::fs::read(dir.path().join("two.img")).unwrap(), &e).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn provider_vectors_must_be_finite_and_nonzero() {
        for bad in [vec![], vec![0.0, 0.0], vec![1.0, f64::NAN], vec![f64::INFINITY]] {
            assert_eq!(
                EmbeddingVector::from_provider(bad).unwrap_err().code(),
                "EMalformedResponse"
            );
        }
    }

    #[test]
    fn rest_response_dim_checked() {
        assert!(parse_rest_vector(br#"{"vector":[0.1,0.2],"dim":2}"#).is_ok());
        assert_eq!(
            parse_rest_vector(br#"{"vector":[0.1],"dim":2}"#).unwrap_err().code(),
            "EMalformedResponse"
        );
        assert_eq!(parse_rest_vector(b"nope").unwrap_err().code(), "EMalformedResponse");
    }

    #[test]
    fn hashing_embedder_is_deterministic_and_case_insensitive() {
        let e = HashingTextEmbedder::new(64);
        assert_eq!(e.embed("Flood hits X").unwrap(), e.embed("flood HITS x").unwrap());
        assert_eq!(e.embed("!!!").unwrap_err().code(), "EEmptyText");
    }
}
