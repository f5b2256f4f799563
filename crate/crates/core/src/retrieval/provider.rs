//! Search provider adapters.

use std::path::PathBuf;

use base64::Engine as _;
use serde::Serialize;

use crate::cache::normalize_payload;
use crate::error::{Error, Result};
use crate::http::RestClient;
use crate::types::{RequestKind, RetrievalRequest};

/// A text or reverse-image search backend. Returns the raw response body in
/// the generic search schema; parsing happens in the retrieval layer so the
/// cache can store exactly what the provider sent.
pub trait SearchProvider: Send + Sync {
    fn id(&self) -> &str;

    /// `image` carries the image bytes for reverse-image requests.
    fn fetch(&self, request: &RetrievalRequest, image: Option<&[u8]>) -> Result<Vec<u8>>;

    /// Whether calls leave the process.
    fn is_remote(&self) -> bool {
        false
    }

    fn probe(&self) -> bool {
        true
    }
}

/// Reads canned responses from `<dir>/<kind>/<payload-digest>.json`, where
/// the digest is the cache key's payload digest.
#[derive(Debug, Clone)]
pub struct FixtureSearchProvider {
    id: String,
    dir: PathBuf,
}

impl FixtureSearchProvider {
    pub fn new(id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            dir: dir.into(),
        }
    }

    pub fn fixture_path(&self, request: &RetrievalRequest) -> PathBuf {
        fixture_path(&self.dir, request.kind, &request.payload)
    }
}

/// Path of the fixture file answering `(kind, payload)` under `dir`.
pub fn fixture_path(dir: &std::path::Path, kind: RequestKind, payload: &str) -> PathBuf {
    use sha2::{Digest, Sha256};
    let digest = hex::encode(Sha256::digest(normalize_payload(kind, payload).as_bytes()));
    dir.join(kind.as_str()).join(format!("{digest}.json"))
}

impl SearchProvider for FixtureSearchProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, request: &RetrievalRequest, _image: Option<&[u8]>) -> Result<Vec<u8>> {
        let path = self.fixture_path(request);
        std::fs::read(&path).map_err(|e| {
            Error::unavailable(&self.id, format!("no fixture {}: {e}", path.display()))
        })
    }

    fn probe(&self) -> bool {
        self.dir.is_dir()
    }
}

#[derive(Serialize)]
struct RestSearchBody<'a> {
    kind: RequestKind,
    payload: &'a str,
    limit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_base64: Option<String>,
}

/// Generic REST search adapter.
///
/// Request: `POST {kind, payload, limit, image_base64?}`;
/// response: `{records: [...]}` in the generic schema.
#[derive(Debug, Clone)]
pub struct RestSearchProvider {
    id: String,
    client: RestClient,
}

impl RestSearchProvider {
    pub fn new(id: impl Into<String>, client: RestClient) -> Self {
        Self { id: id.into(), client }
    }
}

impl SearchProvider for RestSearchProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, request: &RetrievalRequest, image: Option<&[u8]>) -> Result<Vec<u8>> {
        let body = RestSearchBody {
            kind: request.kind,
            payload: &request.payload,
            limit: request.limit,
            image_base64: image.map(|b| base64::engine::general_purpose::STANDARD.encode(b)),
        };
        self.client.post_json(&body)
    }

    fn is_remote(&self) -> bool {
        true
    }

    fn probe(&self) -> bool {
        self.client.probe()
    }
}
