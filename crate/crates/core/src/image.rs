//! Image byte resolution and content addressing.

use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of raw bytes. Used for image identity everywhere.
pub fn content_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolves image references to bytes.
///
/// Relative paths resolve against `base_dir`. `http(s)` references are only
/// fetched when remote access is enabled; offline runs never touch the network.
#[derive(Debug, Clone)]
pub struct ImageResolver {
    base_dir: PathBuf,
    allow_remote: bool,
}

impl ImageResolver {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_dir: base_dir.into(),
            allow_remote: false,
        }
    }

    pub fn allow_remote(mut self, allow: bool) -> Self {
        self.allow_remote = allow;
        self
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve_path(&self, reference: &str) -> Option<PathBuf> {
        if is_remote(reference) {
            return None;
        }
        let raw = reference.strip_prefix("file://").unwrap_or(reference);
        let path = Path::new(raw);
        Some(if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        })
    }

    pub fn load(&self, reference: &str) -> Result<Vec<u8>> {
        if reference.trim().is_empty() {
            return Err(Error::image(reference, "empty reference"));
        }
        let bytes = if is_remote(reference) {
            if !self.allow_remote {
                return Err(Error::image(reference, "remote images disabled (offline)"));
            }
            fetch_remote(reference)?
        } else {
            let path = self.resolve_path(reference).expect("local reference");
            std::fs::read(&path).map_err(|e| Error::image(reference, e))?
        };
        if bytes.is_empty() {
            return Err(Error::image(reference, "zero-length image"));
        }
        Ok(bytes)
    }
}

fn is_remote(reference: &str) -> bool {
    reference.starts_with("http://") || reference.starts_with("https://")
}

fn fetch_remote(reference: &str) -> Result<Vec<u8>> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(20))
        .build()
        .map_err(|e| Error::image(reference, e))?;
    let response = client
        .get(reference)
        .send()
        .and_then(|r| r.error_for_status())
        .map_err(|e| Error::image(reference, e))?;
    response
        .bytes()
        .map(|b| b.to_vec())
        .map_err(|e| Error::image(reference, e))
}
