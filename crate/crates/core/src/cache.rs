//! Content-addressed store of raw provider responses.
//!
//! Layout: `<root>/<aa>/<bb>/<entry-digest>.entry`, where the entry digest is
//! derived from the full [`CacheKey`]. Each file holds one JSON header line
//! followed by the raw response body. Entries are published by linking a
//! fully written temp file into place, so readers never see a torn entry and
//! an existing entry is never overwritten.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{collapse_whitespace, RequestKind, RetrievalRequest};

const ENTRY_EXT: &str = "entry";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub provider_id: String,
    pub request_kind: RequestKind,
    pub payload_digest: String,
}

impl CacheKey {
    /// Digest naming the entry file; covers every key field.
    pub fn entry_digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.provider_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(self.request_kind.as_str().as_bytes());
        hasher.update([0u8]);
        hasher.update(self.payload_digest.as_bytes());
        hex::encode(hasher.finalize())
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.provider_id, self.request_kind, self.payload_digest)
    }
}

/// Canonical form of a request payload before digesting.
pub fn normalize_payload(kind: RequestKind, payload: &str) -> String {
    match kind {
        RequestKind::TextQuery => collapse_whitespace(payload),
        RequestKind::ReverseImage => payload.trim().to_ascii_lowercase(),
    }
}

/// Key for a request. The limit is not part of the key: entries hold the
/// provider's full response and truncation happens after lookup.
pub fn cache_key(request: &RetrievalRequest, provider_id: &str) -> CacheKey {
    let normalized = normalize_payload(request.kind, &request.payload);
    CacheKey {
        provider_id: provider_id.to_string(),
        request_kind: request.kind,
        payload_digest: hex::encode(Sha256::digest(normalized.as_bytes())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct EntryHeader {
    key: CacheKey,
    stored_at: String,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: CacheKey,
    /// RFC 3339 timestamp of the original write.
    pub stored_at: String,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheEntryInfo {
    pub key: CacheKey,
    pub stored_at: String,
    pub size: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone)]
pub struct EvidenceCache {
    root: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl EvidenceCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, key: &CacheKey) -> PathBuf {
        let digest = key.entry_digest();
        self.root
            .join(&digest[0..2])
            .join(&digest[2..4])
            .join(format!("{digest}.{ENTRY_EXT}"))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>> {
        let path = self.entry_path(key);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(Error::StoreIo { path, source }),
        };
        let (header, body) = read_entry(file).map_err(|source| Error::StoreIo {
            path: path.clone(),
            source,
        })?;
        if header.key != *key {
            return Err(Error::StoreIo {
                path,
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, "entry key mismatch"),
            });
        }
        Ok(Some(CacheEntry {
            key: header.key,
            stored_at: header.stored_at,
            body,
        }))
    }

    /// Store `body` under `key`. A key that already has an entry keeps it.
    pub fn put(&self, key: &CacheKey, body: &[u8]) -> Result<()> {
        let path = self.entry_path(key);
        if path.exists() {
            return Ok(());
        }
        let dir = path.parent().expect("entry path has a parent").to_path_buf();
        let io = |source| Error::StoreIo {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(&dir).map_err(io)?;

        let header = EntryHeader {
            key: key.clone(),
            stored_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            len: body.len(),
        };
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let written = (|| {
            let mut f = fs::File::create(&tmp)?;
            serde_json::to_writer(&mut f, &header)?;
            f.write_all(b"\n")?;
            f.write_all(body)?;
            f.sync_all()
        })();
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            return Err(io(e));
        }

        let published = match fs::hard_link(&tmp, &path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Ok(()),
            // Filesystems without hard links fall back to rename.
            Err(_) => fs::rename(&tmp, &path),
        };
        let _ = fs::remove_file(&tmp);
        published.map_err(io)
    }

    pub fn list(&self) -> Result<Vec<CacheEntryInfo>> {
        let mut out = Vec::new();
        for path in self.entry_files()? {
            let file = fs::File::open(&path).map_err(|source| Error::StoreIo {
                path: path.clone(),
                source,
            })?;
            let header = read_header(&mut BufReader::new(file)).map_err(|source| Error::StoreIo {
                path: path.clone(),
                source,
            })?;
            out.push(CacheEntryInfo {
                key: header.key,
                stored_at: header.stored_at,
                size: header.len,
                path,
            });
        }
        out.sort_by_key(|a| a.key.to_string());
        Ok(out)
    }

    pub fn stats(&self) -> Result<CacheStats> {
        let mut stats = CacheStats::default();
        for path in self.entry_files()? {
            stats.entries += 1;
            stats.bytes += fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        }
        Ok(stats)
    }

    /// Remove every entry. Returns how many were removed.
    pub fn clear(&self) -> Result<usize> {
        let files = self.entry_files()?;
        for path in &files {
            fs::remove_file(path).map_err(|source| Error::StoreIo {
                path: path.clone(),
                source,
            })?;
        }
        for shard in read_dirs(&self.root)? {
            let _ = fs::remove_dir_all(shard);
        }
        Ok(files.len())
    }

    /// Write every entry into a tar archive (gzip-compressed when the file
    /// name ends in `.gz` or `.tgz`). Returns the number of entries written.
    pub fn export(&self, tarball: &Path) -> Result<usize> {
        let io = |source| Error::StoreIo {
            path: tarball.to_path_buf(),
            source,
        };
        let files = self.entry_files()?;
        let out = fs::File::create(tarball).map_err(io)?;
        let name = tarball.to_string_lossy();
        let writer: Box<dyn Write> = if name.ends_with(".gz") || name.ends_with(".tgz") {
            Box::new(flate2::write::GzEncoder::new(out, flate2::Compression::default()))
        } else {
            Box::new(out)
        };
        let mut builder = tar::Builder::new(writer);
        for path in &files {
            let rel = path.strip_prefix(&self.root).unwrap_or(path);
            builder.append_path_with_name(path, rel).map_err(io)?;
        }
        builder.into_inner().and_then(|mut w| w.flush()).map_err(io)?;
        Ok(files.len())
    }

    fn entry_files(&self) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for a in read_dirs(&self.root)? {
            for b in read_dirs(&a)? {
                let entries = fs::read_dir(&b).map_err(|source| Error::StoreIo {
                    path: b.clone(),
                    source,
                })?;
                for entry in entries.flatten() {
                    let p = entry.path();
                    if p.extension().is_some_and(|e| e == ENTRY_EXT) {
                        files.push(p);
                    }
                }
            }
        }
        files.sort();
        Ok(files)
    }
}

fn read_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(Error::StoreIo {
                path: dir.to_path_buf(),
                source,
            })
        }
    };
    let mut dirs: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn read_header<R: BufRead>(reader: &mut R) -> std::io::Result<EntryHeader> {
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    serde_json::from_slice(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn read_entry(file: fs::File) -> std::io::Result<(EntryHeader, Vec<u8>)> {
    let mut reader = BufReader::new(file);
    let header = read_header(&mut reader)?;
    let mut body = Vec::with_capacity(header.len);
    reader.read_to_end(&mut body)?;
    if body.len() != header.len {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("entry body is {} bytes, header says {}", body.len(), header.len),
        ));
    }
    Ok((header, body))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_req(payload: &str) -> RetrievalRequest {
        RetrievalRequest {
            kind: RequestKind::TextQuery,
            payload: payload.to_string(),
            limit: 10,
        }
    }

    #[test]
    fn key_is_deterministic_and_provider_scoped() {
        let r = text_req("Flood hits city X");
        assert_eq!(cache_key(&r, "p"), cache_key(&r, "p"));
        assert_ne!(cache_key(&r, "p"), cache_key(&r, "q"));
        assert_ne!(cache_key(&r, "p").entry_digest(), cache_key(&r, "q").entry_digest());
    }

    #[test]
    fn key_ignores_surrounding_whitespace_and_limit() {
        // Digest computed externally: printf 'Flood hits city X' | sha256sum
        let expected = "f1fc8a628fda3244dfbccb9cfb824e39e38b83963acc773aa7be53dce813a1bc";
        let a = cache_key(&text_req("  Flood hits city X\n"), "p");
        let mut b_req = text_req("Flood hits city X");
        b_req.limit = 3;
        let b = cache_key(&b_req, "p");
        assert_eq!(a, b);
        assert_eq!(a.payload_digest, expected);
    }

    #[test]
    fn put_get_round_trip_and_absent() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        let key = cache_key(&text_req("q"), "p");
        assert!(cache.get(&key).unwrap().is_none());
        let body = b"{\"records\":[]}\n\x00\xff";
        cache.put(&key, body).unwrap();
        let entry = cache.get(&key).unwrap().unwrap();
        assert_eq!(entry.body, body);
        assert_eq!(entry.key, key);
    }

    #[test]
    fn existing_entry_is_not_overwritten() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        let key = cache_key(&text_req("q"), "p");
        cache.put(&key, b"first").unwrap();
        cache.put(&key, b"second").unwrap();
        assert_eq!(cache.get(&key).unwrap().unwrap().body, b"first");
    }

    #[test]
    fn concurrent_identical_puts_leave_one_entry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        let key = cache_key(&text_req("same"), "p");
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| cache.put(&key, b"payload").unwrap());
            }
        });
        assert_eq!(cache.list().unwrap().len(), 1);
        assert_eq!(cache.get(&key).unwrap().unwrap().body, b"payload");
        // no temp files left behind
        let leftovers = walk(dir.path())
            .into_iter()
            .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(".tmp"))
            .count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn truncated_entry_is_an_error_not_a_short_body() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        let key = cache_key(&text_req("q"), "p");
        cache.put(&key, b"0123456789").unwrap();
        let path = cache.entry_path(&key);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert_eq!(cache.get(&key).unwrap_err().code(), "EStoreIO");
    }

    #[test]
    fn clear_and_export() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path().join("store"));
        for q in ["a", "b", "c"] {
            cache.put(&cache_key(&text_req(q), "p"), q.as_bytes()).unwrap();
        }
        assert_eq!(cache.stats().unwrap().entries, 3);
        let tarball = dir.path().join("out.tar.gz");
        assert_eq!(cache.export(&tarball).unwrap(), 3);
        assert!(fs::metadata(&tarball).unwrap().len() > 0);
        assert_eq!(cache.clear().unwrap(), 3);
        assert!(cache.list().unwrap().is_empty());
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }
}
