//! Cross-modal evidence retrieval: caption-conditioned text search and
//! reverse-image search, normalized into [`EvidenceCandidate`]s.

mod normalize;
mod provider;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use normalize::{normalize_record, parse_search_response, registrable_domain, RawRecord, SearchResponse};
pub use provider::{fixture_path, FixtureSearchProvider, RestSearchProvider, SearchProvider};

use crate::cache::{cache_key, CacheKey, EvidenceCache};
use crate::error::{Error, Result};
use crate::image::content_digest;
use crate::limiter::CallLimiter;
use crate::types::{collapse_whitespace, ClaimPair, EvidenceCandidate, RequestKind, RetrievalRequest};

/// A provider record that normalization rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedRecord {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetrievalOutcome {
    pub request: RetrievalRequest,
    pub key: CacheKey,
    pub cache_hit: bool,
    pub candidates: Vec<EvidenceCandidate>,
    pub dropped: Vec<DroppedRecord>,
    #[serde(skip)]
    pub provider_time: Duration,
}

/// A search provider plus the cache and offline policy in front of it.
#[derive(Clone)]
pub struct Retriever {
    provider: Arc<dyn SearchProvider>,
    cache: Option<EvidenceCache>,
    offline: bool,
    limiter: Arc<CallLimiter>,
}

impl Retriever {
    pub fn new(provider: Arc<dyn SearchProvider>) -> Self {
        Self {
            provider,
            cache: None,
            offline: false,
            limiter: Arc::new(CallLimiter::new(4)),
        }
    }

    pub fn with_cache(mut self, cache: Option<EvidenceCache>) -> Self {
        self.cache = cache;
        self
    }

    /// Cache-only mode: a miss is an error and the provider is never called.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn with_limiter(mut self, limiter: Arc<CallLimiter>) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn provider(&self) -> &Arc<dyn SearchProvider> {
        &self.provider
    }

    /// Raw response bytes for `request`, from the cache when possible.
    /// Only responses that parse are written back to the cache.
    fn fetch(&self, request: &RetrievalRequest, image: Option<&[u8]>) -> Result<(CacheKey, Vec<u8>, bool, Duration)> {
        let key = cache_key(request, self.provider.id());
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key)? {
                return Ok((key, entry.body, true, Duration::ZERO));
            }
        }
        if self.offline {
            return Err(Error::CacheMiss { key: key.to_string() });
        }
        let started = Instant::now();
        let body = {
            let _permit = self.limiter.acquire();
            self.provider.fetch(request, image)?
        };
        let elapsed = started.elapsed();
        parse_search_response(&body)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &body)?;
        }
        Ok((key, body, false, elapsed))
    }

    fn retrieve(&self, request: RetrievalRequest, image: Option<&[u8]>) -> Result<RetrievalOutcome> {
        if request.limit == 0 {
            return Err(Error::InvalidInput {
                field: "limit".into(),
                reason: "must be at least 1".into(),
            });
        }
        let (key, body, cache_hit, provider_time) = self.fetch(&request, image)?;
        let response = parse_search_response(&body)?;
        let origin = request.kind.origin();
        let mut candidates = Vec::new();
        let mut dropped = Vec::new();
        for (index, raw) in response.records.iter().enumerate() {
            if candidates.len() == request.limit {
                break;
            }
            let id = format!("{}{}", origin.id_prefix(), candidates.len() + 1);
            match normalize_record(raw, origin, id) {
                Ok(c) => candidates.push(c),
                Err(e) => dropped.push(DroppedRecord {
                    index,
                    reason: e.to_string(),
                }),
            }
        }
        Ok(RetrievalOutcome {
            request,
            key,
            cache_hit,
            candidates,
            dropped,
            provider_time,
        })
    }
}

/// Text query for a claim: the caption with whitespace collapsed.
pub fn text_query(claim: &ClaimPair) -> String {
    collapse_whitespace(&claim.caption)
}

/// Search by the claim caption. Candidates keep provider order.
pub fn retrieve_text_evidence(claim: &ClaimPair, limit: usize, retriever: &Retriever) -> Result<RetrievalOutcome> {
    let payload = text_query(claim);
    if payload.is_empty() {
        return Err(Error::InvalidInput {
            field: "caption".into(),
            reason: "empty".into(),
        });
    }
    retriever.retrieve(
        RetrievalRequest {
            kind: RequestKind::TextQuery,
            payload,
            limit,
        },
        None,
    )
}

/// Reverse-image search by the claim image's bytes. The request payload
/// is the content digest, so identical bytes share one cache entry.
pub fn retrieve_visual_evidence(image: &[u8], limit: usize, retriever: &Retriever) -> Result<RetrievalOutcome> {
    retriever.retrieve(
        RetrievalRequest {
            kind: RequestKind::ReverseImage,
            payload: content_digest(image),
            limit,
        },
        Some(image),
    )
}
