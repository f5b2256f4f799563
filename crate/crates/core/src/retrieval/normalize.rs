//! Provider records to [`EvidenceCandidate`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EvidenceCandidate, Origin};

/// One record of the generic search response schema:
/// `{records: [{url, title?, snippet?, image_url?, published_at?, language?}]}`.
/// Unknown fields are kept and end up in `raw_meta`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub snippet: Option<String>,
    #[serde(default)]
    pub image_url: Option<String>,
    #[serde(default)]
    pub published_at: Option<String>,
    #[serde(default)]
    pub language: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub records: Vec<RawRecord>,
}

pub fn parse_search_response(body: &[u8]) -> Result<SearchResponse> {
    serde_json::from_slice(body).map_err(|e| Error::MalformedResponse(format!("search response: {e}")))
}

/// Lowercased registrable domain (eTLD+1) of a URL.
///
/// Hosts that are themselves a public suffix, single-label hosts, and IP
/// literals are returned as-is.
pub fn registrable_domain(url: &str) -> Result<String> {
    let parsed = url::Url::parse(url.trim())
        .map_err(|e| Error::MalformedResponse(format!("bad url `{url}`: {e}")))?;
    let host = match parsed.host() {
        Some(url::Host::Domain(d)) => d.trim_end_matches('.').to_ascii_lowercase(),
        Some(other) => return Ok(other.to_string()),
        None => return Err(Error::MalformedResponse(format!("url `{url}` has no host"))),
    };
    if host.is_empty() {
        return Err(Error::MalformedResponse(format!("url `{url}` has no host")));
    }
    Ok(psl::domain_str(&host).map(str::to_string).unwrap_or(host))
}

fn present(field: &Option<String>) -> Option<String> {
    field
        .as_deref()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Build a candidate from a raw provider record.
pub fn normalize_record(raw: &RawRecord, origin: Origin, id: impl Into<String>) -> Result<EvidenceCandidate> {
    let url = present(&raw.url).ok_or_else(|| Error::MalformedResponse("record has no url".into()))?;
    let domain = registrable_domain(&url)?;
    let snippet = present(&raw.snippet);
    let image_ref = present(&raw.image_url);
    if snippet.is_none() && image_ref.is_none() {
        return Err(Error::MalformedResponse(format!(
            "record for {url} has neither snippet nor image"
        )));
    }
    let raw_meta = raw
        .extra
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, v)| {
            let value = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), value)
        })
        .collect();
    Ok(EvidenceCandidate {
        id: id.into(),
        origin,
        source_url: url,
        domain,
        title: present(&raw.title),
        snippet,
        image_ref,
        published_at: present(&raw.published_at),
        language: present(&raw.language).map(|l| l.to_ascii_lowercase()),
        raw_meta,
    })
}
