//! Domain records shared across the pipeline stages.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The image/caption pair under verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimPair {
    pub id: String,
    /// Local path, `file://` URI, or `http(s)://` URI of the image bytes.
    pub image_ref: String,
    pub caption: String,
    /// `Some(true)` marks a falsified (out-of-context) pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<bool>,
}

impl ClaimPair {
    pub fn new(id: impl Into<String>, image_ref: impl Into<String>, caption: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            image_ref: image_ref.into(),
            caption: caption.into(),
            gold_label: None,
        }
    }

    pub fn with_gold(mut self, ooc: bool) -> Self {
        self.gold_label = Some(ooc);
        self
    }
}

/// Which retrieval pipeline produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    TextSearch,
    ImageSearch,
}

impl Origin {
    /// Prefix used when minting candidate ids.
    pub fn id_prefix(self) -> &'static str {
        match self {
            Origin::TextSearch => "t",
            Origin::ImageSearch => "v",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::TextSearch => f.write_str("text"),
            Origin::ImageSearch => f.write_str("image"),
        }
    }
}

/// One external evidence item after normalization.
///
/// Optional fields are `None` when the provider omitted them; they are never
/// empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCandidate {
    pub id: String,
    pub origin: Origin,
    pub source_url: String,
    /// Lowercased registrable domain of `source_url`.
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub raw_meta: BTreeMap<String, String>,
}

impl EvidenceCandidate {
    /// Text used for the candidate side of textual similarity and language
    /// detection: the snippet, falling back to the title.
    pub fn text(&self) -> Option<&str> {
        self.snippet.as_deref().or(self.title.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    TextQuery,
    ReverseImage,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::TextQuery => "text_query",
            RequestKind::ReverseImage => "reverse_image",
        }
    }

    pub fn origin(self) -> Origin {
        match self {
            RequestKind::TextQuery => Origin::TextSearch,
            RequestKind::ReverseImage => Origin::ImageSearch,
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single outbound search request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalRequest {
    pub kind: RequestKind,
    /// Normalized caption text, or the hex content digest of the image.
    pub payload: String,
    pub limit: usize,
}

/// Collapse every run of whitespace to a single space and trim both ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
