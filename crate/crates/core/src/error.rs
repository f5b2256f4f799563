use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Byte range into a provider response that a parser rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("provider `{provider}` unavailable: {message}")]
    ProviderUnavailable { provider: String, message: String },

    #[error("offline mode: no cache entry for key {key}")]
    CacheMiss { key: String },

    #[error("malformed provider response: {0}")]
    MalformedResponse(String),

    #[error("image `{reference}` unreadable: {reason}")]
    ImageUnreadable { reference: String, reason: String },

    #[error("cache store I/O at {}: {source}", path.display())]
    StoreIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity undefined for an all-zero vector")]
    ZeroVector,

    #[error("cannot embed empty text")]
    EmptyText,

    #[error("candidate `{0}` has no similarity scores")]
    UnscoredCandidate(String),

    #[error("domain filter enabled with an empty allowlist")]
    EmptyAllowlist,

    #[error("could not parse {stage} response: {reason}")]
    ParseFailure {
        stage: &'static str,
        reason: String,
        span: Option<Span>,
    },

    #[error("{stage} response violates schema: {reason}")]
    SchemaViolation { stage: &'static str, reason: String },

    #[error("confidence {0} outside 0..=10")]
    ConfidenceOutOfRange(i64),

    #[error("unknown verdict label `{0}`")]
    UnknownLabel(String),

    #[error("dataset malformed at {locus}: {reason}")]
    DatasetMalformed { locus: String, reason: String },

    #[error("duplicate record id `{0}`")]
    DuplicateId(String),

    #[error("no prediction for sample `{0}`")]
    MissingPrediction(String),

    #[error("report I/O at {}: {source}", path.display())]
    ReportIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config at `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },

    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },
}

impl Error {
    /// Stable error code reported by the CLI and the service.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ProviderUnavailable { .. } | Error::CacheMiss { .. } => "EProviderUnavailable",
            Error::MalformedResponse(_) => "EMalformedResponse",
            Error::ImageUnreadable { .. } => "EImageUnreadable",
            Error::StoreIo { .. } => "EStoreIO",
            Error::DimensionMismatch { .. } => "EDimensionMismatch",
            Error::ZeroVector => "EZeroVector",
            Error::EmptyText => "EEmptyText",
            Error::UnscoredCandidate(_) => "EUnscoredCandidate",
            Error::EmptyAllowlist => "EEmptyAllowlist",
            Error::ParseFailure { .. } => "EParseFailure",
            Error::SchemaViolation { .. } => "ESchemaViolation",
            Error::ConfidenceOutOfRange(_) => "EConfidenceOutOfRange",
            Error::UnknownLabel(_) => "EUnknownLabel",
            Error::DatasetMalformed { .. } => "EDatasetMalformed",
            Error::DuplicateId(_) => "EDuplicateId",
            Error::MissingPrediction(_) => "EMissingPrediction",
            Error::ReportIo { .. } => "EReportIO",
            Error::ConfigInvalid { .. } => "EConfigInvalid",
            Error::InvalidInput { .. } => "EInvalidInput",
        }
    }

    pub(crate) fn unavailable(provider: impl Into<String>, message: impl ToString) -> Self {
        Error::ProviderUnavailable {
            provider: provider.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn image(reference: impl Into<String>, reason: impl ToString) -> Self {
        Error::ImageUnreadable {
            reference: reference.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl ToString) -> Self {
        Error::ConfigInvalid {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}
