//! TOML configuration, environment overrides and the config fingerprint.
//!
//! Relative paths resolve against the directory holding the config file.
//! Secrets never live in the file: a section names the environment variable
//! holding its API key (`api_key_env`), and endpoints may be overridden from
//! `OOC_SEARCH_ENDPOINT`, `OOC_EMBED_ENDPOINT` and `OOC_CHAT_ENDPOINT`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filtering::{load_allowlist, FilterConfig};
use crate::ranking::RankingConfig;

pub const SEARCH_ENDPOINT_ENV: &str = "OOC_SEARCH_ENDPOINT";
pub const EMBED_ENDPOINT_ENV: &str = "OOC_EMBED_ENDPOINT";
pub const CHAT_ENDPOINT_ENV: &str = "OOC_CHAT_ENDPOINT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    #[default]
    Fixture,
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalSection {
    pub provider: SearchKind,
    pub provider_id: String,
    /// Fixture responses, `<dir>/<kind>/<digest>.json`.
    pub fixture_dir: Option<String>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub text_limit: usize,
    pub image_limit: usize,
    pub timeout_secs: u64,
    pub max_concurrent_calls: usize,
    /// Base for relative evidence image references.
    pub evidence_image_dir: Option<String>,
    pub allow_remote_images: bool,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            provider: SearchKind::Fixture,
            provider_id: "search".into(),
            fixture_dir: None,
            endpoint: None,
            api_key_env: None,
            text_limit: 10,
            image_limit: 10,
            timeout_secs: 30,
            max_concurrent_calls: 4,
            evidence_image_dir: None,
            allow_remote_images: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextEmbedKind {
    Fixture,
    Hashing,
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageEmbedKind {
    Fixture,
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub text_provider: TextEmbedKind,
    pub image_provider: ImageEmbedKind,
    pub text_table: Option<String>,
    pub image_table: Option<String>,
    pub hashing_dim: usize,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            text_provider: TextEmbedKind::Hashing,
            image_provider: ImageEmbedKind::Fixture,
            text_table: None,
            image_table: None,
            hashing_dim: 256,
            endpoint: None,
            api_key_env: None,
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatKind {
    #[default]
    Scripted,
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReasoningSection {
    pub provider: ChatKind,
    pub provider_id: String,
    pub stance_book: Option<String>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for ReasoningSection {
    fn default() -> Self {
        Self {
            provider: ChatKind::Scripted,
            provider_id: "chat".into(),
            stance_book: None,
            endpoint: None,
            api_key_env: None,
            timeout_secs: 120,
            max_retries: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub workers: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self { workers: 4 }
    }
}

/// Fully resolved configuration. Serializes to the canonical form that the
/// fingerprint is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub retrieval: RetrievalSection,
    pub embedding: EmbeddingSection,
    pub filter: FilterConfig,
    pub ranking: RankingConfig,
    pub reasoning: ReasoningSection,
    pub benchmark: BenchmarkSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Config {
    /// Parse TOML text. `base_dir` anchors relative paths.
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." { "<root>".to_string() } else { path };
            Error::config(key, e.into_inner().message().trim())
        })?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    /// Load, apply environment overrides, and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(Self::from_toml_str(&text, base)?, |k| std::env::var(k).ok())
    }

    /// Built-in defaults, resolved against `base_dir`.
    pub fn defaults(base_dir: impl Into<PathBuf>) -> Result<Self> {
        Self::resolve(
            Config {
                base_dir: base_dir.into(),
                ..Config::default()
            },
            |k| std::env::var(k).ok(),
        )
    }

    /// Apply overrides from `env`, merge the allowlist file, and validate.
    pub fn resolve(mut self, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        for (var, slot) in [
            (SEARCH_ENDPOINT_ENV, &mut self.retrieval.endpoint),
            (EMBED_ENDPOINT_ENV, &mut self.embedding.endpoint),
            (CHAT_ENDPOINT_ENV, &mut self.reasoning.endpoint),
        ] {
            if let Some(v) = env(var).filter(|v| !v.trim().is_empty()) {
                *slot = Some(v);
            }
        }

        if let Some(rel) = self.filter.allowlist_path.clone() {
            let path = self.path(&rel);
            let extra = load_allowlist(&path)
                .map_err(|e| Error::config("filter.allowlist_path", format!("{}: {e}", path.display())))?;
            self.filter.domain_allowlist.extend(extra);
        }
        self.filter.validate()?;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.ranking.top_k == 0 {
            return Err(Error::config("ranking.top_k", "must be at least 1"));
        }
        if !(self.ranking.borderline_band >= 0.0 && self.ranking.borderline_band.is_finite()) {
            return Err(Error::config("ranking.borderline_band", "must be a non-negative number"));
        }
        if self.retrieval.text_limit == 0 {
            return Err(Error::config("retrieval.text_limit", "must be at least 1"));
        }
        if self.retrieval.image_limit == 0 {
            return Err(Error::config("retrieval.image_limit", "must be at least 1"));
        }
        if self.benchmark.workers == 0 {
            return Err(Error::config("benchmark.workers", "must be at least 1"));
        }
        if self.embedding.hashing_dim == 0 {
            return Err(Error::config("embedding.hashing_dim", "must be at least 1"));
        }
        let need_file = |key: &str, value: &Option<String>| -> Result<()> {
            let rel = value.as_ref().ok_or_else(|| Error::config(key, "required by the selected provider"))?;
            let path = self.path(rel);
            if path.exists() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{} does not exist", path.display())))
            }
        };
        let need_endpoint = |key: &str, value: &Option<String>| -> Result<()> {
            match value {
                Some(v) if url::Url::parse(v).is_ok() => Ok(()),
                Some(v) => Err(Error::config(key, format!("`{v}` is not a URL"))),
                None => Err(Error::config(key, "required by the rest provider")),
            }
        };
        match self.retrieval.provider {
            SearchKind::Fixture => need_file("retrieval.fixture_dir", &self.retrieval.fixture_dir)?,
            SearchKind::Rest => need_endpoint("retrieval.endpoint", &self.retrieval.endpoint)?,
        }
        if let Some(dir) = &self.retrieval.evidence_image_dir {
            need_file("retrieval.evidence_image_dir", &Some(dir.clone()))?;
        }
        match self.embedding.text_provider {
            TextEmbedKind::Fixture => need_file("embedding.text_table", &self.embedding.text_table)?,
            TextEmbedKind::Rest => need_endpoint("embedding.endpoint", &self.embedding.endpoint)?,
            TextEmbedKind::Hashing => {}
        }
        match self.embedding.image_provider {
            ImageEmbedKind::Fixture => need_file("embedding.image_table", &self.embedding.image_table)?,
            ImageEmbedKind::Rest => need_endpoint("embedding.endpoint", &self.embedding.endpoint)?,
        }
        match self.reasoning.provider {
            ChatKind::Scripted => need_file("reasoning.stance_book", &self.reasoning.stance_book)?,
            ChatKind::Rest => need_endpoint("reasoning.endpoint", &self.reasoning.endpoint)?,
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Resolve a config-relative path.
    pub fn path(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config always serializes")
    }

    /// sha256 of the canonical JSON.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Read the API key named by `api_key_env`, if any.
    pub fn api_key(var: &Option<String>) -> Option<String> {
        var.as_deref().and_then(|v| std::env::var(v).ok()).filter(|k| !k.is_empty())
    }
}
