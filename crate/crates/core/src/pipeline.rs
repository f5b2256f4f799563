//! End-to-end verification of one claim pair.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{CacheStats, EvidenceCache};
use crate::config::{ChatKind, Config, ImageEmbedKind, SearchKind, TextEmbedKind};
use crate::error::{Error, Result};
use crate::filtering::{run_filter_module, FilterConfig, FilterStage, FilterTrace, LanguageDetector, TraceEntry, TrigramDetector};
use crate::http::RestClient;
use crate::image::ImageResolver;
use crate::limiter::CallLimiter;
use crate::ranking::{rank_candidates, select_top_k, RankingConfig};
use crate::reasoning::scripted::StanceBook;
use crate::reasoning::{run_two_stage, ChatProvider, FinalVerdict, ReasoningPolicy, ReasoningTrace, RestChatProvider};
use crate::retrieval::{
    retrieve_text_evidence, retrieve_visual_evidence, FixtureSearchProvider, RestSearchProvider, RetrievalOutcome,
    Retriever, SearchProvider,
};
use crate::similarity::{
    embed_image, embed_text, score_candidate, ClaimEmbeddings, FixtureImageEmbedder, FixtureTextEmbedder,
    HashingTextEmbedder, ImageEmbedder, RestEmbedder, ScoredCandidate, Scorer, SimilarityScores, TextEmbedder,
    VectorTable,
};
use crate::types::{collapse_whitespace, ClaimPair, EvidenceCandidate};

/// The swappable external services.
#[derive(Clone)]
pub struct Providers {
    pub search: Arc<dyn SearchProvider>,
    pub text_embedder: Arc<dyn TextEmbedder>,
    pub image_embedder: Arc<dyn ImageEmbedder>,
    pub chat: Arc<dyn ChatProvider>,
    pub detector: Arc<dyn LanguageDetector>,
}

/// Options that change how a run executes but not what it computes.
#[derive(Debug, Clone, Default)]
pub struct RuntimeOptions {
    pub cache_dir: Option<PathBuf>,
    /// Cache-only retrieval; remote embedding or chat providers are refused.
    pub offline: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub retrieval_s: f64,
    pub embedding_s: f64,
    pub reasoning_s: f64,
    /// Wall time minus time spent waiting on providers.
    pub overhead_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub code: &'static str,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoringEntry {
    pub candidate_id: String,
    pub scores: Option<SimilarityScores>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationTrace {
    pub claim_id: String,
    pub caption: String,
    pub image_ref: String,
    pub config_fingerprint: String,
    pub text_retrieval: Option<RetrievalOutcome>,
    pub image_retrieval: Option<RetrievalOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub claim_warnings: Vec<String>,
    pub scoring: Vec<ScoringEntry>,
    pub filter: FilterTrace,
    /// Ranked order after filtering, with the scores that produced it.
    pub ranked: Vec<ScoringEntry>,
    pub top_k: Vec<String>,
    pub reasoning: Option<ReasoningTrace>,
    pub verdict: Option<FinalVerdict>,
    pub error: Option<ErrorInfo>,
}

#[derive(Debug)]
pub struct VerificationOutcome {
    pub result: Result<FinalVerdict>,
    pub trace: VerificationTrace,
    pub timings: Timings,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProviderHealth {
    pub role: &'static str,
    pub id: String,
    pub remote: bool,
    pub reachable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HealthReport {
    pub ok: bool,
    pub offline: bool,
    pub providers: Vec<ProviderHealth>,
    pub cache: Option<CacheStats>,
}

#[derive(Clone)]
pub struct Pipeline {
    providers: Providers,
    retriever: Retriever,
    cache: Option<EvidenceCache>,
    filter: FilterConfig,
    ranking: RankingConfig,
    text_limit: usize,
    image_limit: usize,
    policy: ReasoningPolicy,
    evidence_resolver: ImageResolver,
    claim_resolver: ImageResolver,
    fingerprint: String,
    offline: bool,
}

fn rest(provider_id: &str, endpoint: &Option<String>, key_env: &Option<String>, timeout_secs: u64) -> Result<RestClient> {
    let endpoint = endpoint
        .clone()
        .ok_or_else(|| Error::config(format!("{provider_id}.endpoint"), "missing"))?;
    RestClient::new(
        provider_id,
        endpoint,
        Config::api_key(key_env),
        Duration::from_secs(timeout_secs),
    )
}

impl Providers {
    /// Instantiate the providers a resolved config names.
    pub fn from_config(config: &Config) -> Result<Self> {
        let r = &config.retrieval;
        let search: Arc<dyn SearchProvider> = match r.provider {
            SearchKind::Fixture => Arc::new(FixtureSearchProvider::new(
                r.provider_id.clone(),
                config.path(r.fixture_dir.as_deref().unwrap_or_default()),
            )),
            SearchKind::Rest => Arc::new(RestSearchProvider::new(
                r.provider_id.clone(),
                rest(&r.provider_id, &r.endpoint, &r.api_key_env, r.timeout_secs)?,
            )),
        };
        let e = &config.embedding;
        let table = |key: &str, rel: &Option<String>| -> Result<VectorTable> {
            let rel = rel.as_deref().ok_or_else(|| Error::config(key, "missing"))?;
            VectorTable::load(&config.path(rel))
        };
        let text_embedder: Arc<dyn TextEmbedder> = match e.text_provider {
            TextEmbedKind::Fixture => Arc::new(FixtureTextEmbedder::new(
                "text-table",
                table("embedding.text_table", &e.text_table)?,
            )),
            TextEmbedKind::Hashing => Arc::new(HashingTextEmbedder::new(e.hashing_dim)),
            TextEmbedKind::Rest => Arc::new(RestEmbedder::new(
                "embed",
                rest("embed", &e.endpoint, &e.api_key_env, e.timeout_secs)?,
            )),
        };
        let image_embedder: Arc<dyn ImageEmbedder> = match e.image_provider {
            ImageEmbedKind::Fixture => Arc::new(FixtureImageEmbedder::new(
                "image-table",
                table("embedding.image_table", &e.image_table)?,
            )),
            ImageEmbedKind::Rest => Arc::new(RestEmbedder::new(
                "embed",
                rest("embed", &e.endpoint, &e.api_key_env, e.timeout_secs)?,
            )),
        };
        let c = &config.reasoning;
        let chat: Arc<dyn ChatProvider> = match c.provider {
            ChatKind::Scripted => {
                let rel = c
                    .stance_book
                    .as_deref()
                    .ok_or_else(|| Error::config("reasoning.stance_book", "missing"))?;
                Arc::new(StanceBook::load(&config.path(rel))?)
            }
            ChatKind::Rest => Arc::new(RestChatProvider::new(
                c.provider_id.clone(),
                rest(&c.provider_id, &c.endpoint, &c.api_key_env, c.timeout_secs)?,
            )),
        };
        Ok(Self {
            search,
            text_embedder,
            image_embedder,
            chat,
            detector: Arc::new(TrigramDetector),
        })
    }
}

impl Pipeline {
    pub fn from_config(config: &Config, runtime: &RuntimeOptions) -> Result<Self> {
        Self::new(Providers::from_config(config)?, config, runtime)
    }

    /// Assemble a pipeline from explicit providers. Relative claim image
    /// paths resolve against the config's base directory, evidence images
    /// against `retrieval.evidence_image_dir`.
    pub fn new(providers: Providers, config: &Config, runtime: &RuntimeOptions) -> Result<Self> {
        if runtime.offline {
            let remote = [
                ("embedding", providers.text_embedder.is_remote(), providers.text_embedder.id().to_string()),
                ("embedding", providers.image_embedder.is_remote(), providers.image_embedder.id().to_string()),
                ("reasoning", providers.chat.is_remote(), providers.chat.id().to_string()),
            ];
            if let Some((_, _, id)) = remote.iter().find(|r| r.1) {
                return Err(Error::unavailable(id.clone(), "offline mode: remote provider has no cache to replay"));
            }
        }
        let limiter = Arc::new(CallLimiter::new(config.retrieval.max_concurrent_calls));
        let cache = runtime.cache_dir.as_ref().map(EvidenceCache::new);
        let retriever = Retriever::new(providers.search.clone())
            .with_cache(cache.clone())
            .offline(runtime.offline)
            .with_limiter(limiter.clone());
        let base = config.base_dir().to_path_buf();
        let evidence_base = config.path(config.retrieval.evidence_image_dir.as_deref().unwrap_or(""));
        Ok(Self {
            providers,
            retriever,
            cache,
            filter: config.filter.clone(),
            ranking: config.ranking,
            text_limit: config.retrieval.text_limit,
            image_limit: config.retrieval.image_limit,
            policy: ReasoningPolicy {
                max_retries: config.reasoning.max_retries,
                limiter: Some(limiter),
            },
            evidence_resolver: ImageResolver::new(evidence_base)
                .allow_remote(config.retrieval.allow_remote_images && !runtime.offline),
            claim_resolver: ImageResolver::new(base),
            fingerprint: config.fingerprint(),
            offline: runtime.offline,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn filter_config(&self) -> &FilterConfig {
        &self.filter
    }

    pub fn ranking_config(&self) -> RankingConfig {
        self.ranking
    }

    pub fn cache(&self) -> Option<&EvidenceCache> {
        self.cache.as_ref()
    }

    pub fn claim_resolver(&self) -> &ImageResolver {
        &self.claim_resolver
    }

    /// Override the base directory for claim image references.
    pub fn with_claim_base(mut self, dir: impl Into<PathBuf>) -> Self {
        self.claim_resolver = ImageResolver::new(dir);
        self
    }

    pub fn health(&self) -> HealthReport {
        let p = &self.providers;
        let mut providers = vec![
            ProviderHealth {
                role: "search",
                id: p.search.id().into(),
                remote: p.search.is_remote(),
                reachable: false,
            },
            ProviderHealth {
                role: "text_embedding",
                id: p.text_embedder.id().into(),
                remote: p.text_embedder.is_remote(),
                reachable: false,
            },
            ProviderHealth {
                role: "image_embedding",
                id: p.image_embedder.id().into(),
                remote: p.image_embedder.is_remote(),
                reachable: false,
            },
            ProviderHealth {
                role: "reasoning",
                id: p.chat.id().into(),
                remote: p.chat.is_remote(),
                reachable: false,
            },
        ];
        // offline runs never touch the network, so remote search counts as unreachable
        let probes = [
            !(self.offline && p.search.is_remote()) && p.search.probe(),
            p.text_embedder.probe(),
            p.image_embedder.probe(),
            p.chat.probe(),
        ];
        for (entry, ok) in providers.iter_mut().zip(probes) {
            entry.reachable = ok;
        }
        HealthReport {
            ok: providers.iter().all(|p| p.reachable),
            offline: self.offline,
            providers,
            cache: self.cache.as_ref().and_then(|c| c.stats().ok()),
        }
    }

    pub fn verify(&self, claim: &ClaimPair) -> VerificationOutcome {
        let started = Instant::now();
        let mut trace = VerificationTrace {
            claim_id: claim.id.clone(),
            caption: claim.caption.clone(),
            image_ref: claim.image_ref.clone(),
            config_fingerprint: self.fingerprint.clone(),
            ..Default::default()
        };
        let mut provider_time = ProviderTime::default();
        let result = self.run(claim, &mut trace, &mut provider_time);
        let total = started.elapsed();
        match &result {
            Ok(v) => trace.verdict = Some(v.clone()),
            Err(e) => trace.error = Some(e.into()),
        }
        let waited = provider_time.search + provider_time.embedding + provider_time.reasoning;
        let timings = Timings {
            retrieval_s: provider_time.retrieval_wall.as_secs_f64(),
            embedding_s: provider_time.embedding.as_secs_f64(),
            reasoning_s: provider_time.reasoning.as_secs_f64(),
            overhead_s: total.saturating_sub(waited).as_secs_f64(),
            total_s: total.as_secs_f64(),
        };
        VerificationOutcome { result, trace, timings }
    }

    fn run(&self, claim: &ClaimPair, trace: &mut VerificationTrace, time: &mut ProviderTime) -> Result<FinalVerdict> {
        if claim.id.trim().is_empty() {
            return Err(Error::InvalidInput {
                field: "id".into(),
                reason: "empty".into(),
            });
        }
        if claim.caption.trim().is_empty() {
            return Err(Error::InvalidInput {
                field: "caption".into(),
                reason: "empty".into(),
            });
        }
        let image = self.claim_resolver.load(&claim.image_ref)?;

        let retrieval_started = Instant::now();
        let (text, visual) = std::thread::scope(|s| {
            let text = s.spawn(|| retrieve_text_evidence(claim, self.text_limit, &self.retriever));
            let visual = retrieve_visual_evidence(&image, self.image_limit, &self.retriever);
            (text.join().expect("text retrieval thread panicked"), visual)
        });
        time.retrieval_wall = retrieval_started.elapsed();
        let (text, visual) = (text?, visual?);
        time.search = text.provider_time.max(visual.provider_time);
        let mut candidates: Vec<EvidenceCandidate> = text.candidates.clone();
        candidates.extend(visual.candidates.iter().cloned());
        trace.text_retrieval = Some(text);
        trace.image_retrieval = Some(visual);

        let embed_started = Instant::now();
        let claim_text = embed_text(&collapse_whitespace(&claim.caption), self.providers.text_embedder.as_ref())?;
        let claim_image = match embed_image(&image, self.providers.image_embedder.as_ref()) {
            Ok(v) => Some(v),
            Err(e) => {
                trace.claim_warnings.push(format!("claim image embedding unavailable: {e}"));
                None
            }
        };
        time.embedding += embed_started.elapsed();
        let claim_emb = ClaimEmbeddings {
            text: claim_text,
            image: claim_image,
        };

        let scorer = Scorer {
            text: self.providers.text_embedder.as_ref(),
            image: self.providers.image_embedder.as_ref(),
            resolver: &self.evidence_resolver,
        };
        let scoring_started = Instant::now();
        let outcomes: Vec<_> = candidates
            .par_iter()
            .map(|c| score_candidate(&claim_emb, c, &scorer))
            .collect();
        let scoring_wall = scoring_started.elapsed();
        let summed: Duration = outcomes.iter().map(|o| o.provider_time).sum();
        time.embedding += summed.min(scoring_wall);

        let mut scored = Vec::with_capacity(candidates.len());
        let mut unscored = Vec::new();
        for (candidate, outcome) in candidates.into_iter().zip(outcomes) {
            trace.scoring.push(ScoringEntry {
                candidate_id: candidate.id.clone(),
                scores: outcome.scores,
                warnings: outcome.warnings,
            });
            match outcome.scores {
                Some(_) => scored.push(ScoredCandidate::new(candidate, outcome.scores)),
                None => unscored.push(candidate.id),
            }
        }

        let filtered = run_filter_module(&scored, &self.filter, self.providers.detector.as_ref())?;
        trace.filter.entries = unscored
            .into_iter()
            .map(|id| TraceEntry {
                candidate_id: id,
                kept: false,
                stage: Some(FilterStage::Scoring),
                detail: Some("no modality could be scored".into()),
            })
            .chain(filtered.trace.entries)
            .collect();

        let ranked = rank_candidates(&filtered.kept, self.ranking.borderline_band)?;
        let top = select_top_k(&ranked, self.ranking.top_k);
        trace.top_k = top.iter().map(|c| c.id().to_string()).collect();
        trace.ranked = ranked
            .iter()
            .map(|c| ScoringEntry {
                candidate_id: c.id().to_string(),
                scores: c.scores,
                warnings: Vec::new(),
            })
            .collect();

        let outcome = run_two_stage(claim, &top, self.providers.chat.as_ref(), &self.claim_resolver, &self.policy);
        time.reasoning = outcome.trace.provider_time;
        trace.reasoning = Some(outcome.trace);
        outcome.result
    }
}

#[derive(Debug, Default)]
struct ProviderTime {
    retrieval_wall: Duration,
    search: Duration,
    embedding: Duration,
    reasoning: Duration,
}
