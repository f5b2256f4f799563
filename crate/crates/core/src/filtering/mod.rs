//! The Filter Module: similarity thresholding, then contextual relevance
//! filtering (domain allowlist, language, domain-title deduplication).
//!
//! Every stage is an order-preserving subset of its input and reports a
//! [`FilterTrace`] in which each input candidate appears exactly once.

mod language;

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use language::{primary_subtag, LanguageDetector, TrigramDetector};

use crate::error::{Error, Result};
use crate::similarity::ScoredCandidate;
use crate::types::Origin;

/// Default similarity threshold.
pub const DEFAULT_THETA: f64 = 0.7;

/// The four VisualNews outlets.
pub const DEFAULT_ALLOWLIST: [&str; 4] = ["theguardian.com", "bbc.co.uk", "usatoday.com", "washingtonpost.com"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStrategy {
    #[serde(alias = "similarity")]
    SimilarityOnly,
    #[serde(alias = "domain")]
    DomainOnly,
    #[default]
    Both,
}

impl std::str::FromStr for FilterStrategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(Self::Both),
            "similarity" | "similarity_only" => Ok(Self::SimilarityOnly),
            "domain" | "domain_only" => Ok(Self::DomainOnly),
            other => Err(format!("unknown strategy `{other}` (expected both|similarity|domain)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub theta: f64,
    pub strategy: FilterStrategy,
    pub domain_allowlist: BTreeSet<String>,
    pub language: String,
    pub dedup_enabled: bool,
    pub drop_text_evidence: bool,
    pub drop_image_evidence: bool,
    pub disable_domain_filter: bool,
    /// File of extra allowlisted domains, merged in when a config is loaded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowlist_path: Option<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            strategy: FilterStrategy::Both,
            domain_allowlist: DEFAULT_ALLOWLIST.iter().map(|s| s.to_string()).collect(),
            language: "en".into(),
            dedup_enabled: true,
            drop_text_evidence: false,
            drop_image_evidence: false,
            disable_domain_filter: false,
            allowlist_path: None,
        }
    }
}

impl FilterConfig {
    /// Check ranges and lowercase the allowlist in place.
    pub fn validate(&mut self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::config("filter.theta", format!("{} not in [0, 1]", self.theta)));
        }
        if self.language.trim().is_empty() {
            return Err(Error::config("filter.language", "empty language tag"));
        }
        self.domain_allowlist = self
            .domain_allowlist
            .iter()
            .map(|d| d.trim().trim_end_matches('.').to_ascii_lowercase())
            .filter(|d| !d.is_empty())
            .collect();
        if self.domain_stage_enabled() && self.domain_allowlist.is_empty() {
            return Err(Error::config("filter.domain_allowlist", "empty while domain filtering is enabled"));
        }
        Ok(())
    }

    pub fn domain_stage_enabled(&self) -> bool {
        self.strategy != FilterStrategy::SimilarityOnly && !self.disable_domain_filter
    }

    pub fn similarity_stage_enabled(&self) -> bool {
        self.strategy != FilterStrategy::DomainOnly
    }
}

/// Parse an allowlist file: one registrable domain per line, `#` comments.
pub fn parse_allowlist(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| line.to_ascii_lowercase())
        .collect()
}

pub fn load_allowlist(path: &Path) -> std::io::Result<BTreeSet<String>> {
    Ok(parse_allowlist(&std::fs::read_to_string(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStage {
    Ablation,
    Scoring,
    Similarity,
    Domain,
    Language,
    Dedup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub candidate_id: String,
    pub kept: bool,
    /// Stage that removed the candidate; `None` when kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<FilterStage>,
    /// Triggering value or observation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub entries: Vec<TraceEntry>,
}

impl FilterTrace {
    fn keep(&mut self, id: &str, detail: Option<String>) {
        self.entries.push(TraceEntry {
            candidate_id: id.to_string(),
            kept: true,
            stage: None,
            detail,
        });
    }

    fn remove(&mut self, id: &str, stage: FilterStage, detail: String) {
        self.entries.push(TraceEntry {
            candidate_id: id.to_string(),
            kept: false,
            stage: Some(stage),
            detail: Some(detail),
        });
    }

    pub fn kept(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.kept)
    }

    pub fn removed(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| !e.kept)
    }

    pub fn removed_by(&self, stage: FilterStage) -> impl Iterator<Item = &TraceEntry> {
        self.removed().filter(move |e| e.stage == Some(stage))
    }

    pub fn entry(&self, id: &str) -> Option<&TraceEntry> {
        self.entries.iter().find(|e| e.candidate_id == id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Filtered {
    pub kept: Vec<ScoredCandidate>,
    pub trace: FilterTrace,
}

/// Keep candidates whose best present modality score is at least `theta`.
pub fn filter_by_similarity(candidates: &[ScoredCandidate], theta: f64) -> Result<Filtered> {
    let mut out = Filtered::default();
    for c in candidates {
        let best = c.require_scores()?.max_present();
        if best >= theta {
            out.trace.keep(c.id(), None);
            out.kept.push(c.clone());
        } else {
            out.trace
                .remove(c.id(), FilterStage::Similarity, format!("max score {best} < {theta}"));
        }
    }
    Ok(out)
}

/// Keep candidates whose registrable domain is allowlisted.
pub fn filter_by_domain(candidates: &[ScoredCandidate], allowlist: &BTreeSet<String>) -> Result<Filtered> {
    if allowlist.is_empty() {
        return Err(Error::EmptyAllowlist);
    }
    let mut out = Filtered::default();
    for c in candidates {
        if allowlist.contains(&c.candidate.domain) {
            out.trace.keep(c.id(), None);
            out.kept.push(c.clone());
        } else {
            out.trace.remove(
                c.id(),
                FilterStage::Domain,
                format!("{} not allowlisted", c.candidate.domain),
            );
        }
    }
    Ok(out)
}

/// Keep candidates whose text is in `language`. Image-only candidates and
/// candidates whose language cannot be determined are kept.
pub fn filter_by_language(candidates: &[ScoredCandidate], language: &str, detector: &dyn LanguageDetector) -> Filtered {
    let wanted = primary_subtag(language);
    let mut out = Filtered::default();
    for c in candidates {
        let Some(text) = c.candidate.text() else {
            out.trace.keep(c.id(), Some("no text".into()));
            out.kept.push(c.clone());
            continue;
        };
        let (detected, source) = match detector.detect(text) {
            Some(tag) => (Some(tag), "detected"),
            None => (c.candidate.language.as_deref().map(primary_subtag), "declared"),
        };
        match detected {
            Some(tag) if primary_subtag(&tag) != wanted => {
                out.trace
                    .remove(c.id(), FilterStage::Language, format!("{source} language {tag}"));
            }
            Some(_) => {
                out.trace.keep(c.id(), None);
                out.kept.push(c.clone());
            }
            None => {
                out.trace.keep(c.id(), Some("language undetermined".into()));
                out.kept.push(c.clone());
            }
        }
    }
    out
}

/// Lowercase, strip punctuation and symbols, collapse whitespace.
pub fn normalize_title(title: &str) -> String {
    let stripped: String = title
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keep the first candidate of each `(domain, normalized title)` group.
/// Candidates without a title are never treated as duplicates.
pub fn deduplicate(candidates: &[ScoredCandidate]) -> Filtered {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut first_of: Vec<(String, String, String)> = Vec::new();
    let mut out = Filtered::default();
    for c in candidates {
        let Some(title) = c.candidate.title.as_deref() else {
            out.trace.keep(c.id(), None);
            out.kept.push(c.clone());
            continue;
        };
        let key = (c.candidate.domain.clone(), normalize_title(title));
        if seen.insert(key.clone()) {
            first_of.push((key.0, key.1, c.id().to_string()));
            out.trace.keep(c.id(), None);
            out.kept.push(c.clone());
        } else {
            let original = first_of
                .iter()
                .find(|(d, t, _)| *d == key.0 && *t == key.1)
                .map(|(_, _, id)| id.as_str())
                .unwrap_or("?");
            out.trace
                .remove(c.id(), FilterStage::Dedup, format!("duplicate of {original}"));
        }
    }
    out
}

fn drop_origin(candidates: Vec<ScoredCandidate>, origin: Origin, trace: &mut FilterTrace) -> Vec<ScoredCandidate> {
    candidates
        .into_iter()
        .filter(|c| {
            if c.candidate.origin == origin {
                trace.remove(c.id(), FilterStage::Ablation, format!("{origin} evidence dropped"));
                false
            } else {
                true
            }
        })
        .collect()
}

fn absorb(stage: Filtered, trace: &mut FilterTrace) -> Vec<ScoredCandidate> {
    trace.entries.extend(stage.trace.entries.into_iter().filter(|e| !e.kept));
    stage.kept
}

/// Full Filter Module in fixed order: ablation drops, similarity, domain,
/// language, dedup. The trace lists every removal with its stage, then one
/// kept entry per survivor.
pub fn run_filter_module(
    candidates: &[ScoredCandidate],
    config: &FilterConfig,
    detector: &dyn LanguageDetector,
) -> Result<Filtered> {
    let mut trace = FilterTrace::default();
    let mut current = candidates.to_vec();

    if config.drop_text_evidence {
        current = drop_origin(current, Origin::TextSearch, &mut trace);
    }
    if config.drop_image_evidence {
        current = drop_origin(current, Origin::ImageSearch, &mut trace);
    }
    if config.similarity_stage_enabled() {
        current = absorb(filter_by_similarity(&current, config.theta)?, &mut trace);
    }
    if config.domain_stage_enabled() {
        current = absorb(filter_by_domain(&current, &config.domain_allowlist)?, &mut trace);
    }
    let lang = filter_by_language(&current, &config.language, detector);
    let notes: Vec<(String, Option<String>)> = lang
        .trace
        .kept()
        .map(|e| (e.candidate_id.clone(), e.detail.clone()))
        .collect();
    current = absorb(lang, &mut trace);
    if config.dedup_enabled {
        current = absorb(deduplicate(&current), &mut trace);
    }

    for c in &current {
        let note = notes
            .iter()
            .find(|(id, _)| id == c.id())
            .and_then(|(_, d)| d.clone());
        trace.keep(c.id(), note);
    }
    Ok(Filtered { kept: current, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityScores;
    use crate::types::EvidenceCandidate;

    fn cand(id: &str, origin: Origin, domain: &str, title: Option<&str>, snippet: Option<&str>) -> EvidenceCandidate {
        EvidenceCandidate {
            id: id.into(),
            origin,
            source_url: format!("https://{domain}/{id}"),
            domain: domain.into(),
            title: title.map(str::to_string),
            snippet: snippet.map(str::to_string),
            image_ref: None,
            published_at: None,
            language: None,
            raw_meta: Default::default(),
        }
    }

    fn scored(id: &str, t: Option<f64>, v: Option<f64>) -> ScoredCandidate {
        ScoredCandidate::new(
            cand(id, Origin::ImageSearch, "bbc.co.uk", Some(id), Some("Flood waters rose")),
            SimilarityScores::new(t, v),
        )
    }

    struct NoDetect;
    impl LanguageDetector for NoDetect {
        fn detect(&self, _: &str) -> Option<String> {
            None
        }
    }

    #[test]
    fn theta_boundary_is_inclusive() {
        let xs = [scored("a", None, Some(0.70)), scored("b", Some(0.2), Some(0.699))];
        let out = filter_by_similarity(&xs, 0.7).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id(), "a");
        assert_eq!(out.trace.entries.len(), 2);
        assert_eq!(out.trace.entry("b").unwrap().stage, Some(FilterStage::Similarity));
    }

    #[test]
    fn either_modality_passes() {
        let xs = [scored("a", Some(0.9), Some(0.1))];
        assert_eq!(filter_by_similarity(&xs, 0.7).unwrap().kept.len(), 1);
    }

    #[test]
    fn similarity_rejects_unscored_and_handles_empty() {
        let unscored = ScoredCandidate::new(cand("x", Origin::TextSearch, "bbc.co.uk", None, Some("s")), None);
        assert_eq!(
            filter_by_similarity(&[unscored], 0.7).unwrap_err().code(),
            "EUnscoredCandidate"
        );
        let out = filter_by_similarity(&[], 0.7).unwrap();
        assert!(out.kept.is_empty() && out.trace.entries.is_empty());
    }

    #[test]
    fn domain_membership() {
        let allow: BTreeSet<String> = ["bbc.co.uk", "theguardian.com"].iter().map(|s| s.to_string()).collect();
        let xs = [
            ScoredCandidate::new(cand("a", Origin::TextSearch, "bbc.co.uk", None, Some("s")), SimilarityScores::new(Some(1.0), None)),
            ScoredCandidate::new(
                cand("b", Origin::TextSearch, "example-blog.net", None, Some("s")),
                SimilarityScores::new(Some(1.0), None),
            ),
        ];
        let out = filter_by_domain(&xs, &allow).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id(), "a");
        assert_eq!(filter_by_domain(&xs, &BTreeSet::new()).unwrap_err().code(), "EEmptyAllowlist");
    }

    #[test]
    fn language_rules() {
        let d = TrigramDetector;
        let en = ScoredCandidate::new(
            cand("en", Origin::TextSearch, "bbc.co.uk", None, Some("Flood waters rose overnight")),
            SimilarityScores::new(Some(1.0), None),
        );
        let ru = ScoredCandidate::new(
            cand(
                "ru",
                Origin::TextSearch,
                "bbc.co.uk",
                None,
                Some("Наводнение затопило центр города, сотни жителей были вынуждены покинуть свои дома."),
            ),
            SimilarityScores::new(Some(1.0), None),
        );
        let mut img = cand("img", Origin::ImageSearch, "bbc.co.uk", None, None);
        img.image_ref = Some("x.img".into());
        let img = ScoredCandidate::new(img, SimilarityScores::new(None, Some(1.0)));
        let out = filter_by_language(&[en, ru, img], "en", &d);
        let kept: Vec<_> = out.kept.iter().map(|c| c.id()).collect();
        assert_eq!(kept, ["en", "img"]);
        assert_eq!(out.trace.entries.len(), 3);
    }

    #[test]
    fn undetermined_falls_back_to_declared_then_keeps() {
        let mut declared_fr = cand("fr", Origin::TextSearch, "bbc.co.uk", None, Some("x"));
        declared_fr.language = Some("fr-FR".into());
        let xs = [
            ScoredCandidate::new(declared_fr, SimilarityScores::new(Some(1.0), None)),
            ScoredCandidate::new(cand("u", Origin::TextSearch, "bbc.co.uk", None, Some("x")), SimilarityScores::new(Some(1.0), None)),
        ];
        let out = filter_by_language(&xs, "en", &NoDetect);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id(), "u");
        assert_eq!(out.trace.entry("u").unwrap().detail.as_deref(), Some("language undetermined"));
    }

    #[test]
    fn dedup_examples() {
        let mk = |id: &str, domain: &str, title: &str| {
            ScoredCandidate::new(cand(id, Origin::TextSearch, domain, Some(title), Some("s")), SimilarityScores::new(Some(1.0), None))
        };
        let xs = [mk("a", "bbc.co.uk", "Flood Hits X!"), mk("b", "bbc.co.uk", "flood  hits x")];
        let out = deduplicate(&xs);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id(), "a");
        assert_eq!(out.trace.entry("b").unwrap().detail.as_deref(), Some("duplicate of a"));

        let ys = [mk("a", "bbc.co.uk", "Same"), mk("b", "theguardian.com", "Same")];
        assert_eq!(deduplicate(&ys).kept.len(), 2);

        let once = deduplicate(&xs).kept;
        assert_eq!(deduplicate(&once).kept, once);
    }

    #[test]
    fn normalize_title_examples() {
        assert_eq!(normalize_title("  Flood   Hits X! "), "flood hits x");
        assert_eq!(normalize_title("U.S. storm \u{2014} day 2"), "us storm day 2");
    }

    fn mixed() -> Vec<ScoredCandidate> {
        vec![
            // fails similarity
            ScoredCandidate::new(
                cand("t1", Origin::TextSearch, "bbc.co.uk", Some("A"), Some("Flood waters")),
                SimilarityScores::new(Some(0.3), None),
            ),
            // fails domain
            ScoredCandidate::new(
                cand("t2", Origin::TextSearch, "example-blog.net", Some("B"), Some("Flood waters")),
                SimilarityScores::new(Some(0.95), None),
            ),
            // survives
            ScoredCandidate::new(
                cand("v1", Origin::ImageSearch, "theguardian.com", Some("C"), Some("Flood waters")),
                SimilarityScores::new(Some(0.4), Some(0.92)),
            ),
        ]
    }

    #[test]
    fn composition_attributes_each_removal() {
        let out = run_filter_module(&mixed(), &FilterConfig::default(), &NoDetect).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id(), "v1");
        assert_eq!(out.trace.entry("t1").unwrap().stage, Some(FilterStage::Similarity));
        assert_eq!(out.trace.entry("t2").unwrap().stage, Some(FilterStage::Domain));
        assert_eq!(out.trace.entries.len(), 3);
    }

    #[test]
    fn similarity_only_lets_low_reputation_through() {
        let cfg = FilterConfig {
            strategy: FilterStrategy::SimilarityOnly,
            ..Default::default()
        };
        let out = run_filter_module(&mixed(), &cfg, &NoDetect).unwrap();
        let kept: Vec<_> = out.kept.iter().map(|c| c.id()).collect();
        assert_eq!(kept, ["t2", "v1"]);
    }

    #[test]
    fn domain_only_skips_threshold() {
        let cfg = FilterConfig {
            strategy: FilterStrategy::DomainOnly,
            ..Default::default()
        };
        let out = run_filter_module(&mixed(), &cfg, &NoDetect).unwrap();
        let kept: Vec<_> = out.kept.iter().map(|c| c.id()).collect();
        assert_eq!(kept, ["t1", "v1"]);
    }

    #[test]
    fn disabled_domain_filter_keeps_every_domain() {
        let cfg = FilterConfig {
            disable_domain_filter: true,
            theta: 0.0,
            ..Default::default()
        };
        let out = run_filter_module(&mixed(), &cfg, &NoDetect).unwrap();
        assert_eq!(out.kept.len(), 3);
    }

    #[test]
    fn drop_image_evidence_removes_image_origin_first() {
        let cfg = FilterConfig {
            drop_image_evidence: true,
            ..Default::default()
        };
        let out = run_filter_module(&mixed(), &cfg, &NoDetect).unwrap();
        assert!(out.kept.iter().all(|c| c.candidate.origin != Origin::ImageSearch));
        assert_eq!(out.trace.entry("v1").unwrap().stage, Some(FilterStage::Ablation));
    }

    #[test]
    fn allowlist_file_format() {
        let parsed = parse_allowlist("# trusted\nBBC.co.uk\n\n  apnews.com # wire\n");
        assert_eq!(parsed.into_iter().collect::<Vec<_>>(), ["apnews.com", "bbc.co.uk"]);
    }

    #[test]
    fn config_validation() {
        let mut bad = FilterConfig {
            theta: 1.5,
            ..Default::default()
        };
        assert_eq!(bad.validate().unwrap_err().code(), "EConfigInvalid");
        let mut empty = FilterConfig {
            domain_allowlist: BTreeSet::new(),
            ..Default::default()
        };
        assert!(empty.validate().is_err());
        empty.strategy = FilterStrategy::SimilarityOnly;
        assert!(empty.validate().is_ok());
    }
}
