//! Modality-specific embeddings and cosine similarity scoring of evidence
//! candidates against the claim.

mod embed;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use embed::{
    embed_image, embed_text, FixtureImageEmbedder, FixtureTextEmbedder, HashingTextEmbedder, ImageEmbedder,
    RestEmbedder, TextEmbedder, VectorTable,
};

use crate::error::{Error, Result};
use crate::image::ImageResolver;
use crate::types::EvidenceCandidate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Non-empty, all entries finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::MalformedResponse("empty embedding".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedResponse("non-finite embedding entry".into()));
        }
        Ok(Self { values })
    }

    /// Boundary check for provider output: additionally rejects all-zero vectors.
    pub fn from_provider(values: Vec<f64>) -> Result<Self> {
        let v = Self::new(values)?;
        if v.is_zero() {
            return Err(Error::MalformedResponse("all-zero embedding".into()));
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in u.values.iter().zip(&v.values) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Per-candidate similarity to the claim. `final` is the ranking key: the
/// visual score when present, otherwise the textual one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub text_sim: Option<f64>,
    pub visual_sim: Option<f64>,
    #[serde(rename = "final")]
    pub final_score: f64,
}

impl SimilarityScores {
    /// `None` when neither modality produced a score.
    pub fn new(text_sim: Option<f64>, visual_sim: Option<f64>) -> Option<Self> {
        let clamp = |x: f64| x.clamp(-1.0, 1.0);
        let text_sim = text_sim.filter(|x| x.is_finite()).map(clamp);
        let visual_sim = visual_sim.filter(|x| x.is_finite()).map(clamp);
        let final_score = visual_sim.or(text_sim)?;
        Some(Self {
            text_sim,
            visual_sim,
            final_score,
        })
    }

    /// Largest present modality score.
    pub fn max_present(&self) -> f64 {
        match (self.text_sim, self.visual_sim) {
            (Some(t), Some(v)) => t.max(v),
            (Some(t), None) => t,
            (None, Some(v)) => v,
            (None, None) => unreachable!("constructor guarantees one modality"),
        }
    }
}

/// A candidate together with its scores; `scores` is `None` until scored
/// or when no modality could be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: EvidenceCandidate,
    pub scores: Option<SimilarityScores>,
}

impl ScoredCandidate {
    pub fn new(candidate: EvidenceCandidate, scores: Option<SimilarityScores>) -> Self {
        Self { candidate, scores }
    }

    pub fn id(&self) -> &str {
        &self.candidate.id
    }

    pub fn require_scores(&self) -> Result<SimilarityScores> {
        self.scores.ok_or_else(|| Error::UnscoredCandidate(self.candidate.id.clone()))
    }
}

/// Claim-side embeddings, computed once per claim.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimEmbeddings {
    pub text: EmbeddingVector,
    pub image: Option<EmbeddingVector>,
}

/// Providers needed to score candidates.
pub struct Scorer<'a> {
    pub text: &'a dyn TextEmbedder,
    pub image: &'a dyn ImageEmbedder,
    pub resolver: &'a ImageResolver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreOutcome {
    pub scores: Option<SimilarityScores>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub provider_time: Duration,
}

/// Score one candidate. A modality that fails becomes an absent score plus
/// a warning; it never aborts the pipeline.
pub fn score_candidate(claim: &ClaimEmbeddings, candidate: &EvidenceCandidate, scorer: &Scorer<'_>) -> ScoreOutcome {
    let mut warnings = Vec::new();
    let mut provider_time = Duration::ZERO;

    let text_sim = candidate.text().and_then(|text| {
        let started = Instant::now();
        let emb = embed_text(text, scorer.text);
        provider_time += started.elapsed();
        match emb.and_then(|e| cosine_similarity(&claim.text, &e)) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("{}: text score unavailable: {e}", candidate.id));
                None
            }
        }
    });

    let visual_sim = match (&claim.image, candidate.image_ref.as_deref()) {
        (Some(claim_img), Some(reference)) => {
            let scored = scorer.resolver.load(reference).and_then(|bytes| {
                let started = Instant::now();
                let emb = embed_image(&bytes, scorer.image);
                provider_time += started.elapsed();
                cosine_similarity(claim_img, &emb?)
            });
            match scored {
                Ok(s) => Some(s),
                Err(e) => {
                    warnings.push(format!("{}: visual score unavailable: {e}", candidate.id));
                    None
                }
            }
        }
        _ => None,
    };

    let scores = SimilarityScores::new(text_sim, visual_sim);
    if scores.is_none() {
        warnings.push(format!("{}: no modality could be scored", candidate.id));
    }
    ScoreOutcome {
        scores,
        warnings,
        provider_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::content_digest;
    use crate::types::Origin;

    fn ev(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&ev(&[1.0, 0.0]), &ev(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&ev(&[1.0, 0.0]), &ev(&[0.0, 1.0])).unwrap(), 0.0);
        // 32 / (sqrt(14) * sqrt(77))
        let oracle = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let got = cosine_similarity(&ev(&[1.0, 2.0, 3.0]), &ev(&[4.0, 5.0, 6.0])).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.974632).abs() < 1e-6);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_similarity(&ev(&[1.0]), &ev(&[1.0, 0.0])).unwrap_err().code(),
            "EDimensionMismatch"
        );
        assert_eq!(
            cosine_similarity(&ev(&[0.0, 0.0]), &ev(&[1.0, 0.0])).unwrap_err().code(),
            "EZeroVector"
        );
    }

    #[test]
    fn scores_final_is_visual_when_present() {
        let s = SimilarityScores::new(Some(0.5), Some(0.9)).unwrap();
        assert_eq!(s.final_score, 0.9);
        let s = SimilarityScores::new(Some(0.5), None).unwrap();
        assert_eq!(s.final_score, 0.5);
        assert!(SimilarityScores::new(None, None).is_none());
    }

    struct Fixture {
        dir: tempfile::TempDir,
        text: FixtureTextEmbedder,
        image: FixtureImageEmbedder,
        resolver: ImageResolver,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cand.img"), b"candidate-image").unwrap();
        let mut text = VectorTable { dim: 2, ..Default::default() };
        text.vectors.insert("claim caption".into(), vec![1.0, 0.0]);
        // cos = 0.5 against (1, 0)
        text.vectors.insert("evidence snippet".into(), vec![0.5, 0.75f64.sqrt()]);
        let mut image = VectorTable { dim: 2, ..Default::default() };
        // cos = 0.9 against (1, 0)
        image
            .vectors
            .insert(content_digest(b"candidate-image"), vec![0.9, 0.19f64.sqrt()]);
        let resolver = ImageResolver::new(dir.path());
        Fixture {
            dir,
            text: FixtureTextEmbedder::new("t", text),
            image: FixtureImageEmbedder::new("i", image),
            resolver,
        }
    }

    fn candidate(snippet: Option<&str>, image: Option<&str>) -> EvidenceCandidate {
        EvidenceCandidate {
            id: "v1".into(),
            origin: Origin::ImageSearch,
            source_url: "https://bbc.co.uk/x".into(),
            domain: "bbc.co.uk".into(),
            title: None,
            snippet: snippet.map(str::to_string),
            image_ref: image.map(str::to_string),
            published_at: None,
            language: None,
            raw_meta: Default::default(),
        }
    }

    #[test]
    fn score_both_modalities() {
        let f = fixture();
        let scorer = Scorer {
            text: &f.text,
            image: &f.image,
            resolver: &f.resolver,
        };
        let claim = ClaimEmbeddings {
            text: ev(&[1.0, 0.0]),
            image: Some(ev(&[1.0, 0.0])),
        };
        let out = score_candidate(&claim, &candidate(Some("evidence snippet"), Some("cand.img")), &scorer);
        let s = out.scores.unwrap();
        assert!((s.text_sim.unwrap() - 0.5).abs() < 1e-12);
        assert!((s.visual_sim.unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(s.final_score, s.visual_sim.unwrap());
        assert!(out.warnings.is_empty());
        drop(f.dir);
    }

    #[test]
    fn snippet_only_and_identical_text() {
        let f = fixture();
        let scorer = Scorer {
            text: &f.text,
            image: &f.image,
            resolver: &f.resolver,
        };
        let claim = ClaimEmbeddings {
            text: embed_text("claim caption", &f.text).unwrap(),
            image: Some(ev(&[1.0, 0.0])),
        };
        let s = score_candidate(&claim, &candidate(Some("claim caption"), None), &scorer)
            .scores
            .unwrap();
        assert_eq!(s.text_sim, Some(1.0));
        assert_eq!(s.visual_sim, None);
    }

    #[test]
    fn unresolvable_image_is_a_warning() {
        let f = fixture();
        let scorer = Scorer {
            text: &f.text,
            image: &f.image,
            resolver: &f.resolver,
        };
        let claim = ClaimEmbeddings {
            text: ev(&[1.0, 0.0]),
            image: Some(ev(&[1.0, 0.0])),
        };
        let out = score_candidate(&claim, &candidate(Some("evidence snippet"), Some("missing.img")), &scorer);
        assert!(out.scores.unwrap().visual_sim.is_none());
        assert_eq!(out.warnings.len(), 1);

        let out = score_candidate(&claim, &candidate(None, Some("missing.img")), &scorer);
        assert!(out.scores.is_none());
    }
}
