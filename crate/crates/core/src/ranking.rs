//! Visual-centric ranking and top-k selection.
//!
//! Candidates are ordered by visual similarity, descending. Walking that
//! order, each band starts at the highest remaining visual score and takes
//! every candidate within `borderline_band` of it; inside a band, textual
//! similarity decides. Candidates without a visual score follow all visually
//! scored ones, ordered by textual similarity. Remaining ties keep input
//! order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::similarity::ScoredCandidate;

pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_BORDERLINE_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankingConfig {
    pub top_k: usize,
    pub borderline_band: f64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            borderline_band: DEFAULT_BORDERLINE_BAND,
        }
    }
}

fn desc_missing_last(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Rank scored candidates. Errors if any candidate is unscored.
pub fn rank_candidates(candidates: &[ScoredCandidate], borderline_band: f64) -> Result<Vec<ScoredCandidate>> {
    let mut keyed = Vec::with_capacity(candidates.len());
    for c in candidates {
        let s = c.require_scores()?;
        keyed.push((s.visual_sim, s.text_sim, c));
    }
    keyed.sort_by(|a, b| desc_missing_last(a.0, b.0));

    let split = keyed.iter().position(|k| k.0.is_none()).unwrap_or(keyed.len());
    let (visual, textual) = keyed.split_at_mut(split);

    let mut start = 0;
    while start < visual.len() {
        let anchor = visual[start].0.expect("visual segment");
        let mut end = start + 1;
        while end < visual.len() && anchor - visual[end].0.expect("visual segment") < borderline_band {
            end += 1;
        }
        // stable: exact (visual, text) ties keep input order
        visual[start..end].sort_by(|a, b| desc_missing_last(a.1, b.1).then_with(|| desc_missing_last(a.0, b.0)));
        start = end;
    }
    textual.sort_by(|a, b| desc_missing_last(a.1, b.1));

    Ok(keyed.into_iter().map(|(_, _, c)| c.clone()).collect())
}

/// First `min(k, n)` candidates.
pub fn select_top_k<T: Clone>(ordered: &[T], k: usize) -> Vec<T> {
    ordered.iter().take(k).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityScores;
    use crate::types::{EvidenceCandidate, Origin};

    fn sc(id: &str, v: Option<f64>, t: Option<f64>) -> ScoredCandidate {
        ScoredCandidate::new(
            EvidenceCandidate {
                id: id.into(),
                origin: Origin::ImageSearch,
                source_url: format!("https://bbc.co.uk/{id}"),
                domain: "bbc.co.uk".into(),
                title: None,
                snippet: Some("s".into()),
                image_ref: None,
                published_at: None,
                language: None,
                raw_meta: Default::default(),
            },
            SimilarityScores::new(t, v),
        )
    }

    fn ids(xs: &[ScoredCandidate]) -> Vec<&str> {
        xs.iter().map(|c| c.id()).collect()
    }

    #[test]
    fn visual_dominates_text() {
        let xs = [sc("a", Some(0.9), Some(0.1)), sc("b", Some(0.8), Some(0.99))];
        assert_eq!(ids(&rank_candidates(&xs, 0.01).unwrap()), ["a", "b"]);
    }

    #[test]
    fn borderline_pair_uses_text() {
        let xs = [sc("a", Some(0.800), Some(0.3)), sc("b", Some(0.805), Some(0.7))];
        assert_eq!(ids(&rank_candidates(&xs, 0.01).unwrap()), ["b", "a"]);
    }

    #[test]
    fn missing_visual_sorts_last_by_text() {
        let xs = [
            sc("t_low", None, Some(0.75)),
            sc("v", Some(0.2), None),
            sc("t_high", None, Some(0.95)),
        ];
        assert_eq!(ids(&rank_candidates(&xs, 0.01).unwrap()), ["v", "t_high", "t_low"]);
    }

    #[test]
    fn empty_and_unscored() {
        assert!(rank_candidates(&[], 0.01).unwrap().is_empty());
        let mut u = sc("u", Some(0.5), None);
        u.scores = None;
        assert_eq!(rank_candidates(&[u], 0.01).unwrap_err().code(), "EUnscoredCandidate");
    }

    #[test]
    fn exact_ties_are_stable() {
        let xs = [sc("a", Some(0.5), Some(0.5)), sc("b", Some(0.5), Some(0.5))];
        assert_eq!(ids(&rank_candidates(&xs, 0.01).unwrap()), ["a", "b"]);
    }

    #[test]
    fn top_k() {
        let xs: Vec<u32> = (0..5).collect();
        assert_eq!(select_top_k(&xs, 3), [0, 1, 2]);
        assert_eq!(select_top_k(&xs[..2], 3), [0, 1]);
    }
}
