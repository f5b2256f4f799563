//! Versioned prompt templates and the deterministic prompt builders.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{content_digest, ImageResolver};
use crate::similarity::ScoredCandidate;
use crate::types::{collapse_whitespace, ClaimPair};

use super::{Stage1Assessment, Stance};

pub const TEMPLATE_VERSION: &str = "v1";

const STAGE1_SYSTEM: &str = include_str!("../../templates/stage1_system.v1.txt");
const STAGE1_USER: &str = include_str!("../../templates/stage1_user.v1.txt");
const STAGE2_SYSTEM: &str = include_str!("../../templates/stage2_system.v1.txt");
const STAGE2_USER: &str = include_str!("../../templates/stage2_user.v1.txt");
const FORMAT_REMINDER: &str = include_str!("../../templates/format_reminder.v1.txt");

pub(crate) const NO_EVIDENCE: &str = "No external evidence retrieved.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PromptPart {
    Text { content: String },
    /// Reference as given by the claim, plus the digest of the bytes it
    /// resolved to when the prompt was built.
    Image { reference: String, digest: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    pub template_id: String,
    pub template_version: String,
    pub system_text: String,
    pub parts: Vec<PromptPart>,
}

impl PromptDocument {
    /// Canonical bytes of the document; identical inputs give identical bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("prompt documents always serialize")
    }

    pub fn text(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                PromptPart::Text { content } => Some(content.as_str()),
                PromptPart::Image { .. } => None,
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn image_count(&self) -> usize {
        self.parts
            .iter()
            .filter(|p| matches!(p, PromptPart::Image { .. }))
            .count()
    }
}

/// Replace every `{{name}}` with its value. Panics on a placeholder with no
/// value: templates are compiled in, so that is a programming error.
fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").expect("unterminated placeholder in template");
        let name = &after[..end];
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .unwrap_or_else(|| panic!("no value for template placeholder `{name}`"))
            .1;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}

fn fmt_score(score: Option<f64>) -> String {
    score.map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}"))
}

fn field(value: Option<&str>) -> String {
    value.map_or_else(|| "n/a".to_string(), collapse_whitespace)
}

fn candidate_section(position: usize, c: &ScoredCandidate) -> String {
    let ev = &c.candidate;
    let scores = c.scores;
    format!(
        "[candidate {position}]\nid: {}\nurl: {}\ndomain: {}\ntitle: {}\nsnippet: {}\npublished_at: {}\ntext_similarity: {}\nvisual_similarity: {}",
        ev.id,
        ev.source_url,
        ev.domain,
        field(ev.title.as_deref()),
        field(ev.snippet.as_deref()),
        field(ev.published_at.as_deref()),
        fmt_score(scores.and_then(|s| s.text_sim)),
        fmt_score(scores.and_then(|s| s.visual_sim)),
    )
}

/// Stage 1: per-candidate verification of the caption against the ranked
/// evidence, in ranked order.
pub fn build_stage1_prompt(claim: &ClaimPair, candidates: &[ScoredCandidate]) -> PromptDocument {
    let sections = if candidates.is_empty() {
        NO_EVIDENCE.to_string()
    } else {
        candidates
            .iter()
            .enumerate()
            .map(|(i, c)| candidate_section(i + 1, c))
            .collect::<Vec<_>>()
            .join("\n\n")
    };
    let count = candidates.len().to_string();
    let caption = collapse_whitespace(&claim.caption);
    let user = render(
        STAGE1_USER,
        &[
            ("caption", &caption),
            ("candidate_count", &count),
            ("candidates", &sections),
        ],
    );
    PromptDocument {
        template_id: "stage1".into(),
        template_version: TEMPLATE_VERSION.into(),
        system_text: STAGE1_SYSTEM.trim_end().to_string(),
        parts: vec![PromptPart::Text { content: user }],
    }
}

/// Assessment handed to Stage 2 when retrieval produced nothing.
pub fn no_evidence_assessment() -> Stage1Assessment {
    Stage1Assessment {
        per_candidate: Vec::new(),
        summary: NO_EVIDENCE.to_string(),
    }
}

fn stance_lines(stage1: &Stage1Assessment) -> String {
    if stage1.per_candidate.is_empty() {
        return "(no candidates assessed)".to_string();
    }
    stage1
        .per_candidate
        .iter()
        .map(|a| {
            let k = &a.key_elements;
            format!(
                "- {}: {}. {}\n  entities: {} | time: {} | place: {}",
                a.candidate_id,
                a.stance,
                collapse_whitespace(&a.rationale),
                join_or_na(&k.entities),
                join_or_na(&k.time),
                join_or_na(&k.place),
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn join_or_na(items: &[String]) -> String {
    if items.is_empty() {
        "n/a".into()
    } else {
        items.iter().map(|s| collapse_whitespace(s)).collect::<Vec<_>>().join("; ")
    }
}

/// Stage 2: final decision from the Stage 1 outcome plus the news image.
pub fn build_stage2_prompt(
    claim: &ClaimPair,
    stage1: &Stage1Assessment,
    resolver: &ImageResolver,
) -> Result<PromptDocument> {
    let bytes = resolver.load(&claim.image_ref)?;
    let all_irrelevant = stage1
        .per_candidate
        .iter()
        .all(|a| a.stance == Stance::Irrelevant);
    let evidence_instruction = if all_irrelevant {
        "No external evidence bears on this caption, so decide from direct reasoning over the image and the caption alone."
    } else {
        "Where the evidence is inconclusive, fall back on direct reasoning over the image and the caption."
    };
    let caption = collapse_whitespace(&claim.caption);
    let summary = collapse_whitespace(&stage1.summary);
    let stances = stance_lines(stage1);
    let user = render(
        STAGE2_USER,
        &[
            ("caption", &caption),
            ("stage1_summary", &summary),
            ("stage1_stances", &stances),
            ("evidence_instruction", evidence_instruction),
        ],
    );
    Ok(PromptDocument {
        template_id: "stage2".into(),
        template_version: TEMPLATE_VERSION.into(),
        system_text: STAGE2_SYSTEM.trim_end().to_string(),
        parts: vec![
            PromptPart::Image {
                reference: claim.image_ref.clone(),
                digest: content_digest(&bytes),
            },
            PromptPart::Text { content: user },
        ],
    })
}

/// The re-ask prompt: the original document plus a format reminder.
pub fn with_format_reminder(doc: &PromptDocument, tag: &str, error: &str) -> PromptDocument {
    let mut out = doc.clone();
    let reminder = render(FORMAT_REMINDER, &[("error", &collapse_whitespace(error)), ("tag", tag)]);
    out.parts.push(PromptPart::Text {
        content: reminder.trim_end().to_string(),
    });
    out
}
