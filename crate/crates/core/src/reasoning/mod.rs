//! Two-stage chain-of-thought verification over a multimodal chat provider.
//!
//! Stage 1 judges each ranked evidence candidate against the caption.
//! Stage 2 combines that assessment with direct reasoning over the news
//! image and returns the final label and a 0-10 confidence.

mod orchestrate;
mod parse;
mod prompt;
mod provider;
pub mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use orchestrate::{run_two_stage, Attempt, ReasoningPolicy, ReasoningTrace, StageTrace, TwoStageOutcome};
pub use parse::{parse_stage1_response, parse_stage2_response, serialize_stage1, serialize_verdict};
pub use prompt::{
    build_stage1_prompt, build_stage2_prompt, no_evidence_assessment, with_format_reminder, PromptDocument, PromptPart,
    TEMPLATE_VERSION,
};
pub use provider::{to_chat_request, ChatPart, ChatProvider, ChatRequest, RestChatProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Supports,
    Refutes,
    Irrelevant,
}

impl Stance {
    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Supports => "supports",
            Stance::Refutes => "refutes",
            Stance::Irrelevant => "irrelevant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supports" => Some(Stance::Supports),
            "refutes" => Some(Stance::Refutes),
            "irrelevant" => Some(Stance::Irrelevant),
            _ => None,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyElements {
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub time: Vec<String>,
    #[serde(default)]
    pub place: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateAssessment {
    pub candidate_id: String,
    pub stance: Stance,
    pub rationale: String,
    pub key_elements: KeyElements,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage1Assessment {
    pub per_candidate: Vec<CandidateAssessment>,
    pub summary: String,
}

impl Stage1Assessment {
    pub fn candidate_ids(&self) -> Vec<String> {
        self.per_candidate.iter().map(|a| a.candidate_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "OOC")]
    Ooc,
    #[serde(rename = "NOOC")]
    Nooc,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ooc => "OOC",
            Label::Nooc => "NOOC",
        }
    }

    pub fn is_ooc(self) -> bool {
        self == Label::Ooc
    }

    pub fn from_ooc(ooc: bool) -> Self {
        if ooc {
            Label::Ooc
        } else {
            Label::Nooc
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub label: Label,
    /// 0 (no confidence) ..= 10 (certain).
    pub confidence: u8,
    pub explanation: String,
    pub evidence_ids: Vec<String>,
}
