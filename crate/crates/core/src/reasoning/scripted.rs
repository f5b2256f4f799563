//! Offline chat providers for tests, fixtures and benchmarks.
//!
//! [`StanceBook`] answers from a table of per-source stances keyed by
//! evidence URL, so its verdict depends on exactly which evidence reached
//! the reasoner. [`ScriptedChat`] replays a fixed queue of responses.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    serialize_stage1, serialize_verdict, CandidateAssessment, ChatProvider, ChatRequest, FinalVerdict, KeyElements,
    Label, Stage1Assessment, Stance,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookedStance {
    pub stance: Stance,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectJudgement {
    pub label: Label,
    pub confidence: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StanceBook {
    pub default_label: Label,
    pub default_confidence: u8,
    /// Confidence reported when an evidence stance decides the verdict.
    #[serde(default = "default_decisive_confidence")]
    pub decisive_confidence: u8,
    /// Evidence URL -> stance toward any caption it is shown with.
    #[serde(default)]
    pub stances: BTreeMap<String, BookedStance>,
    /// Caption -> verdict reached from the image and caption alone, used
    /// when no evidence is decisive.
    #[serde(default)]
    pub direct: BTreeMap<String, DirectJudgement>,
}

fn default_decisive_confidence() -> u8 {
    8
}

impl StanceBook {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::config("reasoning.stance_book", format!("{}: {e}", path.display())))?;
        let book: Self = serde_json::from_slice(&bytes)
            .map_err(|e| Error::config("reasoning.stance_book", format!("{}: {e}", path.display())))?;
        if book.default_confidence > 10 || book.decisive_confidence > 10 || book.direct.values().any(|d| d.confidence > 10) {
            return Err(Error::config("reasoning.stance_book", "confidence values must be in 0..=10"));
        }
        Ok(book)
    }

    fn stage1(&self, prompt: &str) -> String {
        let mut per_candidate = Vec::new();
        let mut pending_id: Option<&str> = None;
        for line in prompt.lines() {
            if let Some(id) = line.strip_prefix("id: ") {
                pending_id = Some(id.trim());
            } else if let (Some(id), Some(url)) = (pending_id, line.strip_prefix("url: ")) {
                let booked = self.stances.get(url.trim());
                per_candidate.push(CandidateAssessment {
                    candidate_id: id.to_string(),
                    stance: booked.map_or(Stance::Irrelevant, |b| b.stance),
                    rationale: booked
                        .map(|b| b.rationale.clone())
                        .filter(|r| !r.is_empty())
                        .unwrap_or_else(|| "No bearing on the caption.".into()),
                    key_elements: KeyElements::default(),
                });
                pending_id = None;
            }
        }
        let decisive = per_candidate.iter().filter(|a| a.stance != Stance::Irrelevant).count();
        let summary = format!("{decisive} of {} candidates bear on the caption.", per_candidate.len());
        format!(
            "Reviewed each candidate against the caption.\n\n{}",
            serialize_stage1(&Stage1Assessment { per_candidate, summary })
        )
    }

    fn stage2(&self, prompt: &str) -> String {
        let caption = between(prompt, "<caption>\n", "\n</caption>").unwrap_or_default();
        let decisive = prompt.lines().find_map(|line| {
            let rest = line.strip_prefix("- ")?;
            let (id, rest) = rest.split_once(": ")?;
            let (stance, rationale) = rest.split_once('.')?;
            match Stance::parse(stance)? {
                Stance::Irrelevant => None,
                s => Some((id.to_string(), s, rationale.trim().to_string())),
            }
        });
        let verdict = match decisive {
            Some((id, stance, rationale)) => FinalVerdict {
                label: Label::from_ooc(stance == Stance::Refutes),
                confidence: self.decisive_confidence,
                explanation: format!("Candidate {id} {stance} the caption: {rationale}"),
                evidence_ids: vec![id],
            },
            None => {
                let direct = self.direct.get(caption).cloned().unwrap_or(DirectJudgement {
                    label: self.default_label,
                    confidence: self.default_confidence,
                });
                FinalVerdict {
                    label: direct.label,
                    confidence: direct.confidence,
                    explanation: "No decisive evidence; judged from the image and caption alone.".into(),
                    evidence_ids: Vec::new(),
                }
            }
        };
        format!("Compared the image with the caption.\n\n{}", serialize_verdict(&verdict))
    }
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(&text[start..end])
}

impl ChatProvider for StanceBook {
    fn id(&self) -> &str {
        "stance-book"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let text = request.text();
        match request.stage_id.as_str() {
            "stage1" => Ok(self.stage1(&text)),
            "stage2" => Ok(self.stage2(&text)),
            other => Err(Error::MalformedResponse(format!("unknown stage `{other}`"))),
        }
    }
}

/// Replays queued responses in order; `None` entries and an exhausted queue
/// behave as an unavailable provider. Every request is recorded.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    queue: Mutex<VecDeque<Option<String>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChat {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = Option<S>>) -> Self {
        Self {
            queue: Mutex::new(responses.into_iter().map(|r| r.map(Into::into)).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl ChatProvider for ScriptedChat {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        self.seen.lock().unwrap().push(request.clone());
        self.queue
            .lock()
            .unwrap()
            .pop_front()
            .flatten()
            .ok_or_else(|| Error::unavailable("scripted", "no scripted response"))
    }
}
