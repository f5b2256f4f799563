//! Multimodal chat provider boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::RestClient;
use crate::image::ImageResolver;

use super::{PromptDocument, PromptPart};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "content", rename_all = "lowercase")]
pub enum ChatPart {
    Text(String),
    /// `data:` URI carrying the base64-encoded image.
    Image(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub stage_id: String,
    pub system: String,
    pub parts: Vec<ChatPart>,
}

impl ChatRequest {
    pub fn text(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                ChatPart::Text(t) => Some(t.as_str()),
                ChatPart::Image(_) => None,
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub trait ChatProvider: Send + Sync {
    fn id(&self) -> &str;
    /// Raw response text for one request.
    fn complete(&self, request: &ChatRequest) -> Result<String>;
    fn is_remote(&self) -> bool {
        false
    }
    fn probe(&self) -> bool {
        true
    }
}

fn mime_for(bytes: &[u8]) -> &'static str {
    match bytes {
        [0x89, b'P', b'N', b'G', ..] => "image/png",
        [0xFF, 0xD8, 0xFF, ..] => "image/jpeg",
        [b'G', b'I', b'F', b'8', ..] => "image/gif",
        [b'R', b'I', b'F', b'F', _, _, _, _, b'W', b'E', b'B', b'P', ..] => "image/webp",
        _ => "application/octet-stream",
    }
}

/// Materialize a prompt document, embedding image bytes as data URIs.
pub fn to_chat_request(doc: &PromptDocument, resolver: &ImageResolver) -> Result<ChatRequest> {
    use base64::Engine as _;
    let mut parts = Vec::with_capacity(doc.parts.len());
    for part in &doc.parts {
        parts.push(match part {
            PromptPart::Text { content } => ChatPart::Text(content.clone()),
            PromptPart::Image { reference, .. } => {
                let bytes = resolver.load(reference)?;
                let encoded = base64::engine::general_purpose::STANDARD.encode(&bytes);
                ChatPart::Image(format!("data:{};base64,{encoded}", mime_for(&bytes)))
            }
        });
    }
    Ok(ChatRequest {
        stage_id: doc.template_id.clone(),
        system: doc.system_text.clone(),
        parts,
    })
}

#[derive(Deserialize)]
struct RestChatResponse {
    text: String,
}

/// Generic REST chat adapter: `POST ChatRequest` -> `{text}`.
#[derive(Debug, Clone)]
pub struct RestChatProvider {
    id: String,
    client: RestClient,
}

impl RestChatProvider {
    pub fn new(id: impl Into<String>, client: RestClient) -> Self {
        Self { id: id.into(), client }
    }
}

impl ChatProvider for RestChatProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let body = self.client.post_json(request)?;
        let parsed: RestChatResponse = serde_json::from_slice(&body)
            .map_err(|e| Error::MalformedResponse(format!("chat response from `{}`: {e}", self.id)))?;
        Ok(parsed.text)
    }

    fn is_remote(&self) -> bool {
        true
    }

    fn probe(&self) -> bool {
        self.client.probe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::{build_stage2_prompt, no_evidence_assessment};
    use crate::types::ClaimPair;

    #[test]
    fn image_parts_become_data_uris() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.png"), [0x89, b'P', b'N', b'G', 1, 2]).unwrap();
        let resolver = ImageResolver::new(dir.path());
        let claim = ClaimPair::new("c", "a.png", "caption");
        let doc = build_stage2_prompt(&claim, &no_evidence_assessment(), &resolver).unwrap();
        let req = to_chat_request(&doc, &resolver).unwrap();
        assert_eq!(req.stage_id, "stage2");
        match &req.parts[0] {
            ChatPart::Image(uri) => assert_eq!(uri, "data:image/png;base64,iVBORwEC"),
            other => panic!("unexpected {other:?}"),
        }
        let json = serde_json::to_value(&req).unwrap();
        assert_eq!(json["parts"][1]["type"], "text");
    }
}
