//! Parsers for the structured blocks at the end of reasoning responses.
//!
//! A response carries its payload in the last fenced block tagged with the
//! stage name. Failing that, the last ```json block is used, and failing
//! that, the outermost brace-delimited span of the whole text.

use serde_json::{Map, Value};

use crate::error::{Error, Result, Span};

use super::{CandidateAssessment, FinalVerdict, KeyElements, Label, Stage1Assessment, Stance};

const STAGE1: &str = "stage1";
const STAGE2: &str = "stage2";

/// Locate the JSON payload. Returns the payload and its byte offset in `raw`.
fn locate_payload<'a>(raw: &'a str, tag: &str, stage: &'static str) -> Result<(&'a str, usize)> {
    for fence in [format!("```{tag}"), "```json".to_string()] {
        if let Some(found) = last_fenced(raw, &fence) {
            return Ok(found);
        }
    }
    match (raw.find('{'), raw.rfind('}')) {
        (Some(start), Some(end)) if start < end => Ok((&raw[start..=end], start)),
        _ => Err(Error::ParseFailure {
            stage,
            reason: format!("no `{tag}` block or JSON object found"),
            span: Some(Span {
                start: 0,
                end: raw.len(),
            }),
        }),
    }
}

fn last_fenced<'a>(raw: &'a str, fence: &str) -> Option<(&'a str, usize)> {
    let mut search_end = raw.len();
    while let Some(pos) = raw[..search_end].rfind(fence) {
        let after = pos + fence.len();
        // the fence tag must end the token: "```json5" is not "```json"
        let rest = &raw[after..];
        let tag_ends = rest.chars().next().is_none_or(|c| c.is_whitespace());
        if tag_ends {
            let body_start = after + rest.find('\n').map_or(rest.len(), |i| i + 1);
            let body = &raw[body_start..];
            let body_end = body.find("```").unwrap_or(body.len());
            return Some((&body[..body_end], body_start));
        }
        search_end = pos;
    }
    None
}

fn line_col_to_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

fn parse_json(raw: &str, tag: &str, stage: &'static str) -> Result<Map<String, Value>> {
    let (payload, base) = locate_payload(raw, tag, stage)?;
    let value: Value = serde_json::from_str(payload.trim()).map_err(|e| {
        let lead = payload.len() - payload.trim_start().len();
        let at = base + lead + line_col_to_offset(payload.trim(), e.line(), e.column());
        Error::ParseFailure {
            stage,
            reason: format!("invalid JSON: {e}"),
            span: Some(Span {
                start: at.min(raw.len()),
                end: (at + 1).min(raw.len()),
            }),
        }
    })?;
    match value {
        Value::Object(map) => Ok(map),
        other => Err(Error::SchemaViolation {
            stage,
            reason: format!("expected a JSON object, found {}", kind(&other)),
        }),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn schema(stage: &'static str, reason: impl Into<String>) -> Error {
    Error::SchemaViolation {
        stage,
        reason: reason.into(),
    }
}

fn req_str<'a>(obj: &'a Map<String, Value>, key: &str, stage: &'static str) -> Result<&'a str> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(other) => Err(schema(stage, format!("`{key}` must be a string, found {}", kind(other)))),
        None => Err(schema(stage, format!("missing `{key}`"))),
    }
}

fn str_list(v: Option<&Value>, key: &str, stage: &'static str) -> Result<Vec<String>> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(if s.trim().is_empty() { vec![] } else { vec![s.clone()] }),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.clone()),
                other => Err(schema(stage, format!("`{key}` entries must be strings, found {}", kind(other)))),
            })
            .collect(),
        Some(other) => Err(schema(stage, format!("`{key}` must be a list of strings, found {}", kind(other)))),
    }
}

/// Parse a Stage 1 response. Every submitted id must be assessed exactly
/// once and no other id may appear; assessments keep the response order.
pub fn parse_stage1_response(raw: &str, submitted_ids: &[String]) -> Result<Stage1Assessment> {
    let map = parse_json(raw, STAGE1, STAGE1)?;
    let items = match map.get("assessments") {
        Some(Value::Array(items)) => items,
        Some(other) => return Err(schema(STAGE1, format!("`assessments` must be an array, found {}", kind(other)))),
        None => return Err(schema(STAGE1, "missing `assessments`")),
    };
    let mut per_candidate = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| schema(STAGE1, format!("assessment {i} is {}, not an object", kind(item))))?;
        let candidate_id = req_str(obj, "candidate_id", STAGE1)?.trim().to_string();
        if !submitted_ids.contains(&candidate_id) {
            return Err(schema(STAGE1, format!("unknown candidate id `{candidate_id}`")));
        }
        if per_candidate.iter().any(|a: &CandidateAssessment| a.candidate_id == candidate_id) {
            return Err(schema(STAGE1, format!("candidate id `{candidate_id}` assessed twice")));
        }
        let stance_raw = req_str(obj, "stance", STAGE1)?;
        let stance =
            Stance::parse(stance_raw).ok_or_else(|| schema(STAGE1, format!("invalid stance `{stance_raw}`")))?;
        let rationale = req_str(obj, "rationale", STAGE1)?.trim().to_string();
        let key_elements = match obj.get("key_elements") {
            None | Some(Value::Null) => KeyElements::default(),
            Some(Value::Object(k)) => KeyElements {
                entities: str_list(k.get("entities"), "entities", STAGE1)?,
                time: str_list(k.get("time"), "time", STAGE1)?,
                place: str_list(k.get("place"), "place", STAGE1)?,
            },
            Some(other) => return Err(schema(STAGE1, format!("`key_elements` must be an object, found {}", kind(other)))),
        };
        per_candidate.push(CandidateAssessment {
            candidate_id,
            stance,
            rationale,
            key_elements,
        });
    }
    if let Some(missing) = submitted_ids
        .iter()
        .find(|id| !per_candidate.iter().any(|a| &a.candidate_id == *id))
    {
        return Err(schema(STAGE1, format!("no assessment for candidate `{missing}`")));
    }
    let summary = match map.get("summary") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.trim().to_string(),
        Some(other) => return Err(schema(STAGE1, format!("`summary` must be a string, found {}", kind(other)))),
    };
    Ok(Stage1Assessment { per_candidate, summary })
}

fn parse_confidence(v: Option<&Value>) -> Result<u8> {
    let n = match v {
        Some(Value::Number(n)) => n,
        Some(other) => {
            return Err(Error::ParseFailure {
                stage: STAGE2,
                reason: format!("`confidence` must be an integer, found {}", kind(other)),
                span: None,
            })
        }
        None => return Err(schema(STAGE2, "missing `confidence`")),
    };
    let int = if let Some(i) = n.as_i64() {
        i
    } else if n.as_u64().is_some() {
        i64::MAX
    } else if let Some(f) = n.as_f64().filter(|f| f.fract() == 0.0) {
        // saturating cast; anything this large is out of range anyway
        f as i64
    } else {
        return Err(Error::ParseFailure {
            stage: STAGE2,
            reason: format!("`confidence` must be an integer, found {n}"),
            span: None,
        });
    };
    u8::try_from(int)
        .ok()
        .filter(|c| *c <= 10)
        .ok_or(Error::ConfidenceOutOfRange(int))
}

/// Parse a Stage 2 response. Evidence ids must come from `submitted_ids`.
pub fn parse_stage2_response(raw: &str, submitted_ids: &[String]) -> Result<FinalVerdict> {
    let map = parse_json(raw, "verdict", STAGE2)?;
    let label_raw = req_str(&map, "label", STAGE2)?;
    let label = match label_raw.trim().to_ascii_uppercase().as_str() {
        "OOC" => Label::Ooc,
        "NOOC" => Label::Nooc,
        _ => return Err(Error::UnknownLabel(label_raw.to_string())),
    };
    let confidence = parse_confidence(map.get("confidence"))?;
    let explanation = req_str(&map, "explanation", STAGE2)?.trim().to_string();
    if explanation.is_empty() {
        return Err(schema(STAGE2, "`explanation` is empty"));
    }
    let mut evidence_ids: Vec<String> = Vec::new();
    for id in str_list(map.get("evidence"), "evidence", STAGE2)? {
        let id = id.trim().to_string();
        if !submitted_ids.contains(&id) {
            return Err(schema(STAGE2, format!("evidence id `{id}` was not submitted")));
        }
        if !evidence_ids.contains(&id) {
            evidence_ids.push(id);
        }
    }
    Ok(FinalVerdict {
        label,
        confidence,
        explanation,
        evidence_ids,
    })
}

/// Backticks only occur inside JSON strings, so escaping them keeps the
/// payload from closing its own fence.
fn fence_safe(body: &Value) -> String {
    body.to_string().replace('`', "\\u0060")
}

/// A well-formed Stage 1 response carrying `assessment`.
pub fn serialize_stage1(assessment: &Stage1Assessment) -> String {
    let body = serde_json::json!({
        "assessments": assessment.per_candidate.iter().map(|a| serde_json::json!({
            "candidate_id": a.candidate_id,
            "stance": a.stance,
            "rationale": a.rationale,
            "key_elements": a.key_elements,
        })).collect::<Vec<_>>(),
        "summary": assessment.summary,
    });
    format!("```stage1\n{}\n```\n", fence_safe(&body))
}

/// A well-formed Stage 2 response carrying `verdict`.
pub fn serialize_verdict(verdict: &FinalVerdict) -> String {
    let body = serde_json::json!({
        "label": verdict.label,
        "confidence": verdict.confidence,
        "explanation": verdict.explanation,
        "evidence": verdict.evidence_ids,
    });
    format!("```verdict\n{}\n```\n", fence_safe(&body))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stage1_tagged_block_after_prose() {
        let raw = "Step 1 ... {not json}\n```stage1\n{\"assessments\":[{\"candidate_id\":\"v1\",\"stance\":\"Refutes\",\"rationale\":\"same image, 2015\",\"key_elements\":{\"entities\":[\"x\"],\"time\":\"2015\"}},{\"candidate_id\":\"t1\",\"stance\":\"irrelevant\",\"rationale\":\"\"}],\"summary\":\"s\"}\n```\n";
        let a = parse_stage1_response(raw, &ids(&["t1", "v1"])).unwrap();
        assert_eq!(a.candidate_ids(), ["v1", "t1"]);
        assert_eq!(a.per_candidate[0].stance, Stance::Refutes);
        assert_eq!(a.per_candidate[0].key_elements.time, ["2015"]);
    }

    #[test]
    fn stage1_schema_checks() {
        let one = |id: &str, stance: &str| {
            format!("```stage1\n{{\"assessments\":[{{\"candidate_id\":\"{id}\",\"stance\":\"{stance}\",\"rationale\":\"r\"}}]}}\n```")
        };
        let sub = ids(&["t1"]);
        assert_eq!(parse_stage1_response(&one("t1", "maybe"), &sub).unwrap_err().code(), "ESchemaViolation");
        assert_eq!(parse_stage1_response(&one("t9", "supports"), &sub).unwrap_err().code(), "ESchemaViolation");
        assert_eq!(parse_stage1_response(&one("t1", "supports"), &ids(&["t1", "t2"])).unwrap_err().code(), "ESchemaViolation");
        assert!(parse_stage1_response(&one("t1", "supports"), &sub).is_ok());
    }

    #[test]
    fn stage1_empty_submission() {
        let a = parse_stage1_response("```stage1\n{\"assessments\":[],\"summary\":\"none\"}\n```", &[]).unwrap();
        assert!(a.per_candidate.is_empty());
    }

    #[test]
    fn stage2_spec_examples() {
        let v = parse_stage2_response(
            "```verdict\n{\"label\":\"OOC\",\"confidence\":8,\"explanation\":\"x\",\"evidence\":[\"t1\"]}\n```",
            &ids(&["t1"]),
        )
        .unwrap();
        assert_eq!(v.label, Label::Ooc);
        assert_eq!(v.confidence, 8);
        assert_eq!(v.evidence_ids, ["t1"]);

        let e = parse_stage2_response("{\"label\":\"OOC\",\"confidence\":14,\"explanation\":\"x\"}", &[]).unwrap_err();
        assert!(matches!(e, Error::ConfidenceOutOfRange(14)));

        let e = parse_stage2_response("The image looks fine to me.", &[]).unwrap_err();
        assert_eq!(e.code(), "EParseFailure");
    }

    #[test]
    fn stage2_confidence_forms() {
        let with = |c: &str| format!("{{\"label\":\"NOOC\",\"confidence\":{c},\"explanation\":\"x\"}}");
        assert_eq!(parse_stage2_response(&with("8.0"), &[]).unwrap().confidence, 8);
        assert_eq!(parse_stage2_response(&with("0"), &[]).unwrap().confidence, 0);
        assert_eq!(parse_stage2_response(&with("10"), &[]).unwrap().confidence, 10);
        assert_eq!(parse_stage2_response(&with("7.5"), &[]).unwrap_err().code(), "EParseFailure");
        assert_eq!(parse_stage2_response(&with("\"8\""), &[]).unwrap_err().code(), "EParseFailure");
        assert_eq!(parse_stage2_response(&with("-1"), &[]).unwrap_err().code(), "EConfidenceOutOfRange");
        assert_eq!(
            parse_stage2_response(&with("99999999999999999999"), &[]).unwrap_err().code(),
            "EConfidenceOutOfRange"
        );
    }

    #[test]
    fn stage2_label_and_evidence() {
        let raw = "{\"label\":\"maybe\",\"confidence\":3,\"explanation\":\"x\"}";
        assert!(matches!(parse_stage2_response(raw, &[]).unwrap_err(), Error::UnknownLabel(l) if l == "maybe"));
        let raw = "{\"label\":\"nooc\",\"confidence\":3,\"explanation\":\"x\",\"evidence\":[\"v7\"]}";
        assert_eq!(parse_stage2_response(raw, &ids(&["v1"])).unwrap_err().code(), "ESchemaViolation");
    }

    #[test]
    fn invalid_json_reports_span_inside_block() {
        let raw = "prose\n```verdict\n{\"label\": OOC}\n```";
        match parse_stage2_response(raw, &[]).unwrap_err() {
            Error::ParseFailure { span: Some(s), .. } => {
                assert!(s.start >= raw.find('{').unwrap() && s.end <= raw.len());
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn last_tagged_block_wins() {
        let raw = "```verdict\n{\"label\":\"OOC\",\"confidence\":1,\"explanation\":\"draft\"}\n```\nrevised:\n```verdict\n{\"label\":\"NOOC\",\"confidence\":6,\"explanation\":\"final\"}\n```";
        let v = parse_stage2_response(raw, &[]).unwrap();
        assert_eq!((v.label, v.confidence), (Label::Nooc, 6));
    }

    #[test]
    fn round_trip() {
        let v = FinalVerdict {
            label: Label::Ooc,
            confidence: 9,
            explanation: "Same photo, 2015 event.".into(),
            evidence_ids: ids(&["v1", "t2"]),
        };
        assert_eq!(parse_stage2_response(&serialize_verdict(&v), &ids(&["t2", "v1"])).unwrap(), v);
    }
}
