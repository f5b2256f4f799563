use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::ImageResolver;
use crate::limiter::CallLimiter;
use crate::similarity::ScoredCandidate;
use crate::types::ClaimPair;

use super::{
    build_stage1_prompt, build_stage2_prompt, no_evidence_assessment, parse_stage1_response, parse_stage2_response,
    to_chat_request, with_format_reminder, ChatProvider, FinalVerdict, PromptDocument, Stage1Assessment,
};

#[derive(Debug, Clone)]
pub struct ReasoningPolicy {
    /// Re-asks per stage after an unparseable response.
    pub max_retries: u32,
    pub limiter: Option<Arc<CallLimiter>>,
}

impl Default for ReasoningPolicy {
    fn default() -> Self {
        Self {
            max_retries: 1,
            limiter: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub with_format_reminder: bool,
    pub raw_response: Option<String>,
    pub error_code: Option<&'static str>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTrace {
    pub prompt: PromptDocument,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReasoningTrace {
    pub stage1_skipped: bool,
    pub stage1: Option<StageTrace>,
    pub stage1_assessment: Option<Stage1Assessment>,
    pub stage2: Option<StageTrace>,
    pub verdict: Option<FinalVerdict>,
    pub retry_count: u32,
    pub provider_calls: u32,
    #[serde(skip)]
    pub provider_time: Duration,
}

#[derive(Debug)]
pub struct TwoStageOutcome {
    pub result: Result<FinalVerdict>,
    pub trace: ReasoningTrace,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::ParseFailure { .. } | Error::SchemaViolation { .. } | Error::ConfidenceOutOfRange(_) | Error::UnknownLabel(_)
    )
}

struct StageRunner<'a> {
    provider: &'a dyn ChatProvider,
    resolver: &'a ImageResolver,
    policy: &'a ReasoningPolicy,
    trace: &'a mut ReasoningTrace,
}

impl StageRunner<'_> {
    fn run<T>(&mut self, doc: PromptDocument, tag: &str, parse: impl Fn(&str) -> Result<T>) -> (Result<T>, StageTrace) {
        let mut stage = StageTrace {
            prompt: doc.clone(),
            attempts: Vec::new(),
        };
        let mut current = doc;
        let mut reminded = false;
        loop {
            let request = match to_chat_request(&current, self.resolver) {
                Ok(r) => r,
                Err(e) => return (Err(e), stage),
            };
            let started = Instant::now();
            let response = {
                let _permit = self.policy.limiter.as_ref().map(|l| l.acquire());
                self.provider.complete(&request)
            };
            self.trace.provider_time += started.elapsed();
            self.trace.provider_calls += 1;

            let raw = match response {
                Ok(raw) => raw,
                Err(e) => {
                    stage.attempts.push(Attempt {
                        with_format_reminder: reminded,
                        raw_response: None,
                        error_code: Some(e.code()),
                        error: Some(e.to_string()),
                    });
                    return (Err(e), stage);
                }
            };
            let parsed = parse(&raw);
            stage.attempts.push(Attempt {
                with_format_reminder: reminded,
                raw_response: Some(raw),
                error_code: parsed.as_ref().err().map(Error::code),
                error: parsed.as_ref().err().map(ToString::to_string),
            });
            match parsed {
                Err(e) if retryable(&e) && (stage.attempts.len() as u32) <= self.policy.max_retries => {
                    self.trace.retry_count += 1;
                    current = with_format_reminder(&stage.prompt, tag, &e.to_string());
                    reminded = true;
                }
                other => return (other, stage),
            }
        }
    }
}

/// Run Stage 1 over the ranked top-k evidence, then Stage 2 over the image
/// and the Stage 1 assessment. Never fabricates a label: every failure is
/// returned as an error alongside the partial trace.
pub fn run_two_stage(
    claim: &ClaimPair,
    ranked: &[ScoredCandidate],
    provider: &dyn ChatProvider,
    resolver: &ImageResolver,
    policy: &ReasoningPolicy,
) -> TwoStageOutcome {
    let mut trace = ReasoningTrace::default();
    let submitted: Vec<String> = ranked.iter().map(|c| c.id().to_string()).collect();

    let stage1 = if ranked.is_empty() {
        trace.stage1_skipped = true;
        no_evidence_assessment()
    } else {
        let doc = build_stage1_prompt(claim, ranked);
        let mut runner = StageRunner {
            provider,
            resolver,
            policy,
            trace: &mut trace,
        };
        let (result, stage) = runner.run(doc, "stage1", |raw| parse_stage1_response(raw, &submitted));
        trace.stage1 = Some(stage);
        match result {
            Ok(a) => a,
            Err(e) => return TwoStageOutcome { result: Err(e), trace },
        }
    };
    trace.stage1_assessment = Some(stage1.clone());

    let doc = match build_stage2_prompt(claim, &stage1, resolver) {
        Ok(doc) => doc,
        Err(e) => return TwoStageOutcome { result: Err(e), trace },
    };
    let mut runner = StageRunner {
        provider,
        resolver,
        policy,
        trace: &mut trace,
    };
    let (result, stage) = runner.run(doc, "verdict", |raw| parse_stage2_response(raw, &submitted));
    trace.stage2 = Some(stage);
    if let Ok(v) = &result {
        trace.verdict = Some(v.clone());
    }
    TwoStageOutcome { result, trace }
}
