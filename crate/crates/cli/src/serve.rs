//! Minimal verification endpoint: `POST /verify` and `GET /health`.
//!
//! Request body: `{"caption": str, "image_base64": str}` or
//! `{"caption": str, "image_uri": str}`. Uploaded bytes are stored under the
//! upload directory by content digest and verified from there.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use ooc_verify::evaluation::write_atomic;
use ooc_verify::image::content_digest;
use ooc_verify::pipeline::Pipeline;
use ooc_verify::reasoning::FinalVerdict;
use ooc_verify::types::ClaimPair;
use ooc_verify::Error;

use crate::verify::{trace_id, write_trace};
use crate::{report_error, CommonArgs, Overrides, EXIT_ERROR};

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Write one trace per request here.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    /// Where uploaded images are kept; a temporary directory when omitted.
    #[arg(long)]
    pub upload_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

struct AppState {
    pipeline: Pipeline,
    upload_dir: PathBuf,
    trace_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyResponse {
    #[serde(flatten)]
    verdict: FinalVerdict,
    trace_id: String,
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    field: Option<String>,
    message: String,
}

impl ApiError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "EInvalidInput",
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

impl From<&Error> for ApiError {
    fn from(e: &Error) -> Self {
        let code = e.code();
        let (status, field) = match e {
            Error::InvalidInput { field, .. } => (StatusCode::BAD_REQUEST, Some(field.clone())),
            Error::ImageUnreadable { .. } => (StatusCode::BAD_REQUEST, Some("image".into())),
            Error::ProviderUnavailable { .. } | Error::CacheMiss { .. } => (StatusCode::SERVICE_UNAVAILABLE, None),
            Error::ParseFailure { .. }
            | Error::SchemaViolation { .. }
            | Error::ConfidenceOutOfRange(_)
            | Error::UnknownLabel(_)
            | Error::MalformedResponse(_) => (StatusCode::BAD_GATEWAY, None),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        Self {
            status,
            code,
            field,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(field) = self.field {
            error["field"] = json!(field);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

fn string_field(body: &Value, name: &str) -> Result<Option<String>, ApiError> {
    match body.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ApiError::field(name, "must be a string")),
    }
}

/// Validate the request and turn it into a claim whose image is on disk.
fn claim_from_request(state: &AppState, body: &[u8]) -> Result<(ClaimPair, Vec<u8>), ApiError> {
    let body: Value = serde_json::from_slice(body).map_err(|e| ApiError::field("<body>", format!("invalid JSON: {e}")))?;
    if !body.is_object() {
        return Err(ApiError::field("<body>", "expected a JSON object"));
    }
    let caption = string_field(&body, "caption")?
        .filter(|c| !c.trim().is_empty())
        .ok_or_else(|| ApiError::field("caption", "required and non-empty"))?;
    let encoded = string_field(&body, "image_base64")?;
    let uri = string_field(&body, "image_uri")?;
    let (image_ref, bytes) = match (encoded, uri) {
        (Some(_), Some(_)) => return Err(ApiError::field("image", "give image_base64 or image_uri, not both")),
        (None, None) => return Err(ApiError::field("image", "image_base64 or image_uri is required")),
        (Some(b64), None) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(b64.trim())
                .map_err(|e| ApiError::field("image_base64", format!("invalid base64: {e}")))?;
            if bytes.is_empty() {
                return Err(ApiError::field("image_base64", "empty image"));
            }
            let path = state.upload_dir.join(format!("{}.img", content_digest(&bytes)));
            if !path.exists() {
                write_atomic(&path, &bytes).map_err(|e| ApiError::from(&e))?;
            }
            (path.display().to_string(), bytes)
        }
        (None, Some(uri)) => {
            let bytes = state.pipeline.claim_resolver().load(&uri).map_err(|e| {
                let mut err = ApiError::from(&e);
                err.field = Some("image_uri".into());
                err
            })?;
            (uri, bytes)
        }
    };
    let id = trace_id(&bytes, &caption, state.pipeline.fingerprint());
    Ok((ClaimPair::new(id, image_ref, caption), bytes))
}

async fn verify(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<VerifyResponse>, ApiError> {
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        let (claim, _) = claim_from_request(&worker, &body)?;
        let outcome = worker.pipeline.verify(&claim);
        if let Some(dir) = &worker.trace_dir {
            write_trace(dir, &claim.id, &outcome.trace).map_err(|e| ApiError::from(&e))?;
        }
        let verdict = outcome.result.map_err(|e| ApiError::from(&e))?;
        Ok(Json(VerifyResponse {
            verdict,
            trace_id: claim.id,
        }))
    })
    .await
    .unwrap_or_else(|e| {
        Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "EInternal",
            field: None,
            message: e.to_string(),
        })
    })
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let report = tokio::task::spawn_blocking(move || state.pipeline.health()).await;
    match report {
        Ok(report) => {
            let status = if report.ok { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
            (status, Json(report)).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

pub fn router(pipeline: Pipeline, upload_dir: PathBuf, trace_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState {
        pipeline,
        upload_dir,
        trace_dir,
    });
    Router::new()
        .route("/verify", post(verify))
        .route("/health", get(health))
        .with_state(state)
}

pub fn run(args: &ServeArgs) -> u8 {
    // Blocking HTTP clients are built here, before any async runtime exists.
    let pipeline = match args
        .common
        .load_config(|c| args.overrides.apply(c))
        .and_then(|config| Pipeline::from_config(&config, &args.common.runtime()))
    {
        Ok(p) => p,
        Err(e) => {
            report_error(&e);
            return EXIT_ERROR;
        }
    };
    let scratch = match &args.upload_dir {
        Some(_) => None,
        None => match tempfile::tempdir() {
            Ok(d) => Some(d),
            Err(e) => {
                eprintln!("error: cannot create upload directory: {e}");
                return EXIT_ERROR;
            }
        },
    };
    let upload_dir = args
        .upload_dir
        .clone()
        .unwrap_or_else(|| scratch.as_ref().expect("scratch dir").path().to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&upload_dir) {
        eprintln!("error: cannot create {}: {e}", upload_dir.display());
        return EXIT_ERROR;
    }
    let app = router(pipeline, upload_dir, args.trace_dir.clone());

    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return EXIT_ERROR;
        }
    };
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind).await?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    drop(scratch);
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
