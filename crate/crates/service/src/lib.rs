//! HTTP front end for staging dialogs.
//!
//! Dialogs are registered once; each registration compiles a stager for
//! every engine. Sessions then walk a dialog one response at a time.

pub mod journal;
pub mod store;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futamix::ddsl::Step;
use futamix::dinterp::StageOutcome;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

pub use journal::{Event, Journal};
pub use store::{DialogEntry, Engine, ServiceError, Session, Store};

/// Carried by every response body.
pub const SCHEMA: &str = "futamix.v1";

fn body(mut v: Value) -> Value {
    v.as_object_mut().expect("object body").insert("schema".into(), SCHEMA.into());
    v
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadDialog(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownDialog(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionFinished(_) => StatusCode::CONFLICT,
            ServiceError::NotAChoice { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Engine(_) | ServiceError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::BadDialog(_) => "invalid_dialog",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::UnknownDialog(_) => "unknown_dialog",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::SessionFinished(_) => "session_finished",
            ServiceError::NotAChoice { .. } => "not_a_choice",
            ServiceError::Engine(_) => "engine_failure",
            ServiceError::Journal(_) => "journal_failure",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let mut err = json!({ "kind": self.kind(), "message": self.to_string() });
        if let ServiceError::NotAChoice { prompt, choices, .. } = &self {
            err["prompt"] = json!(prompt);
            err["choices"] = json!(choices);
        }
        (self.status(), Json(body(json!({ "error": err })))).into_response()
    }
}

fn bad_json(e: JsonRejection) -> ServiceError {
    ServiceError::BadRequest(e.body_text())
}

pub fn outcome_json(outcome: &StageOutcome) -> Value {
    let datum = outcome.to_datum().to_string();
    match outcome {
        StageOutcome::NeedInput { prompt, text, choices } => {
            json!({ "status": "need_input", "prompt": prompt, "text": text, "choices": choices, "datum": datum })
        }
        StageOutcome::Done { message, echoes } => {
            let echoes: Vec<Value> = echoes.iter().map(|(p, r)| json!({ "prompt": p, "response": r })).collect();
            json!({ "status": "done", "message": message, "echoes": echoes, "datum": datum })
        }
        StageOutcome::Invalid { prompt, response } => {
            json!({ "status": "invalid", "prompt": prompt, "response": response, "datum": datum })
        }
    }
}

pub fn session_json(s: &Session) -> Value {
    let transcript: Vec<Value> = s.transcript.iter().map(|(p, r)| json!({ "prompt": p, "response": r })).collect();
    body(json!({
        "session_id": s.id,
        "dialog_id": s.dialog_id,
        "engine": s.engine.name(),
        "finished": s.outcome.is_terminal(),
        "outcome": outcome_json(&s.outcome),
        "transcript": transcript,
    }))
}

fn count_steps(steps: &[Step]) -> (usize, usize) {
    steps.iter().fold((0, 0), |(p, b), s| match s {
        Step::Prompt { .. } => (p + 1, b),
        Step::Branch { arms, .. } => {
            let (ap, ab) = arms.iter().map(|(_, s)| count_steps(s)).fold((0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
            (p + ap, b + ab + 1)
        }
    })
}

fn dialog_json(d: &DialogEntry) -> Value {
    let prompts: Vec<Value> = d
        .spec
        .prompts()
        .into_iter()
        .map(|(id, text, choices)| json!({ "id": id, "text": text, "choices": choices }))
        .collect();
    let (_, branches) = count_steps(&d.spec.steps);
    json!({
        "dialog_id": d.id,
        "name": d.spec.name,
        "prompts": prompts,
        "branches": branches,
        "engines": Engine::ALL.map(Engine::name),
    })
}

async fn healthz() -> Json<Value> {
    Json(body(json!({ "status": "ok" })))
}

#[derive(Deserialize)]
struct DialogBody {
    source: String,
}

/// Accepts either a JSON `{"source": ...}` body or the raw dialog text.
async fn register_dialog(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    raw: String,
) -> Result<(StatusCode, Json<Value>), ServiceError> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let source = if is_json {
        serde_json::from_str::<DialogBody>(&raw).map_err(|e| ServiceError::BadRequest(e.to_string()))?.source
    } else {
        raw
    };
    let entry = blocking(move || store.register_dialog(&source)).await?;
    Ok((StatusCode::CREATED, Json(body(dialog_json(&entry)))))
}

async fn list_dialogs(State(store): State<Arc<Store>>) -> Json<Value> {
    let dialogs: Vec<Value> = store.dialogs().iter().map(|d| dialog_json(d)).collect();
    Json(body(json!({ "dialogs": dialogs })))
}

async fn get_dialog(State(store): State<Arc<Store>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ServiceError> {
    let d = store.dialog(&id)?;
    let mut v = dialog_json(&d);
    v["source"] = json!(d.source);
    Ok(Json(body(v)))
}

async fn artifacts(State(store): State<Arc<Store>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ServiceError> {
    let d = store.dialog(&id)?;
    let a = &d.artifacts;
    let steps: Vec<Value> = a
        .steps
        .iter()
        .map(|r| json!({ "responses": r.responses, "interp_steps": r.interp, "stager_steps": r.stager }))
        .collect();
    Ok(Json(body(json!({
        "dialog_id": d.id,
        "stager": a.stager,
        "compiler_stager": a.compiled_stager,
        "identical": a.identical,
        "compiler": &*a.compiler,
        "cogen": &*a.cogen,
        "steps": steps,
        "steps_truncated": a.steps_truncated,
    }))))
}

#[derive(Deserialize)]
struct SessionBody {
    dialog_id: String,
    #[serde(default = "default_engine")]
    engine: String,
}

fn default_engine() -> String {
    Engine::Stager.name().into()
}

async fn create_session(
    State(store): State<Arc<Store>>,
    req: Result<Json<SessionBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ServiceError> {
    let Json(req) = req.map_err(bad_json)?;
    let engine: Engine = req.engine.parse()?;
    let s = blocking(move || store.create_session(&req.dialog_id, engine)).await?;
    Ok((StatusCode::CREATED, Json(session_json(&s))))
}

async fn get_session(State(store): State<Arc<Store>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ServiceError> {
    Ok(Json(session_json(&store.session(&id)?)))
}

#[derive(Deserialize)]
struct ResponseBody {
    value: String,
}

async fn respond(
    State(store): State<Arc<Store>>,
    UrlPath(id): UrlPath<String>,
    req: Result<Json<ResponseBody>, JsonRejection>,
) -> Result<Json<Value>, ServiceError> {
    let Json(req) = req.map_err(bad_json)?;
    let s = blocking(move || store.respond(&id, &req.value)).await?;
    Ok(Json(session_json(&s)))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Engine(e.to_string()))?
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/dialogs", post(register_dialog).get(list_dialogs))
        .route("/dialogs/{id}", get(get_dialog))
        .route("/dialogs/{id}/artifacts", get(artifacts))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/responses", post(respond))
        .with_state(store)
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("cannot read fixtures: {0}")]
    Fixtures(std::io::Error),
    #[error("fixture {file}: {source}")]
    Fixture { file: String, source: ServiceError },
    #[error(transparent)]
    Store(#[from] ServiceError),
    #[error("server: {0}")]
    Io(std::io::Error),
}

/// Registers every `*.dlg` file in `dir`, in file-name order. Dialogs with
/// the same name already present (say, from a replayed journal) are skipped.
pub fn preregister(store: &Store, dir: &Path) -> Result<Vec<String>, ServeError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(ServeError::Fixtures)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dlg"))
        .collect();
    files.sort();
    let mut ids = Vec::new();
    for file in files {
        let source = std::fs::read_to_string(&file).map_err(ServeError::Fixtures)?;
        let fixture_err = |source| ServeError::Fixture { file: file.display().to_string(), source };
        let spec = futamix::ddsl::parse_dialog(&source).map_err(|e| fixture_err(e.into()))?;
        if store.dialogs().iter().any(|d| d.spec.name == spec.name) {
            continue;
        }
        ids.push(store.register_dialog(&source).map_err(fixture_err)?.id.clone());
    }
    Ok(ids)
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<Store>, addr: SocketAddr) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(ServeError::Io)?;
    tracing::info!(%local, "listening");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
        .map_err(ServeError::Io)
}
