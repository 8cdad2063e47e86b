//! JSON-over-HTTP service for interactive sense annotation. Every route lives
//! under `/api`; errors are `{code, message, detail}` objects.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use senseloom::annotate::{
    now_utc_seconds, AnnotateError, ErrorClass, Project, ProjectHandle, Provenance,
    RecomputeParams, SenseAnnotation, SenseDef, UnassignOutcome, Workspace,
};
use senseloom::corpus::{LemmaSpec, SentenceRecord};

pub const DEFAULT_MIN_PER_SENSE: usize = 30;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "validation",
            message: message.into(),
            detail: Value::Null,
        }
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        let status = match e.class() {
            ErrorClass::BadRequest => StatusCode::BAD_REQUEST,
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let detail = match &e {
            AnnotateError::UnknownSense { lemma, sense_id } => {
                json!({ "lemma": lemma, "sense_id": sense_id })
            }
            AnnotateError::CorruptLog { line, .. } => json!({ "line": line }),
            AnnotateError::UnknownProject(id)
            | AnnotateError::UnknownLemma(id)
            | AnnotateError::UnknownSentence(id)
            | AnnotateError::ProjectionMissing(id) => json!({ "id": id }),
            _ => Value::Null,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))
}

/// Opened projects stay cached; each has a single writer at a time.
#[derive(Clone)]
pub struct AppState {
    workspace: Arc<Workspace>,
    projects: Arc<Mutex<HashMap<String, Arc<RwLock<ProjectHandle>>>>>,
}

impl AppState {
    pub fn new(workspace: Workspace) -> Self {
        AppState {
            workspace: Arc::new(workspace),
            projects: Arc::default(),
        }
    }

    fn project(&self, id: &str) -> ApiResult<Arc<RwLock<ProjectHandle>>> {
        let mut cache = self.projects.lock().unwrap_or_else(PoisonError::into_inner);
        if let Some(h) = cache.get(id) {
            return Ok(h.clone());
        }
        let handle = Arc::new(RwLock::new(self.workspace.open(id)?));
        cache.insert(id.to_string(), handle.clone());
        Ok(handle)
    }
}

fn read<T>(lock: &RwLock<T>) -> std::sync::RwLockReadGuard<'_, T> {
    lock.read().unwrap_or_else(PoisonError::into_inner)
}

fn write<T>(lock: &RwLock<T>) -> std::sync::RwLockWriteGuard<'_, T> {
    lock.write().unwrap_or_else(PoisonError::into_inner)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/projects", get(list_projects).post(create_project))
        .route("/api/projects/{p}/lemmas", get(list_lemmas))
        .route("/api/projects/{p}/lemmas/{l}/senses", post(add_sense))
        .route("/api/projects/{p}/lemmas/{l}/view", get(view))
        .route("/api/projects/{p}/lemmas/{l}/recompute", post(recompute))
        .route("/api/projects/{p}/annotations", post(assign))
        .route(
            "/api/projects/{p}/annotations/{sentence_id}/{lemma}/{annotator}",
            delete(unassign),
        )
        .route("/api/projects/{p}/export", get(export))
        .fallback(|| async {
            ApiError {
                status: StatusCode::NOT_FOUND,
                code: "not_found",
                message: "no such route".into(),
                detail: Value::Null,
            }
        })
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, workspace: Workspace) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(workspace))).await
}

#[derive(Serialize)]
struct ProjectSummary {
    id: String,
    lang: String,
    lemmas: usize,
    revision: u64,
}

async fn list_projects(State(st): State<AppState>) -> ApiResult<Json<Value>> {
    let mut out = Vec::new();
    for id in st.workspace.list_projects()? {
        let handle = st.project(&id)?;
        let h = read(&handle);
        let p = h.store().project();
        out.push(ProjectSummary {
            id: p.id.clone(),
            lang: p.lang.clone(),
            lemmas: p.lemmas.len(),
            revision: h.store().revision(),
        });
    }
    Ok(Json(json!({ "projects": out })))
}

#[derive(Deserialize)]
struct CreateProject {
    #[serde(flatten)]
    project: Project,
    #[serde(default)]
    sentences: Vec<SentenceRecord>,
}

async fn create_project(
    State(st): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateProject = parse_body(&body)?;
    let id = req.project.id.clone();
    let handle = st.workspace.create_project(req.project, req.sentences)?;
    let sentences = handle.store().sentence_count();
    st.projects
        .lock()
        .unwrap_or_else(PoisonError::into_inner)
        .insert(id.clone(), Arc::new(RwLock::new(handle)));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id, "sentences": sentences })),
    ))
}

#[derive(Serialize)]
struct LemmaSummary {
    #[serde(flatten)]
    spec: LemmaSpec,
    senses: Vec<SenseDef>,
    sentences: usize,
    labeled: usize,
    has_embeddings: bool,
    has_projection: bool,
}

async fn list_lemmas(State(st): State<AppState>, Path(p): Path<String>) -> ApiResult<Json<Value>> {
    let handle = st.project(&p)?;
    let h = read(&handle);
    let store = h.store();
    let mut out = Vec::new();
    for spec in &store.project().lemmas {
        let labeled: std::collections::BTreeSet<&str> = store
            .current_annotations()
            .filter(|(a, _)| a.lemma == spec.lemma)
            .map(|(a, _)| a.sentence_id.as_str())
            .collect();
        out.push(LemmaSummary {
            spec: spec.clone(),
            senses: store.senses(&spec.lemma).to_vec(),
            sentences: store.sentences_for(&spec.lemma).count(),
            labeled: labeled.len(),
            has_embeddings: h.embedding_path(&spec.lemma).is_file(),
            has_projection: h.projection_path(&spec.lemma).is_file(),
        });
    }
    Ok(Json(json!({ "lemmas": out })))
}

async fn add_sense(
    State(st): State<AppState>,
    Path((p, l)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let sense: SenseDef = parse_body(&body)?;
    let handle = st.project(&p)?;
    let revision = write(&handle).add_sense(&l, sense.clone())?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "revision": revision, "sense": sense })),
    ))
}

async fn view(
    State(st): State<AppState>,
    Path((p, l)): Path<(String, String)>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let handle = st.project(&p)?;
    let h = read(&handle);
    if !h.store().project().has_lemma(&l) {
        return Err(AnnotateError::UnknownLemma(l).into());
    }
    let v = h.view(&l, q.get("annotator").map(String::as_str))?;
    let mut body = serde_json::to_value(v).expect("view serializes");
    body["revision"] = json!(h.store().revision());
    Ok(Json(body))
}

async fn recompute(
    State(st): State<AppState>,
    Path((p, l)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let params: RecomputeParams = if body.is_empty() {
        RecomputeParams::default()
    } else {
        parse_body(&body)?
    };
    let handle = st.project(&p)?;
    let export = tokio::task::spawn_blocking(move || write(&handle).recompute(&l, &params))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
            detail: Value::Null,
        })??;
    Ok(Json(
        serde_json::to_value(export).expect("projection serializes"),
    ))
}

#[derive(Deserialize)]
struct AssignRequest {
    sentence_id: String,
    lemma: String,
    sense_id: String,
    annotator: String,
    #[serde(default = "manual")]
    provenance: Provenance,
}

fn manual() -> Provenance {
    Provenance::Manual
}

async fn assign(
    State(st): State<AppState>,
    Path(p): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: AssignRequest = parse_body(&body)?;
    let handle = st.project(&p)?;
    let outcome = write(&handle).assign(SenseAnnotation {
        sentence_id: req.sentence_id,
        lemma: req.lemma,
        sense_id: req.sense_id,
        annotator: req.annotator,
        provenance: req.provenance,
        timestamp: now_utc_seconds(),
    })?;
    let status = if outcome.created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((
        status,
        Json(serde_json::to_value(outcome).expect("outcome serializes")),
    ))
}

async fn unassign(
    State(st): State<AppState>,
    Path((p, sentence_id, lemma, annotator)): Path<(String, String, String, String)>,
) -> ApiResult<Json<UnassignOutcome>> {
    let handle = st.project(&p)?;
    let outcome = write(&handle).unassign(&sentence_id, &lemma, &annotator)?;
    Ok(Json(outcome))
}

async fn export(
    State(st): State<AppState>,
    Path(p): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let min_per_sense = match q.get("min_per_sense") {
        Some(v) => v.parse::<usize>().map_err(|_| {
            ApiError::bad_request(format!(
                "min_per_sense must be a non-negative integer, got {v:?}"
            ))
        })?,
        None => DEFAULT_MIN_PER_SENSE,
    };
    let handle = st.project(&p)?;
    let rows = read(&handle).export_gold(min_per_sense, q.get("adjudicator").map(String::as_str));
    let mut body = String::new();
    for r in &rows {
        body.push_str(&serde_json::to_string(r).expect("gold record serializes"));
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
