//! HTTP API of the listening study, consumed by the browser UI.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | GET | `/studies` | ids |
//! | POST | `/studies` | `StudyDefinition` -> study view (201) |
//! | GET | `/studies/{id}` | study view |
//! | GET | `/studies/{id}/metadata` | title, contenders, rating guide |
//! | POST | `/studies/{id}/next` | pending `Comparison`, or 204 when complete |
//! | GET | `/studies/{id}/pending` | pending comparisons |
//! | GET | `/studies/{id}/ranking` | contenders, best first |
//! | POST | `/studies/{id}/mos` | `MosRating` -> aggregate |
//! | GET | `/studies/{id}/mos` | aggregate |
//! | GET | `/comparisons/{cid}` | `Comparison` |
//! | GET | `/comparisons/{cid}/audio/{slot}` | WAV bytes for `input`, `a` or `b` |
//! | POST | `/comparisons/{cid}/verdict` | `{verdict, idempotency_key?}` -> comparison + ranking |
//!
//! Errors reply `{"error": ...}` with 404 (unknown id), 409 (duplicate
//! verdict or study), 422 (invalid input) or 500.

use std::net::SocketAddr;
use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use editforge_core::elo::{
    Comparison, Contender, ContenderSpec, MosRating, StudyDefinition, StudyStore, Verdict, RATING_GUIDE,
};
use editforge_core::Error;

use crate::CliError;

#[derive(Clone)]
struct AppState {
    store: Arc<StudyStore>,
    media_root: PathBuf,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::Validation(_) | Error::Config(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Store calls touch the disk, so they leave the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> editforge_core::Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(Error::Validation(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StudyView {
    pub id: String,
    pub title: String,
    pub contenders: Vec<Contender>,
    pub samples: usize,
    pub comparisons: usize,
    pub pending: usize,
    pub mos_ratings: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GuideEntry {
    pub category: String,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub id: String,
    pub title: String,
    pub contenders: Vec<ContenderSpec>,
    pub allow_ties: bool,
    pub rating_scale: (u8, u8),
    pub rating_guide: Vec<GuideEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerdictBody {
    pub verdict: Verdict,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerdictReply {
    pub comparison: Comparison,
    pub ranking: Vec<Contender>,
}

pub fn router(store: Arc<StudyStore>, media_root: PathBuf) -> Router {
    Router::new()
        .route("/studies", get(list_studies).post(create_study))
        .route("/studies/{id}", get(get_study))
        .route("/studies/{id}/metadata", get(metadata))
        .route("/studies/{id}/next", post(next))
        .route("/studies/{id}/pending", get(pending))
        .route("/studies/{id}/ranking", get(ranking))
        .route("/studies/{id}/mos", get(get_mos).post(post_mos))
        .route("/comparisons/{cid}", get(get_comparison))
        .route("/comparisons/{cid}/audio/{slot}", get(audio))
        .route("/comparisons/{cid}/verdict", post(verdict))
        .with_state(AppState { store, media_root })
}

/// Runs the server until the process is stopped.
pub fn serve(store: StudyStore, media_root: PathBuf, addr: SocketAddr) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {addr}: {e}")))?;
        log::info!("listening on {addr}");
        axum::serve(listener, router(Arc::new(store), media_root))
            .await
            .map_err(|e| CliError::Core(Error::Backend(format!("server stopped: {e}"))))
    })
}

async fn list_studies(State(s): State<AppState>) -> Json<Vec<String>> {
    Json(s.store.study_ids())
}

fn view(study: &editforge_core::elo::EloStudy) -> StudyView {
    StudyView {
        id: study.id().to_string(),
        title: study.definition.title.clone(),
        contenders: study.contenders().to_vec(),
        samples: study.definition.samples.len(),
        comparisons: study.comparisons().len(),
        pending: study.pending().len(),
        mos_ratings: study.mos_ratings().len(),
    }
}

async fn create_study(State(s): State<AppState>, Json(def): Json<StudyDefinition>) -> ApiResult<impl IntoResponse> {
    let study = blocking(move || s.store.create_study(def)).await?;
    Ok((StatusCode::CREATED, Json(view(&study))))
}

async fn get_study(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StudyView>> {
    Ok(Json(view(&blocking(move || s.store.study(&id)).await?)))
}

async fn metadata(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StudyMetadata>> {
    let study = blocking(move || s.store.study(&id)).await?;
    let def = &study.definition;
    Ok(Json(StudyMetadata {
        id: def.id.clone(),
        title: def.title.clone(),
        contenders: def.contenders.clone(),
        allow_ties: def.config.allow_ties,
        rating_scale: (1, 5),
        rating_guide: RATING_GUIDE
            .iter()
            .map(|(c, d)| GuideEntry { category: c.to_string(), description: d.to_string() })
            .collect(),
    }))
}

async fn next(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    match blocking(move || s.store.next_comparison(&id)).await {
        Ok(c) => Ok(Json(c).into_response()),
        Err(ApiError(Error::StudyComplete)) => Ok(StatusCode::NO_CONTENT.into_response()),
        Err(e) => Err(e),
    }
}

async fn pending(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<Comparison>>> {
    Ok(Json(blocking(move || s.store.pending(&id)).await?))
}

async fn ranking(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<Contender>>> {
    Ok(Json(blocking(move || s.store.ranking(&id)).await?))
}

async fn get_mos(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || s.store.aggregate_mos(&id)).await?))
}

async fn post_mos(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(rating): Json<MosRating>,
) -> ApiResult<impl IntoResponse> {
    let agg = blocking(move || {
        s.store.submit_mos(&id, rating)?;
        s.store.aggregate_mos(&id)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(agg)))
}

async fn get_comparison(State(s): State<AppState>, Path(cid): Path<String>) -> ApiResult<Json<Comparison>> {
    Ok(Json(blocking(move || s.store.comparison(&cid)).await?))
}

async fn verdict(
    State(s): State<AppState>,
    Path(cid): Path<String>,
    headers: HeaderMap,
    Json(body): Json<VerdictBody>,
) -> ApiResult<Json<VerdictReply>> {
    let header_key = headers.get("idempotency-key").and_then(|v| v.to_str().ok()).map(str::to_string);
    let key = body.idempotency_key.or(header_key);
    let reply = blocking(move || {
        let comparison = s.store.submit_verdict(&cid, body.verdict, key.as_deref())?;
        let ranking = s.store.ranking(&comparison.study_id)?;
        Ok(VerdictReply { comparison, ranking })
    })
    .await?;
    Ok(Json(reply))
}

/// Joins a study's clip reference onto the media root, refusing anything
/// that could escape it.
fn media_path(root: &FsPath, reference: &str) -> editforge_core::Result<PathBuf> {
    let rel = FsPath::new(reference);
    if reference.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(Error::Validation(format!("clip reference {reference:?} must be a relative path inside the media root")));
    }
    Ok(root.join(rel))
}

async fn audio(State(s): State<AppState>, Path((cid, slot)): Path<(String, String)>) -> ApiResult<Response> {
    let bytes = blocking(move || {
        let c = s.store.comparison(&cid)?;
        let reference = match slot.as_str() {
            "input" => c.input_clip,
            "a" => c.clip_a,
            "b" => c.clip_b,
            other => return Err(Error::NotFound(format!("audio slot {other:?} (expected input, a or b)"))),
        };
        let path = media_path(&s.media_root, &reference)?;
        std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(format!("clip {reference}")),
            _ => Error::Io { path, source: e },
        })
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn media_paths_stay_inside_the_root() {
        let root = FsPath::new("/srv/media");
        assert_eq!(media_path(root, "a/b.wav").unwrap(), PathBuf::from("/srv/media/a/b.wav"));
        assert!(media_path(root, "../etc/passwd").is_err());
        assert!(media_path(root, "a/../../x.wav").is_err());
        assert!(media_path(root, "/etc/passwd").is_err());
        assert!(media_path(root, "").is_err());
    }
}
