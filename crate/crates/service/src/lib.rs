//! HTTP service over the partscale pipeline.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/health` | | `ok` |
//! | GET | `/objects` | | object list |
//! | POST | `/objects?format=csdf\|obj\|stl` | grid or mesh | object info, 201 |
//! | GET | `/objects/{id}` | | object info |
//! | GET | `/objects/{id}/csdf?version=n` | | CSDF binary |
//! | GET | `/objects/{id}/atlas?resolution=full\|preview&format=json\|png\|meta` | | atlas |
//! | POST | `/objects/{id}/preview` | zone JSON | atlas bundle of the edited preview grid |
//! | POST | `/objects/{id}/commit` | zone JSON | object info |
//! | POST | `/objects/{id}/decompose` | decompose options | object info and part report |
//! | GET | `/objects/{id}/render?w&h&parts` | | PNG |
//! | GET | `/objects/{id}/history` | | history |
//!
//! Mutations accept `If-Match: <version>` and answer 409 when the object has
//! moved on. Object info carries the version as its `ETag`.

pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use partscale_api::ops::{self, InputKind};
use partscale_api::wire::{DecomposeResponse, ObjectList, ObjectSummary};
use partscale_api::{ErrorBody, History, Operation, PipelineConfig};
use serde::Deserialize;

pub use error::ApiError;
pub use store::Store;

/// Largest accepted request body.
pub const MAX_BODY: usize = 1 << 30;

pub type AppState = Arc<Store>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/objects", get(list).post(upload))
        .route("/objects/{id}", get(info))
        .route("/objects/{id}/csdf", get(csdf))
        .route("/objects/{id}/atlas", get(atlas))
        .route("/objects/{id}/preview", post(preview))
        .route("/objects/{id}/commit", post(commit))
        .route("/objects/{id}/decompose", post(decompose))
        .route("/objects/{id}/render", get(render))
        .route("/objects/{id}/history", get(history))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(store)
}

/// Open the store under `data_dir` and serve on `addr` until the process
/// ends. `on_bound` receives the bound address.
pub async fn serve(
    data_dir: PathBuf,
    cfg: PipelineConfig,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), ApiError> {
    let store = Arc::new(Store::open(data_dir, cfg)?);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(ApiError::io)?;
    on_bound(listener.local_addr().map_err(ApiError::io)?);
    axum::serve(listener, router(store)).await.map_err(ApiError::io)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn with_etag(version: usize, body: impl IntoResponse) -> Response {
    let mut resp = body.into_response();
    resp.headers_mut()
        .insert(header::ETAG, HeaderValue::from_str(&format!("\"{version}\"")).unwrap());
    resp
}

fn if_match(headers: &HeaderMap) -> Result<Option<usize>, ApiError> {
    let Some(value) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let text = value.to_str().unwrap_or("").trim().trim_matches('"');
    text.parse().map(Some).map_err(|_| {
        ApiError::bad_request(
            ErrorBody::new("invalid_header", format!("If-Match must be a version number, got `{text}`"))
                .with_field("If-Match"),
        )
    })
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::unprocessable(ErrorBody::new("invalid_request", e.body_text())))
}

fn binary(content_type: &'static str, bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, content_type)], bytes).into_response()
}

async fn list(State(store): State<AppState>) -> Json<ObjectList> {
    let objects = store
        .list()
        .into_iter()
        .map(|r| ObjectSummary {
            version: r.version(),
            sha256: r.current().to_owned(),
            id: r.id,
        })
        .collect();
    Json(ObjectList { objects })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadQuery {
    format: Option<String>,
}

async fn upload(State(store): State<AppState>, q: Result<Query<UploadQuery>, QueryRejection>, body: Bytes) -> Result<Response, ApiError> {
    let q = query(q)?;
    let kind = match q.format.as_deref() {
        None => InputKind::sniff(&body),
        Some(name) => InputKind::from_name(name).ok_or_else(|| {
            ApiError::unprocessable(
                ErrorBody::new("invalid_request", format!("unknown format `{name}`")).with_field("format"),
            )
        })?,
    };
    let (snap, info) = blocking(move || {
        let grid = ops::load_input(&body, kind, store.config())?;
        let snap = store.create(grid)?;
        let info = store.info(&snap)?;
        Ok((snap, info))
    })
    .await?;
    tracing::info!(id = snap.record.id, "created");
    Ok(with_etag(0, (StatusCode::CREATED, Json(info))))
}

async fn info(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let info = blocking(move || {
        let snap = store.snapshot(&id)?;
        store.info(&snap)
    })
    .await?;
    Ok(with_etag(info.version, Json(info)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CsdfQuery {
    version: Option<usize>,
}

async fn csdf(State(store): State<AppState>, Path(id): Path<String>, q: Result<Query<CsdfQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let q = query(q)?;
    let snap = store.snapshot(&id)?;
    let version = q.version.unwrap_or(snap.record.version());
    let bytes = blocking(move || store.grid_bytes_at(&id, version)).await?;
    Ok(with_etag(version, binary("application/octet-stream", bytes)))
}

#[derive(Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Resolution {
    #[default]
    Full,
    Preview,
}

#[derive(Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum AtlasFormat {
    #[default]
    Json,
    Png,
    Meta,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtlasQuery {
    #[serde(default)]
    resolution: Resolution,
    #[serde(default)]
    format: AtlasFormat,
}

async fn atlas(State(store): State<AppState>, Path(id): Path<String>, q: Result<Query<AtlasQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let q = query(q)?;
    let bundle = blocking(move || {
        let grid = match q.resolution {
            Resolution::Full => store.snapshot(&id)?.grid,
            Resolution::Preview => store.preview_base(&id)?,
        };
        Ok(ops::atlas_bundle(&grid, store.config())?)
    })
    .await?;
    Ok(match q.format {
        AtlasFormat::Json => Json(bundle).into_response(),
        AtlasFormat::Meta => Json(bundle.meta).into_response(),
        AtlasFormat::Png => binary("image/png", ops::atlas_png(&bundle)?),
    })
}

async fn preview(State(store): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let edit = ops::parse_edit(&body, store.config())?;
    let started = Instant::now();
    let bundle = blocking(move || {
        let base = store.preview_base(&id)?;
        let op = Operation::Scale(edit);
        let grid = ops::apply(&base, &op, store.config())?.grid;
        Ok(ops::atlas_bundle(&grid, store.config())?)
    })
    .await?;
    let mut resp = Json(bundle).into_response();
    let ms = started.elapsed().as_millis().to_string();
    resp.headers_mut()
        .insert("x-elapsed-ms", HeaderValue::from_str(&ms).unwrap());
    Ok(resp)
}

async fn commit(
    State(store): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let expected = if_match(&headers)?;
    let edit = ops::parse_edit(&body, store.config())?;
    let (snap, _) = store.mutate(&id, expected, Operation::Scale(edit)).await?;
    let info = blocking(move || store.info(&snap)).await?;
    Ok(with_etag(info.version, Json(info)))
}

async fn decompose(
    State(store): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let expected = if_match(&headers)?;
    let opts = ops::parse_decompose(&body, store.config())?;
    let (snap, report) = store.mutate(&id, expected, Operation::Decompose(opts)).await?;
    let report = report.ok_or_else(|| ApiError::internal("decomposition produced no report"))?;
    let object = blocking(move || store.info(&snap)).await?;
    Ok(with_etag(object.version, Json(DecomposeResponse { object, report })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderQuery {
    #[serde(default = "default_size")]
    w: u32,
    #[serde(default = "default_size")]
    h: u32,
    #[serde(default)]
    parts: bool,
}

fn default_size() -> u32 {
    256
}

async fn render(State(store): State<AppState>, Path(id): Path<String>, q: Result<Query<RenderQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let q = query(q)?;
    let snap = store.snapshot(&id)?;
    let png = blocking(move || Ok(ops::render_png(&snap.grid, q.w, q.h, q.parts)?)).await?;
    Ok(binary("image/png", png))
}

async fn history(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<History>, ApiError> {
    let snap = store.snapshot(&id)?;
    Ok(Json(History {
        id: snap.record.id,
        base: snap.record.base,
        entries: snap.record.history,
    }))
}
