//! Annotation HTTP service: image listing, image bytes, and per-image
//! annotations persisted atomically into the manifest.

use std::collections::HashMap;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use pupilbench::eval::{Annotation, Category, DatasetEntry, DatasetManifest, MANIFEST_FILE};

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "pgm", "pnm"];

const FALLBACK_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>pupilbench annotator</title></head>
<body><h1>pupilbench annotator</h1>
<p>No UI bundle configured; start the server with <code>--static DIR</code>.</p>
<p>API: <code>GET /api/images</code>, <code>GET /api/image/&lt;id&gt;</code>,
<code>GET|PUT /api/annotation/&lt;id&gt;</code>.</p>
</body></html>
";

pub struct AppState {
    base: PathBuf,
    manifest_path: PathBuf,
    manifest: RwLock<DatasetManifest>,
    /// Serializes manifest writes.
    writer: tokio::sync::Mutex<()>,
    static_dir: Option<PathBuf>,
    dims: Mutex<HashMap<usize, (usize, usize)>>,
}

impl AppState {
    /// Loads `manifest` (default `dir/manifest.json`), or lists the image
    /// files of `dir` when no manifest exists yet.
    pub fn open(
        dir: &Path,
        manifest: Option<PathBuf>,
        static_dir: Option<PathBuf>,
    ) -> Result<AppState, String> {
        let listing =
            fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
        let manifest_path = manifest.unwrap_or_else(|| dir.join(MANIFEST_FILE));
        let base = manifest_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| dir.to_path_buf());
        let manifest = if manifest_path.exists() {
            DatasetManifest::load(&manifest_path).map_err(|e| e.to_string())?
        } else {
            let mut names: Vec<String> = listing
                .filter_map(Result::ok)
                .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|n| {
                    Path::new(n)
                        .extension()
                        .and_then(|x| x.to_str())
                        .is_some_and(|x| {
                            IMAGE_EXTENSIONS.contains(&x.to_ascii_lowercase().as_str())
                        })
                })
                .collect();
            names.sort();
            let rel = |n: &str| -> String {
                let abs = dir.join(n);
                abs.strip_prefix(&base)
                    .map(|p| p.to_string_lossy().into_owned())
                    .unwrap_or_else(|_| abs.to_string_lossy().into_owned())
            };
            DatasetManifest {
                images: names
                    .iter()
                    .map(|n| DatasetEntry {
                        path: rel(n),
                        category: Category::Clear,
                        annotation: None,
                    })
                    .collect(),
                ..DatasetManifest::default()
            }
        };
        Ok(AppState {
            base,
            manifest_path,
            manifest: RwLock::new(manifest),
            writer: tokio::sync::Mutex::new(()),
            static_dir,
            dims: Mutex::new(HashMap::new()),
        })
    }

    fn entry(&self, id: usize) -> Option<DatasetEntry> {
        self.manifest.read().unwrap().images.get(id).cloned()
    }

    fn image_path(&self, entry: &DatasetEntry) -> PathBuf {
        self.manifest.read().unwrap().resolve(&self.base, entry)
    }

    fn dimensions(&self, id: usize, path: &Path) -> Result<(usize, usize), String> {
        if let Some(d) = self.dims.lock().unwrap().get(&id) {
            return Ok(*d);
        }
        let (w, h) = image::image_dimensions(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let d = (w as usize, h as usize);
        self.dims.lock().unwrap().insert(id, d);
        Ok(d)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/images", get(list_images))
        .route("/api/image/{id}", get(image_bytes))
        .route(
            "/api/annotation/{id}",
            get(get_annotation).put(put_annotation),
        )
        .fallback(get(static_file))
        .with_state(state)
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

#[derive(Serialize)]
struct ImageInfo {
    id: usize,
    path: String,
    category: Category,
    annotated: bool,
}

async fn list_images(State(state): State<Arc<AppState>>) -> Json<Vec<ImageInfo>> {
    let manifest = state.manifest.read().unwrap();
    Json(
        manifest
            .images
            .iter()
            .enumerate()
            .map(|(id, e)| ImageInfo {
                id,
                path: e.path.clone(),
                category: e.category,
                annotated: e.annotation.is_some(),
            })
            .collect(),
    )
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|x| x.to_str())
        .map(|x| x.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("pgm" | "pnm") => "image/x-portable-graymap",
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

fn file_response(path: &Path) -> Response {
    match fs::read(path) {
        Ok(bytes) => (
            [(header::CONTENT_TYPE, content_type(path))],
            Body::from(bytes),
        )
            .into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, "file not found"),
    }
}

async fn image_bytes(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<usize>) -> Response {
    match state.entry(id) {
        Some(entry) => file_response(&state.image_path(&entry)),
        None => error(StatusCode::NOT_FOUND, format!("no image {id}")),
    }
}

async fn get_annotation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<usize>,
) -> Response {
    match state.entry(id) {
        None => error(StatusCode::NOT_FOUND, format!("no image {id}")),
        Some(DatasetEntry {
            annotation: None, ..
        }) => error(
            StatusCode::NOT_FOUND,
            format!("image {id} is not annotated"),
        ),
        Some(DatasetEntry {
            annotation: Some(a),
            ..
        }) => Json(a).into_response(),
    }
}

/// Request body; annotator and timestamp are filled in when absent.
#[derive(Deserialize)]
struct AnnotationDraft {
    cx: f64,
    cy: f64,
    r: f64,
    #[serde(default)]
    annotator: Option<String>,
    #[serde(default)]
    timestamp: Option<i64>,
}

fn now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

async fn put_annotation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<usize>,
    body: Bytes,
) -> Response {
    let Some(entry) = state.entry(id) else {
        return error(StatusCode::NOT_FOUND, format!("no image {id}"));
    };
    let draft: AnnotationDraft = match serde_json::from_slice(&body) {
        Ok(d) => d,
        Err(e) if e.is_syntax() || e.is_eof() => {
            return error(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}"))
        }
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let annotation = Annotation {
        cx: draft.cx,
        cy: draft.cy,
        r: draft.r,
        annotator: draft.annotator.unwrap_or_default(),
        timestamp: draft.timestamp.unwrap_or_else(now),
    };
    let (w, h) = match state.dimensions(id, &state.image_path(&entry)) {
        Ok(d) => d,
        Err(e) => return error(StatusCode::NOT_FOUND, e),
    };
    if let Err(e) = annotation.validate(w, h) {
        return error(StatusCode::UNPROCESSABLE_ENTITY, e);
    }

    let _guard = state.writer.lock().await;
    let mut updated = state.manifest.read().unwrap().clone();
    updated.images[id].annotation = Some(annotation.clone());
    if let Err(e) = updated.save_atomic(&state.manifest_path) {
        log::error!("saving {}: {e}", state.manifest_path.display());
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    *state.manifest.write().unwrap() = updated;
    log::info!("annotated image {id}");
    Json(annotation).into_response()
}

async fn static_file(State(state): State<Arc<AppState>>, uri: Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel_path = Path::new(rel);
    if !rel_path
        .components()
        .all(|c| matches!(c, Component::Normal(_)))
    {
        return error(StatusCode::NOT_FOUND, "not found");
    }
    match &state.static_dir {
        Some(dir) => file_response(&dir.join(rel_path)),
        None if rel == "index.html" => (
            [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
            FALLBACK_PAGE,
        )
            .into_response(),
        None => error(StatusCode::NOT_FOUND, "not found"),
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> Result<(), String> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("cannot bind {addr}: {e}"))?;
    log::info!("listening on http://{addr}");
    eprintln!("annotation server on http://{addr}");
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| e.to_string())
}
