//! HTTP session service. One engine per process: previews read a shared
//! snapshot concurrently, mutations queue on a fair write lock.
//!
//! Binary payloads are little-endian typed arrays, base64 encoded inside the
//! JSON bodies: positions and fields as `f32`, triangles and labels as `u32`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use geopattern::command::{OperatorCommand, TaggedDisplacement};
use geopattern::engine::{ApplyReport, Preview};
use geopattern::procedural::RuleSet;
use geopattern::script::PatternScript;
use geopattern::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::pick::{pick, PickRequest};
use crate::sidecar_json;

pub struct Session {
    engine: RwLock<Engine>,
    /// Command of the latest successful preview, committed by an empty `/commit`.
    pending: Mutex<Option<OperatorCommand>>,
    revision: AtomicU64,
    mesh: Option<String>,
}

impl Session {
    pub fn new(engine: Engine, mesh: Option<String>) -> Arc<Self> {
        Arc::new(Session { engine: RwLock::new(engine), pending: Mutex::new(None), revision: AtomicU64::new(0), mesh })
    }

    fn revision(&self) -> u64 {
        self.revision.load(Ordering::SeqCst)
    }
}

pub fn router(session: Arc<Session>) -> Router {
    Router::new()
        .route("/mesh", get(get_mesh))
        .route("/tree", get(get_tree))
        .route("/export", get(get_export))
        .route("/preview", post(post_preview))
        .route("/commit", post(post_commit))
        .route("/undo", post(post_undo))
        .route("/seeds/pick", post(post_pick))
        .route("/macro", post(post_macro))
        .route("/procedural", post(post_procedural))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(session)
}

pub async fn serve(session: Arc<Session>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(session)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, kind, message: message.into() }
    }
}

impl From<geopattern::Error> for ApiError {
    fn from(e: geopattern::Error) -> Self {
        use geopattern::Error as E;
        let status = match e {
            E::UnknownRegion(_) => StatusCode::NOT_FOUND,
            E::NothingToUndo => StatusCode::CONFLICT,
            E::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": { "kind": self.kind, "message": self.message } }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.to_string()))
}

fn encode_f32(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(|v| (v as f32).to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn encode_u32(values: impl Iterator<Item = u32>) -> String {
    let bytes: Vec<u8> = values.flat_map(u32::to_le_bytes).collect();
    STANDARD.encode(bytes)
}

async fn read<T: Send + 'static>(s: &Arc<Session>, f: impl FnOnce(&Engine) -> T + Send + 'static) -> ApiResult<T> {
    let s = s.clone();
    tokio::task::spawn_blocking(move || f(&s.engine.blocking_read()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

async fn write<T: Send + 'static>(s: &Arc<Session>, f: impl FnOnce(&mut Engine) -> T + Send + 'static) -> ApiResult<T> {
    let s = s.clone();
    tokio::task::spawn_blocking(move || f(&mut s.engine.blocking_write()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

async fn get_mesh(State(s): State<Arc<Session>>) -> ApiResult<Json<Value>> {
    let rev = s.revision();
    read(&s, move |e| {
        let m = e.mesh();
        Json(json!({
            "revision": rev,
            "vertex_count": m.vertex_count(),
            "face_count": m.face_count(),
            "positions": encode_f32(m.positions().iter().flat_map(|p| [p.x, p.y, p.z])),
            "normals": encode_f32(m.normals().iter().flat_map(|n| [n.x, n.y, n.z])),
            "triangles": encode_u32(m.triangles().iter().flatten().copied()),
            "labels": encode_u32(e.labels().iter().copied()),
            "materials": encode_u32((0..m.face_count() as u32).map(|f| e.face_material(f))),
        }))
    })
    .await
}

async fn get_tree(State(s): State<Arc<Session>>) -> ApiResult<Json<Value>> {
    let rev = s.revision();
    read(&s, move |e| {
        let mut v = serde_json::to_value(e.tree_record()).expect("tree records serialize");
        v["revision"] = json!(rev);
        v["undo_depth"] = json!(e.undo_depth());
        Json(v)
    })
    .await
}

async fn get_export(State(s): State<Arc<Session>>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    let mesh = s.mesh.clone();
    match q.get("format").map(String::as_str).unwrap_or("script") {
        "script" => read(&s, move |e| {
            let script = PatternScript::from_engine(e, mesh);
            ([(header::CONTENT_TYPE, "application/json")], script.to_json()).into_response()
        })
        .await,
        "sidecar" => {
            read(&s, |e| ([(header::CONTENT_TYPE, "application/json")], sidecar_json(e)).into_response()).await
        }
        "ply" => read(&s, |e| -> ApiResult<Response> {
            let mut buf = Vec::new();
            geopattern::mesh::io::write_ply_to(&mut buf, e.mesh(), Some(e.labels()), None)?;
            Ok(([(header::CONTENT_TYPE, "application/octet-stream")], buf).into_response())
        })
        .await?,
        other => Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", format!("unknown export format `{other}`"))),
    }
}

#[derive(Deserialize)]
struct PreviewRequest {
    command: OperatorCommand,
    /// Client sequence number, echoed back so stale replies can be dropped.
    #[serde(default)]
    seq: Option<u64>,
}

fn preview_body(p: &Preview, seq: Option<u64>, revision: u64) -> Value {
    let field = p.field.as_ref().map(|f| {
        let finite = f.iter().copied().filter(|x| x.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        json!({ "values": encode_f32(f.iter().copied()), "min": lo.is_finite().then_some(lo), "max": hi.is_finite().then_some(hi) })
    });
    let polylines: Vec<Value> = p
        .polylines
        .iter()
        .map(|(pts, closed)| json!({ "points": encode_f32(pts.iter().flatten().copied()), "count": pts.len(), "closed": closed }))
        .collect();
    json!({
        "seq": seq,
        "revision": revision,
        "field": field,
        "polylines": polylines,
        "labels": p.labels.as_ref().map(|l| encode_u32(l.iter().copied())),
        "warnings": p.warnings,
    })
}

async fn run_preview(s: &Arc<Session>, cmd: OperatorCommand, seq: Option<u64>) -> ApiResult<Json<Value>> {
    let rev = s.revision();
    let c = cmd.clone();
    let p = read(s, move |e| e.preview(&c)).await??;
    *s.pending.lock().unwrap() = Some(cmd);
    Ok(Json(preview_body(&p, seq, rev)))
}

async fn post_preview(State(s): State<Arc<Session>>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: PreviewRequest = parse(&body)?;
    run_preview(&s, req.command, req.seq).await
}

fn commit_body(r: &ApplyReport, e: &Engine, revision: u64) -> Value {
    json!({
        "revision": revision,
        "created": r.created,
        "warnings": r.warnings,
        "leaf_count": e.tree().leaf_count(),
        "undo_depth": e.undo_depth(),
    })
}

async fn run_commit(s: &Arc<Session>, cmd: OperatorCommand) -> ApiResult<Json<Value>> {
    let s2 = s.clone();
    let body = write(s, move |e| -> ApiResult<Value> {
        let r = e.apply(cmd)?;
        let rev = s2.revision.fetch_add(1, Ordering::SeqCst) + 1;
        *s2.pending.lock().unwrap() = None;
        Ok(commit_body(&r, e, rev))
    })
    .await??;
    Ok(Json(body))
}

#[derive(Deserialize)]
struct CommitRequest {
    #[serde(default)]
    command: Option<OperatorCommand>,
}

async fn post_commit(State(s): State<Arc<Session>>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: CommitRequest = parse(&body)?;
    let cmd = match req.command {
        Some(c) => c,
        None => s
            .pending
            .lock()
            .unwrap()
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "nothing_pending", "no previewed command to commit"))?,
    };
    run_commit(&s, cmd).await
}

async fn post_undo(State(s): State<Arc<Session>>) -> ApiResult<Json<Value>> {
    let s2 = s.clone();
    let body = write(&s, move |e| -> ApiResult<Value> {
        let undone = e.undo()?;
        let rev = s2.revision.fetch_add(1, Ordering::SeqCst) + 1;
        *s2.pending.lock().unwrap() = None;
        Ok(json!({ "revision": rev, "undone": undone, "undo_depth": e.undo_depth(), "leaf_count": e.tree().leaf_count() }))
    })
    .await??;
    Ok(Json(body))
}

#[derive(Serialize)]
struct PickResponse {
    hit: bool,
    #[serde(flatten)]
    pick: Option<crate::pick::Pick>,
}

async fn post_pick(State(s): State<Arc<Session>>, body: Bytes) -> ApiResult<Json<PickResponse>> {
    let req: PickRequest = parse(&body)?;
    let p = read(&s, move |e| pick(e, &req)).await??;
    Ok(Json(PickResponse { hit: p.is_some(), pick: p }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MacroRequest {
    region: u32,
    name: String,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    preview: bool,
    #[serde(default)]
    seq: Option<u64>,
}

async fn post_macro(State(s): State<Arc<Session>>, body: Bytes) -> ApiResult<Json<Value>> {
    let r: MacroRequest = parse(&body)?;
    let cmd = OperatorCommand::Macro { region: r.region, name: r.name, params: r.params };
    if r.preview {
        run_preview(&s, cmd, r.seq).await
    } else {
        run_commit(&s, cmd).await
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProceduralRequest {
    region: u32,
    #[serde(default)]
    rules: Option<RuleSet>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    displace: Option<TaggedDisplacement>,
    #[serde(default)]
    preview: bool,
    #[serde(default)]
    seq: Option<u64>,
}

async fn post_procedural(State(s): State<Arc<Session>>, body: Bytes) -> ApiResult<Json<Value>> {
    let r: ProceduralRequest = parse(&body)?;
    let cmd = OperatorCommand::Procedural { region: r.region, rules: r.rules, seed: r.seed, displace: r.displace };
    if r.preview {
        run_preview(&s, cmd, r.seq).await
    } else {
        run_commit(&s, cmd).await
    }
}
