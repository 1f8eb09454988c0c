//! HTTP API over a [`lifegrid::engine::Engine`] plus the task harness.

mod args;
mod error;

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use lifegrid::descriptor::{sketch_to_histmap, Criterion, CELLS, PALETTE, PALETTE_NAMES};
use lifegrid::engine::{Engine, DEFAULT_CRITERIA};
use lifegrid::featmap::FeatureMapPyramid;
use lifegrid::ingest::{Frame, LifelogStore};
use lifegrid::query::ResultList;
use lifegrid::segment::{Segment, SegmentMethod};
use lifegrid::simsearch::{Metric, NeighborResult};
use lifegrid::task::{Clock, SessionStatus, SubmissionResult, TaskHarness};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use args::ServerArgs;
pub use error::{ApiError, ErrorBody};

pub type Tasks = TaskHarness<Arc<dyn Clock>>;

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub tasks: Arc<Tasks>,
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Builds the API router; `static_dir` is served for every other path.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/maps", get(maps))
        .route("/api/maps/{criterion}/{method}/levels/{level}", get(map_tile))
        .route("/api/days", get(days))
        .route("/api/days/{day_id}/summary", get(day_summary))
        .route("/api/days/{day_id}/frames/{index}", get(frame))
        .route("/api/days/{day_id}/meta", get(day_meta))
        .route("/api/query", post(query))
        .route("/api/query/explain", post(explain))
        .route("/api/sketch", post(sketch))
        .route("/api/palette", get(palette))
        .route("/api/similar/{segment_id}", get(similar))
        .route("/api/tasks", get(task_list))
        .route("/api/tasks/{id}/start", post(task_start))
        .route("/api/tasks/{id}/hints", get(task_hints))
        .route("/api/tasks/{id}/submit", post(task_submit))
        .route("/api/{*rest}", get(api_not_found).post(api_not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("not_found", "no such endpoint")
}

/// Raw RGB pixels of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePayload {
    pub width: usize,
    pub height: usize,
    pub rgb_base64: String,
}

pub fn frame_payload(store: &LifelogStore, day_id: &str, index: u32) -> Result<FramePayload, ApiError> {
    let frame = store.get_frame(day_id, index).ok_or_else(|| unknown_frame(store, day_id, index))?;
    let r = &frame.raster;
    Ok(FramePayload {
        width: r.width(),
        height: r.height(),
        rgb_base64: base64::engine::general_purpose::STANDARD.encode(r.rgb_bytes()),
    })
}

fn unknown_frame(store: &LifelogStore, day_id: &str, index: u32) -> ApiError {
    match store.day_index(day_id) {
        None => unknown_day(day_id),
        Some(_) => ApiError::not_found("unknown_frame", format!("day `{day_id}` has no frame {index}"))
            .with_detail(json!({ "day_id": day_id, "index": index })),
    }
}

fn unknown_day(day_id: &str) -> ApiError {
    ApiError::not_found("unknown_day", format!("unknown day `{day_id}`")).with_detail(json!({ "day_id": day_id }))
}

fn parse_method(s: Option<&str>, default: SegmentMethod) -> Result<SegmentMethod, ApiError> {
    match s {
        None => Ok(default),
        Some(s) => SegmentMethod::from_str(s).map_err(|e| ApiError::bad_request(e.to_string()).with_code("unknown_method")),
    }
}

async fn health(State(s): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "summary": s.engine.summary(),
        "tasks": s.tasks.tasks().count(),
    }))
}

fn levels_json(p: &FeatureMapPyramid) -> Vec<Value> {
    p.levels.iter().map(|l| json!({ "rows": l.rows, "cols": l.cols })).collect()
}

async fn maps(State(s): State<AppState>) -> ApiResult<Value> {
    let mut maps = Vec::new();
    for c in DEFAULT_CRITERIA {
        for m in SegmentMethod::ALL {
            let p = s.engine.pyramid(&c, m)?;
            maps.push(json!({ "criterion": c.to_string(), "method": m, "levels": levels_json(&p) }));
        }
    }
    let concepts: Vec<&str> = s.engine.store().taxonomy().ids().collect();
    Ok(Json(json!({
        "criteria": DEFAULT_CRITERIA.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "concept_criteria": concepts.iter().map(|c| format!("concept:{c}")).collect::<Vec<_>>(),
        "methods": SegmentMethod::ALL,
        "viewport": s.engine.config().viewport,
        "maps": maps,
    })))
}

#[derive(Debug, Deserialize)]
struct TileParams {
    row0: Option<usize>,
    col0: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
}

#[derive(Debug, Serialize)]
struct TileCell {
    segment_id: Option<u64>,
    keyframe_url: Option<String>,
    score: Option<f64>,
    empty: bool,
}

fn keyframe_url(seg: &Segment) -> String {
    format!("/api/days/{}/frames/{}", seg.day_id, seg.keyframe)
}

async fn map_tile(
    State(s): State<AppState>,
    path: Result<Path<(String, String, usize)>, PathRejection>,
    params: Result<Query<TileParams>, QueryRejection>,
) -> ApiResult<Value> {
    let Path((criterion, method, level)) = path?;
    let Query(p) = params?;
    let criterion = Criterion::from_str(&criterion)
        .map_err(|e| ApiError::not_found("unknown_criterion", e).with_detail(json!({ "criterion": criterion })))?;
    let method = parse_method(Some(&method), SegmentMethod::Shot)?;
    let pyramid = s.engine.pyramid(&criterion, method).map_err(|e| match ApiError::from(e) {
        err if err.body.code == "unknown_concept" => err.with_code("unknown_criterion").with_status(StatusCode::NOT_FOUND),
        err => err,
    })?;
    let lvl = pyramid.level(level).ok_or_else(|| {
        ApiError::not_found("unknown_level", format!("level {level} does not exist"))
            .with_detail(json!({ "depth": pyramid.depth() }))
    })?;
    let viewport = pyramid.viewport;
    let (row0, col0) = (p.row0.unwrap_or(0), p.col0.unwrap_or(0));
    let (tile_rows, tile_cols, cells) = lvl.tile(row0, col0, p.rows.unwrap_or(viewport), p.cols.unwrap_or(viewport));
    let table = s.engine.table(method);
    let cells: Vec<TileCell> = cells
        .into_iter()
        .map(|c| match c {
            Some(c) => TileCell {
                segment_id: Some(c.segment_id),
                keyframe_url: table.get(c.segment_id).map(keyframe_url),
                score: Some(c.score),
                empty: false,
            },
            None => TileCell { segment_id: None, keyframe_url: None, score: None, empty: true },
        })
        .collect();
    Ok(Json(json!({
        "criterion": criterion.to_string(),
        "method": method,
        "level": level,
        "depth": pyramid.depth(),
        "level_rows": lvl.rows,
        "level_cols": lvl.cols,
        "row0": row0.min(lvl.rows),
        "col0": col0.min(lvl.cols),
        "rows": tile_rows,
        "cols": tile_cols,
        "cells": cells,
    })))
}

async fn days(State(s): State<AppState>) -> Json<Value> {
    let days: Vec<Value> = s
        .engine
        .store()
        .days()
        .iter()
        .map(|d| json!({ "day_id": d.day_id, "frames": d.frames.len() }))
        .collect();
    Json(json!({ "days": days }))
}

#[derive(Debug, Deserialize)]
struct MethodParam {
    method: Option<String>,
}

async fn day_summary(
    State(s): State<AppState>,
    Path(day_id): Path<String>,
    params: Result<Query<MethodParam>, QueryRejection>,
) -> ApiResult<Value> {
    let Query(p) = params?;
    let method = parse_method(p.method.as_deref(), s.engine.config().default_method)?;
    let day = s.engine.store().day_index(&day_id).ok_or_else(|| unknown_day(&day_id))?;
    let segments: Vec<Value> = s
        .engine
        .table(method)
        .day_segments(day)
        .iter()
        .map(|seg| {
            let mut v = serde_json::to_value(seg).expect("segment serializes");
            v["keyframe_url"] = json!(keyframe_url(seg));
            v
        })
        .collect();
    Ok(Json(json!({
        "day_id": day_id,
        "method": method,
        "frames": s.engine.store().day(day).frames.len(),
        "segments": segments,
    })))
}

async fn frame(State(s): State<AppState>, path: Result<Path<(String, u32)>, PathRejection>) -> ApiResult<FramePayload> {
    let Path((day_id, index)) = path.map_err(|e| ApiError::from(e).with_code("unknown_frame").with_status(StatusCode::NOT_FOUND))?;
    Ok(Json(frame_payload(s.engine.store(), &day_id, index)?))
}

fn frame_meta(store: &LifelogStore, f: &Frame) -> Value {
    let tax = store.taxonomy();
    let detections: Vec<Value> = f
        .detections
        .iter()
        .map(|d| json!({ "concept": tax.id(d.concept), "confidence": d.confidence, "bbox": d.bbox }))
        .collect();
    json!({
        "index": f.index,
        "timestamp_utc": f.timestamp_utc,
        "tz_offset_min": f.tz_offset_min,
        "sensor": store.sensor_of(f),
        "detections": detections,
        "ocr": f.ocr,
    })
}

async fn day_meta(State(s): State<AppState>, Path(day_id): Path<String>) -> ApiResult<Value> {
    let store = s.engine.store();
    let day = store.day_index(&day_id).ok_or_else(|| unknown_day(&day_id))?;
    let frames: Vec<Value> = store.day(day).frames.iter().map(|f| frame_meta(store, f)).collect();
    Ok(Json(json!({ "day_id": day_id, "frames": frames })))
}

/// Either DSL text or a structured query.
#[derive(Debug, Deserialize)]
pub struct QueryBody {
    pub dsl: Option<String>,
    pub structured: Option<lifegrid::query::Query>,
    /// Applies to `dsl`; a structured query carries its own method.
    pub method: Option<String>,
}

async fn query(State(s): State<AppState>, body: Result<Json<QueryBody>, JsonRejection>) -> ApiResult<ResultList> {
    let Json(body) = body?;
    let q = match (body.dsl, body.structured) {
        (Some(text), None) => lifegrid::dsl::parse(&text)?.with_method(parse_method(body.method.as_deref(), s.engine.config().default_method)?),
        (None, Some(q)) => q,
        _ => return Err(ApiError::bad_request("send exactly one of `dsl` or `structured`")),
    };
    Ok(Json(s.engine.query(&q)?))
}

#[derive(Debug, Deserialize)]
struct ExplainBody {
    dsl: String,
}

async fn explain(body: Result<Json<ExplainBody>, JsonRejection>) -> ApiResult<Value> {
    let Json(body) = body?;
    let q = lifegrid::dsl::parse(&body.dsl)?;
    Ok(Json(json!({
        "canonical": lifegrid::dsl::print(&q),
        "explain": lifegrid::dsl::explain(&body.dsl)?,
        "structured": q,
    })))
}

const DEFAULT_K: usize = 20;

#[derive(Debug, Deserialize)]
pub struct SketchBody {
    /// Row-major 4×4 canvas; `null` marks a blank cell.
    pub cells: Vec<Option<usize>>,
    pub k: Option<usize>,
    pub method: Option<String>,
}

async fn sketch(State(s): State<AppState>, body: Result<Json<SketchBody>, JsonRejection>) -> ApiResult<Vec<NeighborResult>> {
    let Json(body) = body?;
    let canvas: [Option<usize>; CELLS] = body
        .cells
        .try_into()
        .map_err(|v: Vec<_>| ApiError::bad_request(format!("expected {CELLS} cells, got {}", v.len())))?;
    let sk = sketch_to_histmap(&canvas)?;
    let method = parse_method(body.method.as_deref(), s.engine.config().default_method)?;
    Ok(Json(s.engine.sketch(&sk, body.k.unwrap_or(DEFAULT_K), method)?))
}

async fn palette() -> Json<Value> {
    let colors: Vec<Value> = PALETTE
        .iter()
        .zip(PALETTE_NAMES)
        .enumerate()
        .map(|(i, (rgb, name))| json!({ "index": i, "name": name, "rgb": rgb }))
        .collect();
    Json(json!({ "grid": lifegrid::descriptor::GRID, "colors": colors }))
}

#[derive(Debug, Deserialize)]
struct SimilarParams {
    metric: Option<String>,
    k: Option<usize>,
}

async fn similar(
    State(s): State<AppState>,
    path: Result<Path<u64>, PathRejection>,
    params: Result<Query<SimilarParams>, QueryRejection>,
) -> ApiResult<Vec<NeighborResult>> {
    let Path(segment_id) = path?;
    let Query(p) = params?;
    let metric = match p.metric.as_deref() {
        Some(m) => Metric::from_str(m).map_err(|e| ApiError::bad_request(e).with_code("unknown_metric"))?,
        None if s.engine.store().vector_dim().is_some() => Metric::CosineDeep,
        None => Metric::HistMapL1,
    };
    Ok(Json(s.engine.similar(segment_id, p.k.unwrap_or(DEFAULT_K), metric)?))
}

async fn task_list(State(s): State<AppState>) -> Json<Value> {
    let tasks: Vec<Value> = s
        .tasks
        .tasks()
        .map(|t| json!({ "task_id": t.task_id, "duration_s": t.duration_s, "hints": t.hints.len() }))
        .collect();
    Json(json!({ "tasks": tasks }))
}

async fn task_start(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionStatus> {
    Ok(Json(s.tasks.start(&id)?))
}

async fn task_hints(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionStatus> {
    Ok(Json(s.tasks.hints(&id)?))
}

#[derive(Debug, Deserialize)]
pub struct SubmitBody {
    pub day_id: String,
    pub frame_index: u32,
}

async fn task_submit(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SubmitBody>, JsonRejection>,
) -> ApiResult<SubmissionResult> {
    let Json(body) = body?;
    Ok(Json(s.tasks.submit(&id, &body.day_id, body.frame_index)?))
}
