use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::Engine as _;
use http_body_util::BodyExt;
use lifegrid::engine::{Engine, EngineConfig};
use lifegrid::ingest::synthetic::{generate_synthetic, synthesize};
use lifegrid::ingest::{LifelogStore, Raster, SyntheticSpec};
use lifegrid::task::{load_tasks, Clock, ManualClock, TaskHarness};
use lifegrid_service::{frame_payload, router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    engine: Arc<Engine>,
    dir: tempfile::TempDir,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        generate_synthetic(&SyntheticSpec::new(11, 3, 90).with_scene_changes(6), dir.path()).unwrap();
        let engine = Arc::new(Engine::load(dir.path(), EngineConfig::default()).unwrap());
        Fixture { engine, dir }
    })
}

fn app_with_clock(clock: Arc<ManualClock>) -> Router {
    let f = fixture();
    let tasks = load_tasks(&f.dir.path().join("tasks.csv")).unwrap();
    let clock: Arc<dyn Clock> = clock;
    router(AppState { engine: f.engine.clone(), tasks: Arc::new(TaskHarness::new(tasks, clock)) }, None)
}

fn app() -> Router {
    app_with_clock(Arc::new(ManualClock::default()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].is_string());
    assert!(body.get("detail").is_some());
}

#[tokio::test]
async fn health_reports_dataset() {
    let (status, body) = call(&app(), "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["summary"]["days"], 3);
    assert_eq!(body["summary"]["frames"], 270);
    assert_eq!(body["summary"]["uniform_segments"], 27);
    assert_eq!(body["tasks"], 1);
}

#[tokio::test]
async fn unknown_day_is_404_with_error_body() {
    let app = app();
    let (status, body) = call(&app, "GET", "/api/days/unknown/summary", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_day");
    let (status, body) = call(&app, "GET", "/api/days/unknown/meta", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_day");
    let (status, body) = call(&app, "GET", "/api/nothing/here", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
}

#[tokio::test]
async fn day_summary_partitions_the_day() {
    let store = fixture().engine.store();
    let day = &store.days()[1].day_id;
    for method in ["shot", "uniform"] {
        let (status, body) = call(&app(), "GET", &format!("/api/days/{day}/summary?method={method}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let segs = body["segments"].as_array().unwrap();
        let mut next = 0;
        for s in segs {
            assert_eq!(s["start"], next);
            assert_eq!(s["method"], method);
            next = s["end"].as_u64().unwrap() + 1;
        }
        assert_eq!(next, 90);
    }
    let (status, body) = call(&app(), "GET", &format!("/api/days/{day}/summary?method=scene"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "unknown_method");
}

#[tokio::test]
async fn frame_payload_round_trips() {
    let store = fixture().engine.store();
    let day = &store.days()[0];
    let (status, body) = call(&app(), "GET", &format!("/api/days/{}/frames/5", day.day_id), None).await;
    assert_eq!(status, StatusCode::OK);
    let raster = &day.frames[5].raster;
    assert_eq!(body["width"], raster.width());
    assert_eq!(body["height"], raster.height());
    let bytes = base64::engine::general_purpose::STANDARD.decode(body["rgb_base64"].as_str().unwrap()).unwrap();
    assert_eq!(bytes, raster.rgb_bytes());

    let (status, body) = call(&app(), "GET", &format!("/api/days/{}/frames/90", day.day_id), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_frame");
    let (status, _) = call(&app(), "GET", &format!("/api/days/{}/frames/-1", day.day_id), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn one_red_pixel() {
    let mut data = synthesize(&SyntheticSpec::new(1, 1, 3).with_scene_changes(0)).records();
    let red = Arc::new(Raster::from_rgb(1, 1, vec![255, 0, 0]).unwrap());
    for img in data.images.values_mut() {
        *img = red.clone();
    }
    let store = LifelogStore::assemble(data).unwrap();
    let day = store.days()[0].day_id.clone();
    let p = frame_payload(&store, &day, 0).unwrap();
    assert_eq!(serde_json::to_value(&p).unwrap(), json!({"width": 1, "height": 1, "rgb_base64": "/wAA"}));
}

#[tokio::test]
async fn map_tiles() {
    let app = app();
    let (status, body) = call(&app, "GET", "/api/maps", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["maps"].as_array().unwrap().len(), 6);

    let (status, body) = call(&app, "GET", "/api/maps/color/uniform/levels/0?row0=1&col0=2&rows=2&cols=3", None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!((body["rows"].as_u64(), body["cols"].as_u64()), (Some(2), Some(3)));
    let cells = body["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 6);
    let first = &cells[0];
    assert_eq!(first["empty"], false);
    let url = first["keyframe_url"].as_str().unwrap();
    let (status, _) = call(&app, "GET", url, None).await;
    assert_eq!(status, StatusCode::OK);

    // 27 segments fill a 5×6 level 0, leaving 3 holes
    let (_, body) = call(&app, "GET", "/api/maps/motion/uniform/levels/0", None).await;
    assert_eq!((body["level_rows"].as_u64(), body["level_cols"].as_u64()), (Some(5), Some(6)));
    let cells = body["cells"].as_array().unwrap();
    assert_eq!(cells.iter().filter(|c| c["empty"] == true).count(), 3);

    let (status, body) = call(&app, "GET", "/api/maps/concept:drink/shot/levels/0", None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body) = call(&app, "GET", "/api/maps/concept:unicorn/shot/levels/0", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_criterion");
    let (status, body) = call(&app, "GET", "/api/maps/sharpness/shot/levels/0", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_criterion");
    let (status, body) = call(&app, "GET", "/api/maps/color/shot/levels/9", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_level");
}

#[tokio::test]
async fn dsl_and_structured_queries_agree() {
    let app = app();
    let dsl = "weekday:mon,tue,wed,thu,fri AND time:10:00-14:30 OR concept:drink@0.5";
    let (status, by_text) = call(&app, "POST", "/api/query", Some(json!({ "dsl": dsl }))).await;
    assert_eq!(status, StatusCode::OK, "{by_text}");
    let structured = serde_json::to_value(lifegrid::dsl::parse(dsl).unwrap()).unwrap();
    let (status, by_struct) = call(&app, "POST", "/api/query", Some(json!({ "structured": structured }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(by_text, by_struct);
    assert!(!by_text["entries"].as_array().unwrap().is_empty());

    let (status, body) = call(&app, "POST", "/api/query", Some(json!({ "dsl": "concept:drink AND" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "parse_error");
    assert_eq!(body["detail"]["offset"], 17);

    let (status, body) = call(&app, "POST", "/api/query", Some(json!({ "dsl": "concept:unicorn" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "unknown_concept");

    let (status, body) = call(&app, "POST", "/api/query", Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");

    let (status, body) = call(&app, "POST", "/api/query/explain", Some(json!({ "dsl": "concept:beer AND weekday:sun" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["canonical"], "weekday:sun AND concept:beer");
}

#[tokio::test]
async fn sketch_search() {
    let app = app();
    let mut cells = vec![Value::Null; 16];
    cells[5] = json!(4);
    let (status, body) = call(&app, "POST", "/api/sketch", Some(json!({ "cells": cells, "k": 5 }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let res = body.as_array().unwrap();
    assert_eq!(res.len(), 5);
    assert_eq!(res[0]["rank"], 1);

    let (status, body) = call(&app, "POST", "/api/sketch", Some(json!({ "cells": vec![Value::Null; 16] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "empty_mask");
    let (status, body) = call(&app, "POST", "/api/sketch", Some(json!({ "cells": [1, 2] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");
    let mut cells = vec![Value::Null; 16];
    cells[0] = json!(16);
    let (status, body) = call(&app, "POST", "/api/sketch", Some(json!({ "cells": cells }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_palette_index");
}

#[tokio::test]
async fn similar_segments() {
    let app = app();
    let id = fixture().engine.segmentation().shot.segments()[2].segment_id;
    for metric in ["cosine", "histmap"] {
        let (status, body) = call(&app, "GET", &format!("/api/similar/{id}?metric={metric}&k=4"), None).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let res = body.as_array().unwrap();
        assert_eq!(res.len(), 4);
        assert!(res.iter().all(|r| r["segment_id"] != id));
    }
    let (status, body) = call(&app, "GET", "/api/similar/999999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_segment");
}

#[tokio::test]
async fn task_session_scoring() {
    let clock = Arc::new(ManualClock::default());
    let app = app_with_clock(clock.clone());
    let (status, body) = call(&app, "GET", "/api/tasks/t1/hints", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&body, "unknown_session");

    let (status, body) = call(&app, "POST", "/api/tasks/t1/start", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["hints"].as_array().unwrap().len(), 1);

    clock.advance(Duration::from_secs(60));
    let (_, body) = call(&app, "GET", "/api/tasks/t1/hints", None).await;
    assert_eq!(body["hints"].as_array().unwrap().len(), 3);

    let wrong = json!({ "day_id": "nope", "frame_index": 0 });
    for _ in 0..2 {
        let (_, body) = call(&app, "POST", "/api/tasks/t1/submit", Some(wrong.clone())).await;
        assert_eq!(body["correct"], false);
    }
    clock.advance(Duration::from_secs(30));
    let truth = &fixture().engine.store().days()[0].day_id;
    let task = load_tasks(&fixture().dir.path().join("tasks.csv")).unwrap().remove(0);
    let right = json!({ "day_id": truth, "frame_index": task.truth.start });
    let (status, body) = call(&app, "POST", "/api/tasks/t1/submit", Some(right.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["correct"], true);
    assert_eq!(body["score"], 55.0);
    let (status, body) = call(&app, "POST", "/api/tasks/t1/submit", Some(right)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&body, "already_solved");

    let (status, body) = call(&app, "POST", "/api/tasks/zzz/start", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_task");
}

#[tokio::test]
async fn gets_are_repeatable() {
    let app = app();
    let day = &fixture().engine.store().days()[2].day_id;
    for uri in [
        "/api/health".to_string(),
        "/api/maps/edge/shot/levels/0".to_string(),
        format!("/api/days/{day}/meta"),
        "/api/similar/3?metric=histmap".to_string(),
    ] {
        let a = call(&app, "GET", &uri, None).await;
        let b = call(&app, "GET", &uri, None).await;
        assert_eq!(a, b, "{uri}");
        assert_eq!(a.0, StatusCode::OK, "{uri}");
    }
}

#[tokio::test]
async fn serves_static_files() {
    let site = tempfile::tempdir().unwrap();
    std::fs::write(site.path().join("index.html"), "<html>hi</html>").unwrap();
    let f = fixture();
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::default());
    let app = router(
        AppState { engine: f.engine.clone(), tasks: Arc::new(TaskHarness::new(Vec::new(), clock)) },
        Some(site.path().to_path_buf()),
    );
    let res = app.oneshot(Request::get("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], b"<html>hi</html>");
}
