//! Drives the HTTP API in-process against a small synthetic dataset.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use lifegrid::engine::{Engine, EngineConfig};
use lifegrid::ingest::synthetic::{synthesize, SyntheticSpec};
use lifegrid::task::{tasks_from_rows, Clock, SystemClock, TaskHarness};
use lifegrid_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> anyhow::Result<Value> {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))?;
    let res = app.clone().oneshot(req).await?;
    let status = res.status();
    let value: Value = serde_json::from_slice(&res.into_body().collect().await?.to_bytes())?;
    println!("{method} {uri} -> {status}");
    Ok(value)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let data = synthesize(&SyntheticSpec::new(1, 3, 120));
    let tasks = tasks_from_rows(&data.tasks)?;
    let engine = Arc::new(Engine::build(data.to_store()?, EngineConfig::default())?);
    let clock: Arc<dyn Clock> = Arc::new(SystemClock::default());
    let app = router(AppState { engine, tasks: Arc::new(TaskHarness::new(tasks, clock)) }, None);

    println!("{}\n", call(&app, "GET", "/api/health", None).await?);

    let tile = call(&app, "GET", "/api/maps/color/uniform/levels/0?row0=0&col0=0&rows=2&cols=3", None).await?;
    println!("{}\n", tile);

    let q = json!({ "dsl": "activity:walking OR concept:drink@0.8", "method": "shot" });
    let hits = call(&app, "POST", "/api/query", Some(q)).await?;
    let first = hits["entries"][0]["segment_id"].as_u64();
    println!("{} segments\n", hits["entries"].as_array().map_or(0, Vec::len));

    let bad = call(&app, "POST", "/api/query", Some(json!({ "dsl": "time:07:00-" }))).await?;
    println!("{bad}\n");

    if let Some(id) = first {
        let similar = call(&app, "GET", &format!("/api/similar/{id}?metric=histmap&k=3"), None).await?;
        println!("{similar}\n");
    }

    let mut cells = vec![Value::Null; 16];
    cells[0] = json!(12);
    cells[5] = json!(12);
    println!("{}\n", call(&app, "POST", "/api/sketch", Some(json!({ "cells": cells, "k": 3 }))).await?);

    let tasks = call(&app, "GET", "/api/tasks", None).await?;
    if let Some(id) = tasks["tasks"][0]["task_id"].as_str() {
        println!("{}", call(&app, "POST", &format!("/api/tasks/{id}/start"), None).await?);
    }
    Ok(())
}
