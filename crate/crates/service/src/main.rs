use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::Parser;
use lifegrid::engine::Engine;
use lifegrid::task::{load_tasks, Clock, SystemClock, TaskHarness};
use lifegrid_service::{router, AppState, ServerArgs};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let mut cli = ServerArgs::parse();
    cli.apply_env(|k| std::env::var(k).ok()).map_err(|e| anyhow!(e))?;
    let Some(dataset) = cli.dataset.clone() else {
        bail!("no dataset given (use --dataset or LIFEGRID_DATASET)");
    };
    if !dataset.is_dir() {
        bail!("dataset root {} is not a directory", dataset.display());
    }
    let config = cli.engine_config();
    let tasks = load_tasks(&dataset.join("tasks.csv")).context("loading tasks.csv")?;
    let started = std::time::Instant::now();
    let engine = tokio::task::spawn_blocking(move || Engine::load(&dataset, config)).await??;
    tracing::info!(summary = ?engine.summary(), elapsed = ?started.elapsed(), "dataset ready");
    let clock: Arc<dyn Clock> = Arc::new(SystemClock::default());
    let state = AppState { engine: Arc::new(engine), tasks: Arc::new(TaskHarness::new(tasks, clock)) };
    let app = router(state, cli.static_dir.clone());

    let addr = SocketAddr::from(([0, 0, 0, 0], cli.port));
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
