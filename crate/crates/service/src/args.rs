use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use lifegrid::engine::EngineConfig;
use lifegrid::segment::{SegmentMethod, SegmentationConfig};

/// Serve a lifelog dataset over HTTP.
///
/// Every flag can also be set through `LIFEGRID_<FLAG>` (for example
/// `LIFEGRID_MIN_LEN`); the environment wins over the command line.
#[derive(Debug, Parser)]
#[command(version)]
pub struct ServerArgs {
    /// Dataset root containing frames.csv.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Default segmentation for endpoints that take no explicit method.
    #[arg(long, default_value = "shot")]
    pub method: SegmentMethod,
    #[arg(long, default_value_t = 0.3)]
    pub theta: f64,
    #[arg(long, default_value_t = 3)]
    pub min_len: usize,
    #[arg(long, default_value_t = 10)]
    pub uniform_rate: usize,
    #[arg(long, default_value_t = 8)]
    pub viewport: usize,
    /// Directory with the browser UI build.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

fn env_override<T: FromStr>(env: &impl Fn(&str) -> Option<String>, name: &str, slot: &mut T) -> Result<(), String>
where
    T::Err: std::fmt::Display,
{
    let key = format!("LIFEGRID_{name}");
    if let Some(raw) = env(&key) {
        *slot = raw.parse().map_err(|e| format!("{key}={raw}: {e}"))?;
    }
    Ok(())
}

impl ServerArgs {
    /// Applies `LIFEGRID_*` variables looked up through `env` on top of the
    /// parsed flags.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), String> {
        let mut dataset = self.dataset.clone().unwrap_or_default();
        env_override(&env, "DATASET", &mut dataset)?;
        self.dataset = (!dataset.as_os_str().is_empty()).then_some(dataset);
        env_override(&env, "PORT", &mut self.port)?;
        env_override(&env, "METHOD", &mut self.method)?;
        env_override(&env, "THETA", &mut self.theta)?;
        env_override(&env, "MIN_LEN", &mut self.min_len)?;
        env_override(&env, "UNIFORM_RATE", &mut self.uniform_rate)?;
        env_override(&env, "VIEWPORT", &mut self.viewport)?;
        let mut static_dir = self.static_dir.clone().unwrap_or_default();
        env_override(&env, "STATIC_DIR", &mut static_dir)?;
        self.static_dir = (!static_dir.as_os_str().is_empty()).then_some(static_dir);
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            segmentation: SegmentationConfig { theta: self.theta, min_len: self.min_len, uniform_rate: self.uniform_rate },
            viewport: self.viewport,
            default_method: self.method,
        }
    }
}
