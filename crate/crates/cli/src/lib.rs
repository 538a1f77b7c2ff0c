//! Configuration, command dispatch and result files for the `tevp` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use tevp_core::par::Execution;

pub use commands::Command;
pub use config::RunConfig;
pub use error::{CliError, ConfigError, Result};
pub use output::RunManifest;

/// Where a run writes: `--out` beats the config's `out`, which beats
/// `tevp-out/<command>`.
pub fn output_dir(cmd: Command, cfg: &RunConfig, cli_out: Option<&Path>) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("tevp-out").join(cmd.name()))
}

fn execute(cmd: Command, cfg: &RunConfig, workers: Option<usize>, dir: &Path) -> Result<RunManifest> {
    let started = output::now();
    let mut sink = output::Sink::new(dir, cfg.checksum())?;
    let surface = cfg.surface()?;
    let exec = if workers == Some(1) {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let ctx = commands::Context { cfg, surface, exec };
    let outcome = commands::dispatch(cmd, &ctx, &mut sink);
    let mut manifest = RunManifest {
        command: cmd.name().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_sha256: sink.checksum.clone(),
        started,
        finished: output::now(),
        status: if outcome.is_ok() { "ok".into() } else { "failed".into() },
        error: outcome.as_ref().err().map(|e| e.to_string()),
        events: std::mem::take(&mut sink.events),
        files: std::mem::take(&mut sink.files),
    };
    manifest.config.out = Some(dir.to_path_buf());
    manifest.config.workers = workers;
    let bytes = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), bytes)?;
    outcome.map(|_| manifest)
}

/// Run one command; the manifest is written whether or not it succeeds.
pub fn run(cmd: Command, cfg: &RunConfig, cli_out: Option<&Path>, cli_workers: Option<usize>) -> Result<RunManifest> {
    let dir = output_dir(cmd, cfg, cli_out);
    let workers = cli_workers.or(cfg.workers);
    if workers == Some(0) {
        return Err(ConfigError {
            field: "workers".into(),
            message: "must be at least 1".into(),
        }
        .into());
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        return pool.install(|| execute(cmd, cfg, workers, &dir));
    }
    execute(cmd, cfg, workers, &dir)
}
