//! Experiment driver for the `chainrelay` simulator.
//!
//! Every subcommand writes CSV preceded by `#` metadata lines (tool version,
//! command, seed and the effective JSON configuration). Output depends only
//! on the configuration and seed, never on `--threads`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::Path;

use anyhow::Context;

pub use args::{Cli, Command};
pub use error::CliError;

/// Resolves the configuration, runs the command on a pool of the requested
/// size and returns the output text together with the requested output path.
pub fn execute(cli: &Cli) -> Result<(String, Option<std::path::PathBuf>), CliError> {
    macro_rules! run {
        ($args:expr, $body:path) => {{
            let cfg = $args.resolve()?;
            let text = with_threads(cfg.threads, || $body(&cfg))?;
            Ok((text, cfg.out.clone()))
        }};
    }
    match &cli.command {
        Command::Simulate(a) => run!(a, commands::simulate),
        Command::VerifyDemo(a) => run!(a, commands::verify_demo),
        Command::Analyze(a) => run!(a, commands::analyze),
        Command::Dimension(a) => run!(a, commands::dimension),
        Command::Sweep(a) => run!(a, commands::sweep),
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    body: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => body(),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .context("building thread pool")?
            .install(body),
    }
}

pub fn write_output(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .context("writing to stdout")?,
    }
    Ok(())
}
