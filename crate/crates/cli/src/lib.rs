//! Library side of the `pupilbench` binary, split out so the commands and
//! the HTTP router can be tested in-process.

pub mod args;
pub mod commands;
pub mod overlay;
pub mod server;

use std::net::SocketAddr;

use args::{Cli, Command};
use commands::{CommandError, EXIT_USAGE};

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Detect {
            image,
            method,
            overlay,
            params,
        } => commands::detect(&image, method, overlay.as_deref(), &params, &mut stdout),
        Command::Bench {
            manifest,
            out,
            methods,
            repeat,
            params,
        } => commands::bench(&manifest, &out, &methods, repeat, &params, &mut stdout),
        Command::Synth {
            count,
            seed,
            out,
            proportions,
        } => commands::synth(count, seed, &out, &proportions, &mut stdout),
        Command::AnnotateServe {
            dir,
            port,
            manifest,
            static_dir,
            bind,
        } => serve(&dir, port, manifest, static_dir, bind),
    };
    match result {
        Ok(code) => code,
        Err(CommandError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn serve(
    dir: &std::path::Path,
    port: u16,
    manifest: Option<std::path::PathBuf>,
    static_dir: Option<std::path::PathBuf>,
    bind: std::net::IpAddr,
) -> Result<i32, CommandError> {
    let state = server::AppState::open(dir, manifest, static_dir).map_err(CommandError)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(server::serve(state, SocketAddr::new(bind, port)))
        .map_err(CommandError)?;
    Ok(0)
}
