use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use toge::cli::{execute, Invocation};

/// Monge-Ampere and Bergman geodesics of toric Kahler metrics.
#[derive(Parser, Debug)]
#[command(name = "toge", version)]
struct Args {
    /// validate, qconst, pkernel, szego, geodesic, rk, converge, rates or oracle
    command: String,
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config `out_dir`, then `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to TOGE_THREADS)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                toge::cli::EXIT_SCHEMA
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = execute(Invocation {
        command: args.command,
        config: args.config,
        out: args.out,
        threads: args.threads,
    });
    ExitCode::from(code as u8)
}
