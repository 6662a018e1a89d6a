//! Configuration, command dispatch and CSV output for the `toge` binary.
//!
//! Commands are looked up by name in [`command_registry`]. Each one reads a
//! validated [`RunConfig`] and writes CSV files under the output directory.

mod commands;
pub mod config;
pub mod csv;

use std::path::{Path, PathBuf};

use crate::error::{Result, TogeError};
use crate::quantize::{scheme_from_config, NormingScheme};
use crate::registry::Registry;

pub use commands::command_registry;
pub use config::{parse_config, Problem, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "TOGE_THREADS";

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn needs_pair(&self) -> bool {
        false
    }
    fn run(&self, ctx: &Context) -> Result<()>;
}

pub type CommandRegistry = Registry<(), dyn Command>;

/// Everything a command needs: validated objects, output location and the
/// selected norming scheme.
pub struct Context {
    pub config: RunConfig,
    pub problem: Problem,
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub scheme: Box<dyn NormingScheme>,
}

impl Context {
    pub fn new(config: RunConfig, problem: Problem, out_dir: PathBuf) -> Result<Self> {
        let scheme = scheme_from_config(&config.quadrature)?;
        Ok(Context {
            config_hash: config.hash(),
            config,
            problem,
            out_dir,
            scheme,
        })
    }

    pub fn write(&self, name: &str, table: &csv::Table) -> Result<PathBuf> {
        let p = table.write(&self.out_dir, name, &self.config_hash)?;
        println!("wrote {} ({} rows)", p.display(), table.len());
        Ok(p)
    }

    pub fn pair(&self) -> Result<&crate::geodesic::GeodesicPair> {
        self.problem
            .pair
            .as_ref()
            .ok_or_else(|| TogeError::schema("u1", "this command needs u1"))
    }
}

/// Validates `config` for `command` and runs it.
pub fn run(command: &str, config: RunConfig, out_dir: &Path) -> Result<()> {
    let registry = command_registry();
    let cmd = registry
        .build(command, &())
        .map_err(|e| TogeError::schema("command", e.to_string()))?;
    let problem = config.validate(cmd.needs_pair().then_some(command))?;
    let ctx = Context::new(config, problem, out_dir.to_path_buf())?;
    cmd.run(&ctx)
}

pub fn exit_code(e: &TogeError) -> i32 {
    match e.root() {
        TogeError::Schema(_) => EXIT_SCHEMA,
        TogeError::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

/// Thread count from the flag, then the environment, then the config.
pub fn resolve_threads(
    flag: Option<usize>,
    env: Option<&str>,
    config: Option<usize>,
) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    if let Some(s) = env.filter(|s| !s.trim().is_empty()) {
        return s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                TogeError::schema(THREADS_ENV, format!("'{s}' is not a positive integer"))
            });
    }
    Ok(config)
}

pub struct Invocation {
    pub command: String,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Runs one invocation and maps the outcome to an exit code, reporting
/// failures on stderr.
pub fn execute(inv: Invocation) -> i32 {
    match execute_inner(inv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute_inner(inv: Invocation) -> Result<()> {
    let config = match &inv.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                TogeError::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?;
            RunConfig::from_json(&text)?
        }
        None if inv.command == "oracle" => {
            RunConfig::minimal(crate::polytope::PolytopeSpec::builtin("interval"))
        }
        None => {
            return Err(TogeError::schema(
                "--config",
                "a configuration file is required",
            ))
        }
    };
    if inv.threads == Some(0) {
        return Err(TogeError::schema("--threads", "must be positive"));
    }
    let env = std::env::var(THREADS_ENV).ok();
    let threads = resolve_threads(inv.threads, env.as_deref(), config.threads)?;
    let out = inv
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| TogeError::Unsupported(format!("thread pool: {e}")))?;
    pool.install(|| run(&inv.command, config, &out))
}
