//! `ooc-verify`: verify image/caption pairs, run benchmarks, manage the
//! evidence cache, or serve a verification endpoint.
//!
//! Exit codes for `verify`: 0 = NOOC, 1 = OOC, 2 = error. Every other
//! command exits 0 on success and 2 on error.

mod bench;
mod serve;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ooc_verify::config::Config;
use ooc_verify::filtering::FilterStrategy;
use ooc_verify::pipeline::RuntimeOptions;
use ooc_verify::Error;

pub const EXIT_NOOC: u8 = 0;
pub const EXIT_OOC: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "ooc-verify", version, about = "Training-free out-of-context image/caption verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify one image/caption pair. Exit 0 = NOOC, 1 = OOC, 2 = error.
    Verify(verify::VerifyArgs),
    /// Run the pipeline over a dataset and write an accuracy report.
    Benchmark(bench::BenchmarkArgs),
    /// Inspect or manage the evidence cache.
    Cache(bench::CacheArgs),
    /// Serve `POST /verify` and `GET /health`.
    Serve(serve::ServeArgs),
}

/// Options shared by every command that builds a pipeline.
#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Evidence cache directory.
    #[arg(long, default_value = ".ooc-cache")]
    pub cache_dir: PathBuf,
    /// Serve retrieval from the cache only; a miss is an error.
    #[arg(long)]
    pub offline: bool,
}

/// Flags that override the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Number of ranked candidates passed to the reasoner.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Filter strategy: both, similarity, or domain.
    #[arg(long)]
    pub strategy: Option<FilterStrategy>,
}

impl CommonArgs {
    pub fn runtime(&self) -> RuntimeOptions {
        RuntimeOptions {
            cache_dir: Some(self.cache_dir.clone()),
            offline: self.offline,
        }
    }

    /// Parse the config, apply `edit`, then resolve against the process
    /// environment.
    pub fn load_config(&self, edit: impl FnOnce(&mut Config)) -> Result<Config, Error> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid {
                    key: "<file>".into(),
                    reason: format!("{}: {e}", path.display()),
                })?;
                let base = absolute(path.parent().unwrap_or(Path::new(".")));
                Config::from_toml_str(&text, base)?
            }
            None => Config::from_toml_str("", absolute(Path::new(".")))?,
        };
        edit(&mut config);
        config.resolve(|k| std::env::var(k).ok())
    }
}

impl Overrides {
    pub fn apply(&self, config: &mut Config) {
        if let Some(k) = self.top_k {
            config.ranking.top_k = k;
        }
        if let Some(s) = self.strategy {
            config.filter.strategy = s;
        }
    }
}

pub fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

pub fn report_error(e: &Error) {
    eprintln!("error [{}]: {e}", e.code());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify(args) => verify::run(&args),
        Command::Benchmark(args) => bench::run_benchmark(&args),
        Command::Cache(args) => bench::run_cache(&args),
        Command::Serve(args) => serve::run(&args),
    };
    ExitCode::from(code)
}
