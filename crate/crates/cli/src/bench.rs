use std::path::PathBuf;

use clap::{Args, Subcommand};

use ooc_verify::cache::EvidenceCache;
use ooc_verify::evaluation::{run_benchmark as run, BenchmarkOptions};
use ooc_verify::pipeline::Pipeline;
use ooc_verify::Error;

use crate::{absolute, report_error, CommonArgs, Overrides, EXIT_ERROR};

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Newline-delimited dataset of {id, image_path, caption, ooc}.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for report.json, timings.json, and traces/.
    #[arg(long)]
    pub report: PathBuf,
    /// Worker threads; the config value when omitted.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Similarity threshold.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Drop candidates from the caption search.
    #[arg(long)]
    pub drop_text_evidence: bool,
    /// Drop candidates from the reverse-image search.
    #[arg(long)]
    pub drop_image_evidence: bool,
    /// Skip the domain allowlist stage.
    #[arg(long)]
    pub disable_domain_filter: bool,
    /// Skip domain-title deduplication.
    #[arg(long)]
    pub no_dedup: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn run_benchmark(args: &BenchmarkArgs) -> u8 {
    let result = (|| -> Result<String, Error> {
        let config = args.common.load_config(|c| {
            args.overrides.apply(c);
            if let Some(t) = args.theta {
                c.filter.theta = t;
            }
            if let Some(w) = args.workers {
                c.benchmark.workers = w;
            }
            c.filter.drop_text_evidence |= args.drop_text_evidence;
            c.filter.drop_image_evidence |= args.drop_image_evidence;
            c.filter.disable_domain_filter |= args.disable_domain_filter;
            if args.no_dedup {
                c.filter.dedup_enabled = false;
            }
        })?;
        let pipeline = Pipeline::from_config(&config, &args.common.runtime())?;
        let report = run(
            &absolute(&args.dataset),
            &pipeline,
            &BenchmarkOptions {
                report_dir: args.report.clone(),
                workers: config.benchmark.workers,
            },
        )?;
        Ok(report.summary_line())
    })();
    match result {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            report_error(&e);
            EXIT_ERROR
        }
    }
}

#[derive(Args, Debug)]
pub struct CacheArgs {
    /// Evidence cache directory.
    #[arg(long, default_value = ".ooc-cache", global = true)]
    pub cache_dir: PathBuf,
    #[command(subcommand)]
    pub action: CacheAction,
}

#[derive(Subcommand, Debug)]
pub enum CacheAction {
    /// List entries as `key<TAB>bytes<TAB>stored_at`.
    Ls,
    /// Delete every entry.
    Clear,
    /// Write all entries to a tar archive (gzip when named *.gz or *.tgz).
    Export { tarball: PathBuf },
}

pub fn run_cache(args: &CacheArgs) -> u8 {
    let cache = EvidenceCache::new(&args.cache_dir);
    let result = match &args.action {
        CacheAction::Ls => cache.list().map(|entries| {
            for e in &entries {
                println!("{}\t{}\t{}", e.key, e.size, e.stored_at);
            }
            eprintln!("{} entries", entries.len());
        }),
        CacheAction::Clear => cache.clear().map(|n| println!("removed {n} entries")),
        CacheAction::Export { tarball } => cache
            .export(tarball)
            .map(|n| println!("exported {n} entries to {}", tarball.display())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            EXIT_ERROR
        }
    }
}
