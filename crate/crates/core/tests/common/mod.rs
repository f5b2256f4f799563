#![allow(dead_code)]

pub mod gen;

use std::path::{Path, PathBuf};

use ooc_verify::config::Config;
use ooc_verify::evaluation::{run_benchmark, BenchmarkOptions, EvalReport};
use ooc_verify::pipeline::{Pipeline, RuntimeOptions};

pub fn suite_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/suite")
}

/// The suite config, resolved without consulting the process environment.
pub fn suite_config() -> Config {
    let dir = suite_dir();
    let text = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    Config::from_toml_str(&text, dir).unwrap().resolve(|_| None).unwrap()
}

pub fn run_suite(config: &Config, runtime: &RuntimeOptions, report_dir: &Path) -> EvalReport {
    let pipeline = Pipeline::from_config(config, runtime).unwrap();
    run_benchmark(
        &suite_dir().join("dataset.jsonl"),
        &pipeline,
        &BenchmarkOptions {
            report_dir: report_dir.to_path_buf(),
            workers: config.benchmark.workers,
        },
    )
    .unwrap()
}
