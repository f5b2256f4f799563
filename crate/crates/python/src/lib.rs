//! Python bindings: `ooc_verify.Verifier`, `ooc_verify.benchmark`, and
//! `ooc_verify.config_fingerprint`.
//!
//! Verdicts and reports come back as plain dicts with the same fields as the
//! JSON the CLI prints. Failures raise `ooc_verify.OocError` whose `code`
//! attribute is the stable error code.

use std::path::{Path, PathBuf};

use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ooc_verify::config::Config;
use ooc_verify::evaluation::{run_benchmark, BenchmarkOptions};
use ooc_verify::filtering::FilterStrategy;
use ooc_verify::image::content_digest;
use ooc_verify::pipeline::{Pipeline, RuntimeOptions};
use ooc_verify::types::ClaimPair;
use ooc_verify::Error;

pyo3::create_exception!(ooc_verify, OocError, PyException, "Pipeline error; `code` holds the error code.");

fn to_py(e: Error) -> PyErr {
    let err = OocError::new_err(e.to_string());
    Python::attach(|py| {
        let _ = err.value(py).setattr("code", e.code());
    });
    err
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn load_config(path: Option<&Path>, top_k: Option<usize>, strategy: Option<&str>) -> Result<Config, Error> {
    let (text, base) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| Error::ConfigInvalid {
                key: "<file>".into(),
                reason: format!("{}: {e}", p.display()),
            })?,
            absolute(p.parent().unwrap_or(Path::new("."))),
        ),
        None => (String::new(), absolute(Path::new("."))),
    };
    let mut config = Config::from_toml_str(&text, base)?;
    if let Some(k) = top_k {
        config.ranking.top_k = k;
    }
    if let Some(s) = strategy {
        config.filter.strategy = s.parse::<FilterStrategy>().map_err(|reason| Error::InvalidInput {
            field: "strategy".into(),
            reason,
        })?;
    }
    config.resolve(|k| std::env::var(k).ok())
}

/// A configured pipeline. Construction validates the config and providers.
#[pyclass(frozen)]
struct Verifier {
    pipeline: Pipeline,
}

#[pymethods]
impl Verifier {
    #[new]
    #[pyo3(signature = (config=None, cache_dir=None, offline=false, top_k=None, strategy=None))]
    fn new(
        config: Option<PathBuf>,
        cache_dir: Option<PathBuf>,
        offline: bool,
        top_k: Option<usize>,
        strategy: Option<&str>,
    ) -> PyResult<Self> {
        let config = load_config(config.as_deref(), top_k, strategy).map_err(to_py)?;
        let pipeline = Pipeline::from_config(&config, &RuntimeOptions { cache_dir, offline }).map_err(to_py)?;
        Ok(Self { pipeline })
    }

    /// sha256 of the resolved config.
    #[getter]
    fn fingerprint(&self) -> &str {
        self.pipeline.fingerprint()
    }

    /// Verify one pair. Returns `{label, confidence, explanation,
    /// evidence_ids}`; with `with_trace=True` the dict also has `trace`.
    #[pyo3(signature = (image, caption, with_trace=false))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        image: PathBuf,
        caption: String,
        with_trace: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let image = absolute(&image);
        let outcome = py.detach(|| {
            let digest = std::fs::read(&image).map(|b| content_digest(&b)).unwrap_or_default();
            let key = format!("{digest}\n{caption}\n{}", self.pipeline.fingerprint());
            let id = content_digest(key.as_bytes())[..16].to_string();
            self.pipeline.verify(&ClaimPair::new(id, image.display().to_string(), caption))
        });
        let verdict = outcome.result.map_err(to_py)?;
        let out = json_to_py(py, &serde_json::to_string(&verdict).expect("verdict serializes"))?;
        if with_trace {
            let trace = json_to_py(py, &serde_json::to_string(&outcome.trace).expect("trace serializes"))?;
            out.cast::<PyDict>()?.set_item("trace", trace)?;
        }
        Ok(out)
    }
}

/// Run the benchmark and return report.json as a dict.
#[pyfunction]
#[pyo3(signature = (dataset, report_dir, config=None, cache_dir=None, offline=false, workers=None))]
fn benchmark<'py>(
    py: Python<'py>,
    dataset: PathBuf,
    report_dir: PathBuf,
    config: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    offline: bool,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| -> Result<String, Error> {
            let config = load_config(config.as_deref(), None, None)?;
            let pipeline = Pipeline::from_config(&config, &RuntimeOptions { cache_dir, offline })?;
            let report = run_benchmark(
                &dataset,
                &pipeline,
                &BenchmarkOptions {
                    report_dir,
                    workers: workers.unwrap_or(config.benchmark.workers),
                },
            )?;
            Ok(report.to_json())
        })
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Fingerprint of a config file (or of the defaults) after resolution.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn config_fingerprint(config: Option<PathBuf>) -> PyResult<String> {
    load_config(config.as_deref(), None, None).map(|c| c.fingerprint()).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "ooc_verify")]
fn ooc_verify_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OocError", m.py().get_type::<OocError>())?;
    m.add_class::<Verifier>()?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(config_fingerprint, m)?)?;
    Ok(())
}
