//! Dataset loading, benchmark runs and All/OOC/NOOC accuracy.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::image::ImageResolver;
use crate::pipeline::{ErrorInfo, Pipeline, Timings, VerificationOutcome};
use crate::reasoning::Label;
use crate::types::ClaimPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub image_path: String,
    pub caption: String,
    /// `true` marks a falsified (out-of-context) pair.
    pub ooc: bool,
}

impl DatasetRecord {
    pub fn claim(&self) -> ClaimPair {
        ClaimPair::new(&self.id, &self.image_path, &self.caption).with_gold(self.ooc)
    }
}

fn malformed(locus: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::DatasetMalformed {
        locus: locus.into(),
        reason: reason.into(),
    }
}

/// Read newline-delimited `{id, image_path, caption, ooc}` records. Blank
/// lines are skipped; unknown fields are ignored. Image paths are resolved
/// against the dataset's directory and must exist.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(path).map_err(|e| malformed(path.display().to_string(), e.to_string()))?;
    let resolver = ImageResolver::new(path.parent().unwrap_or(Path::new(".")));
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let value: Value =
            serde_json::from_str(line).map_err(|e| malformed(format!("line {lineno}"), format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(format!("line {lineno}"), "record is not an object"))?;
        let id = match obj.get("id") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(malformed(format!("line {lineno}"), "missing or empty `id`")),
        };
        let locus = format!("line {lineno} (record `{id}`)");
        let text_field = |key: &str| -> Result<String> {
            match obj.get(key) {
                Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
                Some(Value::String(_)) => Err(malformed(&locus, format!("empty `{key}`"))),
                Some(_) => Err(malformed(&locus, format!("`{key}` must be a string"))),
                None => Err(malformed(&locus, format!("missing `{key}`"))),
            }
        };
        let image_path = text_field("image_path")?;
        let caption = text_field("caption")?;
        let ooc = match obj.get("ooc") {
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(malformed(&locus, "`ooc` must be a boolean")),
            None => return Err(malformed(&locus, "missing `ooc`")),
        };
        if let Some(p) = resolver.resolve_path(&image_path) {
            if !p.is_file() {
                return Err(malformed(&locus, format!("image `{image_path}` not found")));
            }
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        records.push(DatasetRecord {
            id,
            image_path,
            caption,
            ooc,
        });
    }
    Ok(records)
}

/// Exact accuracy counts. Accuracies are `None` when their class is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub n_total: u64,
    pub n_ooc: u64,
    pub n_nooc: u64,
    pub correct_ooc: u64,
    pub correct_nooc: u64,
    pub n_failed: u64,
}

fn ratio(num: u64, den: u64) -> Option<Ratio<u64>> {
    (den > 0).then(|| Ratio::new(num, den))
}

impl Metrics {
    pub fn acc_all(&self) -> Option<Ratio<u64>> {
        ratio(self.correct_ooc + self.correct_nooc, self.n_total)
    }

    pub fn acc_ooc(&self) -> Option<Ratio<u64>> {
        ratio(self.correct_ooc, self.n_ooc)
    }

    pub fn acc_nooc(&self) -> Option<Ratio<u64>> {
        ratio(self.correct_nooc, self.n_nooc)
    }
}

/// Score predictions against gold labels. A `None` prediction is a failed
/// sample and counts as incorrect. Predictions for ids outside `gold` are
/// ignored.
pub fn evaluate(predictions: &BTreeMap<String, Option<Label>>, gold: &[(String, bool)]) -> Result<Metrics> {
    let mut m = Metrics {
        n_total: 0,
        n_ooc: 0,
        n_nooc: 0,
        correct_ooc: 0,
        correct_nooc: 0,
        n_failed: 0,
    };
    for (id, ooc) in gold {
        let predicted = predictions
            .get(id)
            .ok_or_else(|| Error::MissingPrediction(id.clone()))?;
        m.n_total += 1;
        if *ooc {
            m.n_ooc += 1;
        } else {
            m.n_nooc += 1;
        }
        match predicted {
            None => m.n_failed += 1,
            Some(label) if label.is_ooc() == *ooc => {
                if *ooc {
                    m.correct_ooc += 1;
                } else {
                    m.correct_nooc += 1;
                }
            }
            Some(_) => {}
        }
    }
    Ok(m)
}

fn to_f64(r: Option<Ratio<u64>>) -> Option<f64> {
    r.map(|r| *r.numer() as f64 / *r.denom() as f64)
}

fn counts(num: u64, den: u64) -> Option<String> {
    (den > 0).then(|| format!("{num}/{den}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub id: String,
    pub predicted: Option<Label>,
    pub gold: Label,
    pub confidence: Option<u8>,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub evidence_ids: Vec<String>,
    pub trace_path: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencySummary {
    pub mean_latency_retrieval: f64,
    pub mean_latency_reasoning: f64,
    pub mean_latency_overhead: f64,
    pub median_latency_overhead: f64,
    pub per_sample: BTreeMap<String, Timings>,
}

impl LatencySummary {
    fn from_samples(per_sample: BTreeMap<String, Timings>) -> Self {
        let n = per_sample.len().max(1) as f64;
        let mean = |f: fn(&Timings) -> f64| per_sample.values().map(f).sum::<f64>() / n;
        let mut overheads: Vec<f64> = per_sample.values().map(|t| t.overhead_s).collect();
        overheads.sort_by(f64::total_cmp);
        let median = match overheads.len() {
            0 => 0.0,
            n if n % 2 == 1 => overheads[n / 2],
            n => (overheads[n / 2 - 1] + overheads[n / 2]) / 2.0,
        };
        Self {
            mean_latency_retrieval: mean(|t| t.retrieval_s),
            mean_latency_reasoning: mean(|t| t.reasoning_s),
            mean_latency_overhead: mean(|t| t.overhead_s),
            median_latency_overhead: median,
            per_sample,
        }
    }
}

/// Benchmark report. Wall-clock latencies are kept out of the serialized
/// report so that replayed runs produce identical bytes; they are written
/// next to it as `timings.json`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub n_total: u64,
    pub n_ooc: u64,
    pub n_nooc: u64,
    pub correct_ooc: u64,
    pub correct_nooc: u64,
    pub n_failed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_all: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_ooc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_nooc: Option<f64>,
    /// The same accuracies as reduced fractions.
    pub exact: BTreeMap<&'static str, String>,
    pub config_fingerprint: String,
    pub per_sample: Vec<SampleResult>,
    #[serde(skip)]
    pub metrics: Option<Metrics>,
    #[serde(skip)]
    pub latency: Option<LatencySummary>,
}

impl EvalReport {
    pub fn new(metrics: Metrics, config_fingerprint: String, per_sample: Vec<SampleResult>) -> Self {
        let mut exact_map = BTreeMap::new();
        for (k, v) in [
            ("acc_all", counts(metrics.correct_ooc + metrics.correct_nooc, metrics.n_total)),
            ("acc_ooc", counts(metrics.correct_ooc, metrics.n_ooc)),
            ("acc_nooc", counts(metrics.correct_nooc, metrics.n_nooc)),
        ] {
            if let Some(v) = v {
                exact_map.insert(k, v);
            }
        }
        Self {
            n_total: metrics.n_total,
            n_ooc: metrics.n_ooc,
            n_nooc: metrics.n_nooc,
            correct_ooc: metrics.correct_ooc,
            correct_nooc: metrics.correct_nooc,
            n_failed: metrics.n_failed,
            acc_all: to_f64(metrics.acc_all()),
            acc_ooc: to_f64(metrics.acc_ooc()),
            acc_nooc: to_f64(metrics.acc_nooc()),
            exact: exact_map,
            config_fingerprint,
            per_sample,
            metrics: Some(metrics),
            latency: None,
        }
    }

    /// `all=<pct> ooc=<pct> nooc=<pct> n=<count>`; an empty class prints `n/a`.
    pub fn summary_line(&self) -> String {
        let pct = |a: Option<f64>| a.map_or_else(|| "n/a".to_string(), |a| format!("{:.2}", a * 100.0));
        format!(
            "all={} ooc={} nooc={} n={}",
            pct(self.acc_all),
            pct(self.acc_ooc),
            pct(self.acc_nooc),
            self.n_total
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub report_dir: PathBuf,
    pub workers: usize,
}

/// File name for a sample's trace; ids that are not filesystem-safe are
/// rewritten and suffixed with a digest to stay unique.
pub fn trace_file_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if safe == id && !id.starts_with('.') {
        format!("{id}.json")
    } else {
        use sha2::{Digest, Sha256};
        let digest = hex::encode(Sha256::digest(id.as_bytes()));
        format!("{}-{}.json", safe.trim_start_matches('.'), &digest[..12])
    }
}

/// Write `bytes` to `path` via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::ReportIo {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

/// Run every record through `pipeline` on a pool of `workers` threads and
/// write `report.json`, `timings.json` and `traces/<id>.json` under
/// `report_dir`. Per-sample failures are recorded, never fatal.
pub fn run_benchmark(dataset: &Path, pipeline: &Pipeline, options: &BenchmarkOptions) -> Result<EvalReport> {
    let records = load_dataset(dataset)?;
    let base = dataset.parent().unwrap_or(Path::new(".")).to_path_buf();
    let pipeline = pipeline.clone().with_claim_base(base);

    let traces_dir = options.report_dir.join("traces");
    fs::create_dir_all(&traces_dir).map_err(|source| Error::ReportIo {
        path: traces_dir.clone(),
        source,
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::config("benchmark.workers", e))?;
    let outcomes: Vec<(DatasetRecord, VerificationOutcome)> = pool.install(|| {
        records
            .par_iter()
            .map(|r| (r.clone(), pipeline.verify(&r.claim())))
            .collect()
    });
    let mut outcomes = outcomes;
    outcomes.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let mut predictions = BTreeMap::new();
    let mut gold = Vec::with_capacity(outcomes.len());
    let mut per_sample = Vec::with_capacity(outcomes.len());
    let mut timings = BTreeMap::new();
    for (record, outcome) in &outcomes {
        let name = trace_file_name(&record.id);
        let trace_json = serde_json::to_string_pretty(&outcome.trace).expect("traces always serialize") + "\n";
        write_atomic(&traces_dir.join(&name), trace_json.as_bytes())?;

        let predicted = outcome.result.as_ref().ok().map(|v| v.label);
        predictions.insert(record.id.clone(), predicted);
        gold.push((record.id.clone(), record.ooc));
        timings.insert(record.id.clone(), outcome.timings);
        per_sample.push(SampleResult {
            id: record.id.clone(),
            predicted,
            gold: Label::from_ooc(record.ooc),
            confidence: outcome.result.as_ref().ok().map(|v| v.confidence),
            correct: predicted.is_some_and(|p| p.is_ooc() == record.ooc),
            error: outcome.result.as_ref().err().map(ErrorInfo::from),
            evidence_ids: outcome.result.as_ref().map(|v| v.evidence_ids.clone()).unwrap_or_default(),
            trace_path: format!("traces/{name}"),
        });
    }

    let metrics = evaluate(&predictions, &gold)?;
    let mut report = EvalReport::new(metrics, pipeline.fingerprint().to_string(), per_sample);
    let latency = LatencySummary::from_samples(timings);
    write_atomic(&options.report_dir.join("report.json"), report.to_json().as_bytes())?;
    let timings_json = serde_json::to_string_pretty(&latency).expect("timings always serialize") + "\n";
    write_atomic(&options.report_dir.join("timings.json"), timings_json.as_bytes())?;
    report.latency = Some(latency);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_dataset(dir: &Path, lines: &[&str]) -> PathBuf {
        fs::write(dir.join("a.img"), b"a").unwrap();
        let p = dir.join("data.jsonl");
        fs::write(&p, lines.join("\n")).unwrap();
        p
    }

    #[test]
    fn loads_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_dataset(
            dir.path(),
            &[
                r#"{"id":"d","image_path":"a.img","caption":"c","ooc":true}"#,
                r#"{"id":"b","image_path":"a.img","caption":"c","ooc":false}"#,
                "",
                r#"{"id":"a","image_path":"a.img","caption":"c","ooc":true,"extra":1}"#,
                r#"{"id":"c","image_path":"a.img","caption":"c","ooc":false}"#,
            ],
        );
        let ids: Vec<_> = load_dataset(&p).unwrap().into_iter().map(|r| r.id).collect();
        assert_eq!(ids, ["d", "b", "a", "c"]);
    }

    #[test]
    fn malformed_records_name_the_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_dataset(
            dir.path(),
            &[
                r#"{"id":"a","image_path":"a.img","caption":"c","ooc":true}"#,
                r#"{"id":"b","image_path":"a.img","ooc":true}"#,
            ],
        );
        match load_dataset(&p).unwrap_err() {
            Error::DatasetMalformed { locus, reason } => {
                assert_eq!(locus, "line 2 (record `b`)");
                assert!(reason.contains("caption"));
            }
            e => panic!("unexpected {e:?}"),
        }
        let p = write_dataset(dir.path(), &[r#"{"id":"a","image_path":"missing.img","caption":"c","ooc":true}"#]);
        assert_eq!(load_dataset(&p).unwrap_err().code(), "EDatasetMalformed");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let line = r#"{"id":"a","image_path":"a.img","caption":"c","ooc":true}"#;
        let p = write_dataset(dir.path(), &[line, line]);
        assert!(matches!(load_dataset(&p).unwrap_err(), Error::DuplicateId(id) if id == "a"));
    }

    fn preds(xs: &[(&str, Option<Label>)]) -> BTreeMap<String, Option<Label>> {
        xs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn gold(xs: &[(&str, bool)]) -> Vec<(String, bool)> {
        xs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn hand_counted_example() {
        // OOC: o1, o2 both right. NOOC: n1 right, n2 wrong -> 3/4, 2/2, 1/2
        let m = evaluate(
            &preds(&[
                ("o1", Some(Label::Ooc)),
                ("o2", Some(Label::Ooc)),
                ("n1", Some(Label::Nooc)),
                ("n2", Some(Label::Ooc)),
            ]),
            &gold(&[("o1", true), ("o2", true), ("n1", false), ("n2", false)]),
        )
        .unwrap();
        assert_eq!(m.acc_all(), Some(Ratio::new(3, 4)));
        assert_eq!(m.acc_ooc(), Some(Ratio::new(1, 1)));
        assert_eq!(m.acc_nooc(), Some(Ratio::new(1, 2)));
        let r = EvalReport::new(m, "f".into(), vec![]);
        assert_eq!(r.summary_line(), "all=75.00 ooc=100.00 nooc=50.00 n=4");
        assert_eq!(r.exact["acc_all"], "3/4");
    }

    #[test]
    fn failures_count_as_wrong_and_missing_is_an_error() {
        let m = evaluate(&preds(&[("a", None)]), &gold(&[("a", true)])).unwrap();
        assert_eq!((m.n_failed, m.acc_all()), (1, Some(Ratio::new(0, 1))));
        assert_eq!(m.acc_nooc(), None);
        let r = EvalReport::new(m, "f".into(), vec![]);
        assert_eq!(r.summary_line(), "all=0.00 ooc=0.00 nooc=n/a n=1");
        assert!(!r.to_json().contains("\"acc_nooc\""));
        assert!(matches!(
            evaluate(&preds(&[]), &gold(&[("a", true)])).unwrap_err(),
            Error::MissingPrediction(id) if id == "a"
        ));
    }

    #[test]
    fn trace_names_are_safe_and_distinct() {
        assert_eq!(trace_file_name("s01"), "s01.json");
        let a = trace_file_name("a/b");
        let b = trace_file_name("a_b");
        assert_ne!(a, b);
        assert!(!a.contains('/'));
        assert!(!trace_file_name("..").starts_with('.'));
    }
}
