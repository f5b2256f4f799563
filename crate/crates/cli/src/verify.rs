use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use ooc_verify::evaluation::write_atomic;
use ooc_verify::image::content_digest;
use ooc_verify::pipeline::{Pipeline, VerificationOutcome, VerificationTrace};
use ooc_verify::reasoning::FinalVerdict;
use ooc_verify::types::{ClaimPair, EvidenceCandidate};
use ooc_verify::Error;

use crate::{absolute, report_error, CommonArgs, Overrides, EXIT_ERROR, EXIT_NOOC, EXIT_OOC};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Claim image file.
    #[arg(long)]
    pub image: PathBuf,
    /// Claim caption.
    #[arg(long)]
    pub caption: String,
    /// Print the verdict as JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Where the trace file is written.
    #[arg(long, default_value = ".ooc-traces")]
    pub trace_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Stable id for a claim under a given config.
pub fn trace_id(image: &[u8], caption: &str, fingerprint: &str) -> String {
    let key = format!("{}\n{caption}\n{fingerprint}", content_digest(image));
    content_digest(key.as_bytes())[..16].to_string()
}

pub fn run(args: &VerifyArgs) -> u8 {
    let (outcome, trace_path) = match verify(args) {
        Ok(x) => x,
        Err(e) => {
            report_error(&e);
            return EXIT_ERROR;
        }
    };
    match &outcome.result {
        Ok(verdict) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(verdict).expect("verdict serializes"));
            } else {
                print!("{}", render(verdict, &outcome.trace));
                println!("trace: {}", trace_path.display());
            }
            if verdict.label.is_ooc() {
                EXIT_OOC
            } else {
                EXIT_NOOC
            }
        }
        Err(e) => {
            report_error(e);
            eprintln!("trace: {}", trace_path.display());
            EXIT_ERROR
        }
    }
}

/// Run the pipeline and write the trace. Errors here are setup failures;
/// pipeline failures come back inside the outcome.
fn verify(args: &VerifyArgs) -> Result<(VerificationOutcome, PathBuf), Error> {
    let config = args.common.load_config(|c| args.overrides.apply(c))?;
    let pipeline = Pipeline::from_config(&config, &args.common.runtime())?;
    let image_path = absolute(&args.image);
    let bytes = std::fs::read(&image_path).map_err(|e| Error::ImageUnreadable {
        reference: image_path.display().to_string(),
        reason: e.to_string(),
    })?;
    let id = trace_id(&bytes, &args.caption, pipeline.fingerprint());
    let claim = ClaimPair::new(id.clone(), image_path.display().to_string(), args.caption.clone());
    let outcome = pipeline.verify(&claim);
    let trace_path = write_trace(&args.trace_dir, &id, &outcome.trace)?;
    Ok((outcome, trace_path))
}

pub fn write_trace(dir: &Path, id: &str, trace: &VerificationTrace) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::ReportIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(format!("{id}.json"));
    let json = serde_json::to_string_pretty(trace).expect("trace serializes") + "\n";
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

fn candidates(trace: &VerificationTrace) -> impl Iterator<Item = &EvidenceCandidate> {
    trace
        .text_retrieval
        .iter()
        .chain(trace.image_retrieval.iter())
        .flat_map(|r| r.candidates.iter())
}

fn score(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

/// Verdict, explanation, and the ranked evidence table.
pub fn render(verdict: &FinalVerdict, trace: &VerificationTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (confidence {}/10)", verdict.label, verdict.confidence);
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", verdict.explanation);
    let _ = writeln!(out);
    if trace.ranked.is_empty() {
        let _ = writeln!(out, "no evidence passed the filters");
        return out;
    }
    let _ = writeln!(
        out,
        "{:<4} {:<5} {:<22} {:>6} {:>6}  {:<4} url",
        "rank", "id", "domain", "text", "visual", "used"
    );
    for (i, entry) in trace.ranked.iter().enumerate() {
        let c = candidates(trace).find(|c| c.id == entry.candidate_id);
        let in_top_k = trace.top_k.contains(&entry.candidate_id);
        let cited = verdict.evidence_ids.contains(&entry.candidate_id);
        let used = match (in_top_k, cited) {
            (_, true) => "cite",
            (true, false) => "top",
            _ => "",
        };
        let _ = writeln!(
            out,
            "{:<4} {:<5} {:<22} {:>6} {:>6}  {:<4} {}",
            i + 1,
            entry.candidate_id,
            c.map_or("?", |c| c.domain.as_str()),
            score(entry.scores.and_then(|s| s.text_sim)),
            score(entry.scores.and_then(|s| s.visual_sim)),
            used,
            c.map_or("", |c| c.source_url.as_str()),
        );
    }
    out
}
