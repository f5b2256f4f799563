//! Seeded generators shared by the property and acceptance tests.

use rand::seq::SliceRandom;
use rand::Rng;

use ooc_verify::reasoning::{CandidateAssessment, FinalVerdict, KeyElements, Label, Stage1Assessment, Stance};
use ooc_verify::similarity::{ScoredCandidate, SimilarityScores};
use ooc_verify::types::{EvidenceCandidate, Origin};

pub const DOMAINS: [&str; 6] = [
    "bbc.co.uk",
    "theguardian.com",
    "usatoday.com",
    "washingtonpost.com",
    "example-news.net",
    "aggregator.io",
];

pub fn candidate(id: &str, origin: Origin, domain: &str, title: Option<&str>, snippet: Option<&str>) -> EvidenceCandidate {
    EvidenceCandidate {
        id: id.into(),
        origin,
        source_url: format!("https://www.{domain}/{id}"),
        domain: domain.into(),
        title: title.map(str::to_string),
        snippet: snippet.map(str::to_string),
        image_ref: None,
        published_at: None,
        language: None,
        raw_meta: Default::default(),
    }
}

/// A score on a 0.001 grid. Draws cluster around a few centres so that
/// borderline bands and exact ties both occur often.
fn grid_score<R: Rng>(rng: &mut R, centres: &[f64]) -> f64 {
    let base = if rng.gen_bool(0.7) {
        centres[rng.gen_range(0..centres.len())] + rng.gen_range(-12i32..=12) as f64 / 1000.0
    } else {
        rng.gen_range(0..=1000) as f64 / 1000.0
    };
    (base.clamp(0.0, 1.0) * 1000.0).round() / 1000.0
}

/// `n` scored candidates; about a fifth lack a visual score and a fifth of
/// the rest lack a textual one.
pub fn scored_set<R: Rng>(rng: &mut R, n: usize) -> Vec<ScoredCandidate> {
    let centres: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..0.95)).collect();
    (0..n)
        .map(|i| {
            let visual = (!rng.gen_bool(0.2)).then(|| grid_score(rng, &centres));
            let text = if visual.is_some() && rng.gen_bool(0.2) {
                None
            } else {
                Some(grid_score(rng, &centres))
            };
            let origin = if rng.gen_bool(0.5) { Origin::TextSearch } else { Origin::ImageSearch };
            let domain = DOMAINS[rng.gen_range(0..DOMAINS.len())];
            ScoredCandidate::new(
                candidate(&format!("c{i}"), origin, domain, Some(&format!("title {i}")), Some("snippet")),
                SimilarityScores::new(text, visual),
            )
        })
        .collect()
}

/// Titles whose normalized forms are pairwise distinct.
pub const BASE_TITLES: [&str; 6] = [
    "Flood waters rise in the city centre",
    "Protesters gather outside parliament",
    "Wildfire spreads across the valley",
    "Election results announced tonight",
    "Storm damages coastal homes",
    "Rescue teams search the rubble",
];

/// A variant of `title` that normalizes to the same string: case changes,
/// punctuation next to word boundaries, and extra whitespace.
pub fn near_duplicate<R: Rng>(rng: &mut R, title: &str) -> String {
    let mut out = String::new();
    if rng.gen_bool(0.3) {
        out.push_str("  ");
    }
    for (i, word) in title.split(' ').enumerate() {
        if i > 0 {
            out.push_str(if rng.gen_bool(0.2) { " \t " } else { " " });
        }
        if rng.gen_bool(0.15) {
            out.push(['"', '(', '\'', '#'][rng.gen_range(0..4)]);
        }
        for ch in word.chars() {
            if rng.gen_bool(0.3) {
                out.extend(ch.to_uppercase());
            } else {
                out.extend(ch.to_lowercase());
            }
        }
        if rng.gen_bool(0.2) {
            out.push([',', ':', '!', '?', '.', ')'][rng.gen_range(0..6)]);
        }
    }
    if rng.gen_bool(0.3) {
        out.push_str("!! ");
    }
    out
}

/// Candidates built from a few domains and base titles, each title
/// perturbed independently. Returns the candidates and, for each, the
/// `(domain, base title index)` group it belongs to by construction, or
/// `None` when it has no title.
pub fn dedup_set<R: Rng>(rng: &mut R, n: usize) -> (Vec<ScoredCandidate>, Vec<Option<(String, usize)>>) {
    let mut xs = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        let domain = DOMAINS[rng.gen_range(0..3)];
        let group = (!rng.gen_bool(0.1)).then(|| rng.gen_range(0..BASE_TITLES.len()));
        let title = group.map(|g| near_duplicate(rng, BASE_TITLES[g]));
        xs.push(ScoredCandidate::new(
            candidate(&format!("d{i}"), Origin::TextSearch, domain, title.as_deref(), Some("snippet")),
            SimilarityScores::new(Some(0.9), None),
        ));
        groups.push(group.map(|g| (domain.to_string(), g)));
    }
    (xs, groups)
}

const ALPHABET: &[char] = &[
    'a', 'b', 'Z', '0', '9', ' ', ' ', '\n', '\t', '"', '\\', '`', '{', '}', '[', ']', ':', ',', 'é', '中', '🙂', '\u{0}',
    '#', '/',
];

/// Random text drawn from characters that stress JSON escaping and fence
/// detection. Trimmed, since the parsers trim free text.
pub fn nasty_text<R: Rng>(rng: &mut R, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    let s: String = (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect();
    s.trim().to_string()
}

fn nonempty_text<R: Rng>(rng: &mut R, max_len: usize) -> String {
    loop {
        let s = nasty_text(rng, max_len);
        if !s.is_empty() {
            return s;
        }
    }
}

fn string_list<R: Rng>(rng: &mut R) -> Vec<String> {
    (0..rng.gen_range(0..3)).map(|_| nasty_text(rng, 8)).collect()
}

/// A valid Stage 1 assessment over `ids` in random order.
pub fn stage1_assessment<R: Rng>(rng: &mut R, ids: &[String]) -> Stage1Assessment {
    let mut order = ids.to_vec();
    order.shuffle(rng);
    let stances = [Stance::Supports, Stance::Refutes, Stance::Irrelevant];
    Stage1Assessment {
        per_candidate: order
            .into_iter()
            .map(|id| CandidateAssessment {
                candidate_id: id,
                stance: stances[rng.gen_range(0..3)],
                rationale: nasty_text(rng, 40),
                key_elements: KeyElements {
                    entities: string_list(rng),
                    time: string_list(rng),
                    place: string_list(rng),
                },
            })
            .collect(),
        summary: nasty_text(rng, 40),
    }
}

/// A valid verdict citing a subset of `ids`.
pub fn verdict<R: Rng>(rng: &mut R, ids: &[String]) -> FinalVerdict {
    let mut cited: Vec<String> = ids.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    cited.shuffle(rng);
    FinalVerdict {
        label: Label::from_ooc(rng.gen_bool(0.5)),
        confidence: rng.gen_range(0..=10),
        explanation: nonempty_text(rng, 60),
        evidence_ids: cited,
    }
}

/// Candidate ids as the retrieval layer assigns them.
pub fn submitted_ids<R: Rng>(rng: &mut R) -> Vec<String> {
    let t = rng.gen_range(0..4);
    let v = rng.gen_range(0..4);
    (1..=t).map(|i| format!("t{i}")).chain((1..=v).map(|i| format!("v{i}"))).collect()
}
