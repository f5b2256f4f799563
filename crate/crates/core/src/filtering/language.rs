//! Pluggable language identification for evidence text.

/// Returns a lowercase BCP-47 primary language subtag, or `None` when the
/// text is too short or ambiguous to call.
pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> Option<String>;
}

/// Trigram-profile detector (whatlang). Detections whatlang itself marks
/// unreliable are reported as undetermined.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramDetector;

impl LanguageDetector for TrigramDetector {
    fn detect(&self, text: &str) -> Option<String> {
        let info = whatlang::detect(text)?;
        if !info.is_reliable() {
            return None;
        }
        let code = info.lang().code();
        Some(iso639_3_to_bcp47(code).unwrap_or(code).to_string())
    }
}

/// Two-letter tags for the ISO 639-3 codes whatlang emits.
fn iso639_3_to_bcp47(code: &str) -> Option<&'static str> {
    Some(match code {
        "eng" => "en",
        "spa" => "es",
        "fra" => "fr",
        "deu" => "de",
        "ita" => "it",
        "por" => "pt",
        "nld" => "nl",
        "rus" => "ru",
        "ukr" => "uk",
        "pol" => "pl",
        "ces" => "cs",
        "swe" => "sv",
        "dan" => "da",
        "nob" => "nb",
        "fin" => "fi",
        "tur" => "tr",
        "ell" => "el",
        "heb" => "he",
        "ara" => "ar",
        "pes" => "fa",
        "hin" => "hi",
        "ben" => "bn",
        "cmn" => "zh",
        "jpn" => "ja",
        "kor" => "ko",
        "vie" => "vi",
        "tha" => "th",
        "ind" => "id",
        "ron" => "ro",
        "hun" => "hu",
        "bul" => "bg",
        _ => return None,
    })
}

/// Primary subtag of a BCP-47 tag, lowercased (`en-GB` -> `en`).
pub fn primary_subtag(tag: &str) -> String {
    tag.split(['-', '_']).next().unwrap_or("").trim().to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_and_other_scripts() {
        let d = TrigramDetector;
        assert_eq!(
            d.detect("Flood waters rose overnight across the city centre, forcing hundreds of residents to leave their homes.")
                .as_deref(),
            Some("en")
        );
        assert_eq!(
            d.detect("Наводнение затопило центр города, сотни жителей были вынуждены покинуть свои дома.")
                .as_deref(),
            Some("ru")
        );
        assert_eq!(d.detect("").as_deref(), None);
    }

    #[test]
    fn subtags() {
        assert_eq!(primary_subtag("en-GB"), "en");
        assert_eq!(primary_subtag("EN"), "en");
    }
}
