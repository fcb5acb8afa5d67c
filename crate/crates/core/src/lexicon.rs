//! Pronoun lexicons: surface form to gender category, per language.
//!
//! Two lexicons ship built in (English and Japanese). Additional lexicons can
//! be loaded from a small TSV format:
//!
//! ```text
//! # comment lines start with '#'
//! he	M
//! she	F
//! they	A
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use icu_normalizer::ComposingNormalizerBorrowed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Version tag stamped into reports for the built-in lists.
pub const BUILTIN_VERSION: &str = "builtin-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenderCategory {
    #[serde(rename = "M")]
    Masculine,
    #[serde(rename = "F")]
    Feminine,
    #[serde(rename = "A")]
    Ambiguous,
}

impl GenderCategory {
    pub const ALL: [GenderCategory; 3] = [Self::Masculine, Self::Feminine, Self::Ambiguous];

    pub fn letter(self) -> char {
        match self {
            Self::Masculine => 'M',
            Self::Feminine => 'F',
            Self::Ambiguous => 'A',
        }
    }

    pub fn from_letter(letter: &str) -> Option<Self> {
        match letter {
            "M" => Some(Self::Masculine),
            "F" => Some(Self::Feminine),
            "A" => Some(Self::Ambiguous),
            _ => None,
        }
    }
}

impl fmt::Display for GenderCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for GenderCategory {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_letter(s).ok_or_else(|| LexiconError::UnknownCategory {
            line: 0,
            value: s.to_string(),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("unsupported lexicon language `{0}` (built-ins exist for eng and jpn)")]
    UnsupportedLanguage(String),
    #[error("line {line}: conflicting categories for surface `{surface}`")]
    Conflict { line: usize, surface: String },
    #[error("line {line}: empty surface")]
    EmptySurface { line: usize },
    #[error("line {line}: surface contains a tab or line terminator")]
    InvalidSurface { line: usize },
    #[error("line {line}: unknown category `{value}` (expected M, F or A)")]
    UnknownCategory { line: usize, value: String },
    #[error("line {line}: expected `surface<TAB>category`")]
    Malformed { line: usize },
    #[error("lexicon is not valid UTF-8 (byte offset {0})")]
    Utf8(usize),
}

/// Where a lexicon came from; echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LexiconSource {
    Builtin { version: String },
    File { sha256: String },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub category: GenderCategory,
}

/// A set of pronoun surfaces for one language. Surfaces are stored in NFC and
/// each surface maps to exactly one category.
#[derive(Debug, Clone)]
pub struct Lexicon {
    language: String,
    entries: BTreeMap<String, GenderCategory>,
    max_surface_length: usize,
    source: LexiconSource,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.language == other.language && self.entries == other.entries
    }
}

impl Eq for Lexicon {}

pub(crate) fn nfc(text: &str) -> String {
    ComposingNormalizerBorrowed::new_nfc()
        .normalize(text)
        .into_owned()
}

impl Lexicon {
    pub fn empty(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            entries: BTreeMap::new(),
            max_surface_length: 0,
            source: LexiconSource::Manual,
        }
    }

    /// Builds a lexicon from `(surface, category)` pairs. Duplicate pairs
    /// collapse; a surface listed under two categories is an error.
    pub fn from_entries<I, S>(language: impl Into<String>, entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, GenderCategory)>,
        S: AsRef<str>,
    {
        let mut lexicon = Self::empty(language);
        for (i, (surface, category)) in entries.into_iter().enumerate() {
            lexicon.insert(surface.as_ref(), category, i + 1)?;
        }
        Ok(lexicon)
    }

    fn insert(&mut self, surface: &str, category: GenderCategory, line: usize) -> Result<(), LexiconError> {
        if surface.is_empty() {
            return Err(LexiconError::EmptySurface { line });
        }
        if surface.contains(['\t', '\n', '\r']) {
            return Err(LexiconError::InvalidSurface { line });
        }
        let surface = nfc(surface);
        match self.entries.get(&surface) {
            Some(existing) if *existing != category => {
                return Err(LexiconError::Conflict { line, surface });
            }
            Some(_) => {}
            None => {
                self.max_surface_length = self.max_surface_length.max(surface.chars().count());
                self.entries.insert(surface, category);
            }
        }
        Ok(())
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn source(&self) -> &LexiconSource {
        &self.source
    }

    pub fn with_source(mut self, source: LexiconSource) -> Self {
        self.source = source;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest surface, in characters.
    pub fn max_surface_length(&self) -> usize {
        self.max_surface_length
    }

    pub fn category_of(&self, surface: &str) -> Option<GenderCategory> {
        self.entries.get(surface).copied()
    }

    /// Entries in serialization order: category first, then code points.
    pub fn entries(&self) -> Vec<LexiconEntry> {
        let mut out: Vec<LexiconEntry> = self
            .entries
            .iter()
            .map(|(surface, &category)| LexiconEntry {
                surface: surface.clone(),
                category,
            })
            .collect();
        out.sort_by(|a, b| a.category.cmp(&b.category).then_with(|| a.surface.cmp(&b.surface)));
        out
    }

    pub fn surfaces(&self, category: GenderCategory) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, &c)| c == category)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// SHA-256 over the serialized form, so equal lexicons share a digest
    /// regardless of where they were loaded from.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serialize_lexicon(self)))
    }
}

const EN_MASCULINE: &[&str] = &["he", "him", "his", "himself"];
const EN_FEMININE: &[&str] = &["her", "she", "herself"];
// Printed list kept as-is, duplicates included; construction collapses them.
const EN_AMBIGUOUS: &[&str] = &[
    "I", "you", "it", "me", "my", "your", "them", "their", "myself", "they", "themselves", "we",
    "us", "oneself", "our", "yourself", "its", "itself", "self", "ourselves", "'em", "theirs",
    "thyself", "one", "ours", "themself", "theirself", "theirselves", "theirselves", "xe", "xem",
    "xim", "hir", "xemself", "xemself", "hirsself", "hirselves", "ze", "zeself", "zeselves",
];

const JA_MASCULINE: &[&str] = &[
    "きみ", "君", "お前", "俺", "彼", "彼ら", "僕", "君たち", "オレ", "おまえ", "ぼく", "ボク",
    "僕ら", "僕達", "おれ", "吾輩", "キミ", "てめえ", "小生", "てめえ", "僕たち",
];
const JA_FEMININE: &[&str] = &["彼女", "あたし", "彼女ら"];
const JA_AMBIGUOUS: &[&str] = &[
    "何", "私", "それ", "あなた", "みんな", "あいつ", "誰", "わたし", "貴方", "どなた", "我々",
    "あんた", "そつ", "やつ", "みな", "奴", "あれ", "なに", "皆", "みなさん", "みなさま", "我ら",
    "余", "彼等", "だれ", "奴ら", "ウチ", "わたくし", "われわれ", "よそ", "われ", "奴等", "己",
    "おのれ", "何れ", "わし", "彼奴",
];

/// The built-in pronoun lists for `eng` or `jpn`.
pub fn builtin_lexicon(language: &str) -> Result<Lexicon, LexiconError> {
    let (m, f, a) = match language {
        "eng" => (EN_MASCULINE, EN_FEMININE, EN_AMBIGUOUS),
        "jpn" => (JA_MASCULINE, JA_FEMININE, JA_AMBIGUOUS),
        other => return Err(LexiconError::UnsupportedLanguage(other.to_string())),
    };
    let entries = m
        .iter()
        .map(|s| (*s, GenderCategory::Masculine))
        .chain(f.iter().map(|s| (*s, GenderCategory::Feminine)))
        .chain(a.iter().map(|s| (*s, GenderCategory::Ambiguous)));
    let lexicon = Lexicon::from_entries(language, entries)
        .expect("built-in lexicon lists are conflict free");
    Ok(lexicon.with_source(LexiconSource::Builtin {
        version: BUILTIN_VERSION.to_string(),
    }))
}

/// Parses the lexicon TSV format. `language` is used unless the header
/// comment written by [`serialize_lexicon`] names one.
pub fn load_lexicon(bytes: &[u8], language: &str) -> Result<Lexicon, LexiconError> {
    let text = std::str::from_utf8(bytes).map_err(|e| LexiconError::Utf8(e.valid_up_to()))?;
    let mut declared: Option<&str> = None;
    let mut records = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(lang) = comment.trim().strip_prefix("language=") {
                declared = lang.split_whitespace().next();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(surface), Some(category), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(LexiconError::Malformed { line: line_no });
        };
        let category = GenderCategory::from_letter(category).ok_or_else(|| LexiconError::UnknownCategory {
            line: line_no,
            value: category.to_string(),
        })?;
        records.push((line_no, surface, category));
    }

    let mut lexicon = Lexicon::empty(declared.unwrap_or(language));
    for (line, surface, category) in records {
        lexicon.insert(surface, category, line)?;
    }
    let digest = hex::encode(Sha256::digest(bytes));
    Ok(lexicon.with_source(LexiconSource::File { sha256: digest }))
}

pub fn serialize_lexicon(lexicon: &Lexicon) -> Vec<u8> {
    let mut out = format!("# language={} entries={}\n", lexicon.language, lexicon.len());
    for entry in lexicon.entries() {
        out.push_str(&entry.surface);
        out.push('\t');
        out.push(entry.category.letter());
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn english_masculine_builtin() {
        let en = builtin_lexicon("eng").unwrap();
        assert_eq!(en.surfaces(GenderCategory::Masculine), vec!["he", "him", "himself", "his"]);
    }

    #[test]
    fn japanese_feminine_builtin() {
        let ja = builtin_lexicon("jpn").unwrap();
        let feminine: BTreeSet<_> = ja.surfaces(GenderCategory::Feminine).into_iter().collect();
        assert_eq!(feminine, BTreeSet::from(["彼女", "あたし", "彼女ら"]));
    }

    #[test]
    fn english_ambiguous_count_drops_printed_duplicates() {
        // 40 printed items, "theirselves" and "xemself" each appear twice.
        assert_eq!(EN_AMBIGUOUS.len(), 40);
        let en = builtin_lexicon("eng").unwrap();
        assert_eq!(en.surfaces(GenderCategory::Ambiguous).len(), 38);
        assert!(en.category_of("I").is_some());
        assert!(en.category_of("i").is_none());
    }

    #[test]
    fn japanese_counts() {
        let ja = builtin_lexicon("jpn").unwrap();
        // てめえ is printed twice
        assert_eq!(ja.surfaces(GenderCategory::Masculine).len(), 20);
        assert_eq!(ja.surfaces(GenderCategory::Ambiguous).len(), 37);
        assert_eq!(ja.max_surface_length(), 4);
    }

    #[test]
    fn unsupported_language() {
        assert_eq!(
            builtin_lexicon("fra").unwrap_err(),
            LexiconError::UnsupportedLanguage("fra".into())
        );
    }

    #[test]
    fn load_single_record() {
        let lex = load_lexicon(b"she\tF", "eng").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.category_of("she"), Some(GenderCategory::Feminine));
    }

    #[test]
    fn load_conflict_names_surface() {
        let err = load_lexicon("彼\tM\n彼\tF\n".as_bytes(), "jpn").unwrap_err();
        assert_eq!(err, LexiconError::Conflict { line: 2, surface: "彼".into() });
        assert!(err.to_string().contains('彼'));
    }

    #[test]
    fn load_errors() {
        assert_eq!(load_lexicon(b"\tM\n", "eng").unwrap_err(), LexiconError::EmptySurface { line: 1 });
        assert!(matches!(
            load_lexicon(b"he\tX\n", "eng").unwrap_err(),
            LexiconError::UnknownCategory { line: 1, .. }
        ));
        assert_eq!(load_lexicon(b"he\n", "eng").unwrap_err(), LexiconError::Malformed { line: 1 });
        assert_eq!(load_lexicon(b"a\xffb\tM", "eng").unwrap_err(), LexiconError::Utf8(1));
    }

    #[test]
    fn duplicates_collapse_and_comments_skip() {
        let lex = load_lexicon(b"# hello\nhe\tM\r\nhe\tM\n\n", "eng").unwrap();
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn surfaces_are_nfc() {
        // "が" decomposed into か + combining voiced mark
        let lex = Lexicon::from_entries("jpn", [("\u{304B}\u{3099}", GenderCategory::Ambiguous)]).unwrap();
        assert_eq!(lex.category_of("\u{304C}"), Some(GenderCategory::Ambiguous));
        assert_eq!(lex.max_surface_length(), 1);
    }

    #[test]
    fn serialize_empty_is_header_only() {
        let out = String::from_utf8(serialize_lexicon(&Lexicon::empty("eng"))).unwrap();
        assert_eq!(out, "# language=eng entries=0\n");
    }

    #[test]
    fn serialize_builtin_english_starts_with_he() {
        let out = String::from_utf8(serialize_lexicon(&builtin_lexicon("eng").unwrap())).unwrap();
        assert_eq!(out.lines().nth(1), Some("he\tM"));
    }

    #[test]
    fn roundtrip_builtin_japanese() {
        let ja = builtin_lexicon("jpn").unwrap();
        let loaded = load_lexicon(&serialize_lexicon(&ja), "xxx").unwrap();
        assert_eq!(loaded, ja);
        assert_eq!(loaded.language(), "jpn");
        assert_eq!(loaded.digest(), ja.digest());
    }

    #[test]
    fn builtin_categories_disjoint() {
        for lang in ["eng", "jpn"] {
            let lex = builtin_lexicon(lang).unwrap();
            let total: usize = GenderCategory::ALL.iter().map(|&c| lex.surfaces(c).len()).sum();
            assert_eq!(total, lex.len());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn category() -> impl Strategy<Value = GenderCategory> {
            prop_oneof![
                Just(GenderCategory::Masculine),
                Just(GenderCategory::Feminine),
                Just(GenderCategory::Ambiguous)
            ]
        }

        proptest! {
            #[test]
            fn serialize_then_load_is_identity(
                raw in proptest::collection::btree_map("[a-zあ-ん彼女僕'][a-zあ-ん彼女僕' ]{0,6}", category(), 0..30)
            ) {
                let lex = Lexicon::from_entries("eng", raw.iter().map(|(s, c)| (s.as_str(), *c))).unwrap();
                let back = load_lexicon(&serialize_lexicon(&lex), "eng").unwrap();
                prop_assert_eq!(back, lex);
            }
        }
    }
}
