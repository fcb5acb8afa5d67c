//! Pronoun location in raw sentences.
//!
//! English text is split into word tokens (letters plus embedded apostrophes)
//! and each token is compared case-insensitively against the lexicon.
//! Japanese text has no word delimiters, so it is cut into punctuation-bounded
//! segments and each segment is scanned leftmost-longest against a trie of
//! lexicon surfaces.
//!
//! All spans are character offsets into the original text, end exclusive.

use std::collections::{BTreeMap, HashMap};

use icu_normalizer::properties::CanonicalCombiningClassMapBorrowed;
use icu_normalizer::ComposingNormalizerBorrowed;
use serde::{Deserialize, Serialize};

use crate::lexicon::{nfc, GenderCategory, Lexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronounOccurrence {
    /// Text as found in the sentence.
    pub surface: String,
    /// The lexicon entry that matched.
    pub lexicon_surface: String,
    pub category: GenderCategory,
    pub span: Span,
}

/// Byte range of a character span. Panics if the span runs past the text.
pub fn byte_range(text: &str, span: Span) -> std::ops::Range<usize> {
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let start = indices.nth(span.start).expect("span start within text");
    let end = if span.is_empty() {
        start
    } else {
        indices.nth(span.len() - 1).expect("span end within text")
    };
    start..end
}

/// Slice of `text` covered by a character span.
pub fn char_slice(text: &str, span: Span) -> &str {
    &text[byte_range(text, span)]
}

pub(crate) fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Full case folding approximated per character as lowercase(uppercase(c)),
/// which maps e.g. `ß` to `ss` and final sigma to `σ`.
pub fn case_fold(text: &str) -> String {
    text.chars()
        .flat_map(char::to_uppercase)
        .flat_map(char::to_lowercase)
        .collect()
}

fn english_key(token: &str) -> String {
    let unified: String = token.chars().map(|c| if is_apostrophe(c) { '\'' } else { c }).collect();
    case_fold(&nfc(&unified))
}

/// Word-token matcher used for English.
#[derive(Debug, Clone)]
pub struct WordMatcher {
    by_key: HashMap<String, (String, GenderCategory)>,
}

impl WordMatcher {
    pub fn new(lexicon: &Lexicon) -> Self {
        let mut by_key = HashMap::new();
        for entry in lexicon.entries() {
            by_key
                .entry(english_key(&entry.surface))
                .or_insert((entry.surface, entry.category));
        }
        Self { by_key }
    }

    fn lookup(&self, token: &str) -> Option<&(String, GenderCategory)> {
        self.by_key.get(&english_key(token))
    }

    pub fn extract(&self, text: &str) -> Vec<PronounOccurrence> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if !chars[i].is_alphabetic() {
                i += 1;
                continue;
            }
            let start = i;
            let mut end = i + 1;
            while end < chars.len() {
                if chars[end].is_alphabetic() {
                    end += 1;
                } else if is_apostrophe(chars[end]) && chars.get(end + 1).is_some_and(|c| c.is_alphabetic()) {
                    end += 2;
                } else {
                    break;
                }
            }
            i = end;

            let token: String = chars[start..end].iter().collect();
            let leading = start > 0
                && is_apostrophe(chars[start - 1])
                && (start == 1 || !chars[start - 2].is_alphabetic());
            if leading {
                let with_apostrophe: String = chars[start - 1..end].iter().collect();
                if let Some((surface, category)) = self.lookup(&with_apostrophe) {
                    if surface.starts_with('\'') {
                        out.push(PronounOccurrence {
                            surface: with_apostrophe,
                            lexicon_surface: surface.clone(),
                            category: *category,
                            span: Span::new(start - 1, end),
                        });
                        continue;
                    }
                }
            }
            if let Some((surface, category)) = self.lookup(&token) {
                out.push(PronounOccurrence {
                    surface: token,
                    lexicon_surface: surface.clone(),
                    category: *category,
                    span: Span::new(start, end),
                });
                continue;
            }
            // clitic split: "he's", "I'm", "she'd"
            if let Some(cut) = chars[start..end].iter().position(|&c| is_apostrophe(c)) {
                let prefix: String = chars[start..start + cut].iter().collect();
                if let Some((surface, category)) = self.lookup(&prefix) {
                    out.push(PronounOccurrence {
                        surface: prefix,
                        lexicon_surface: surface.clone(),
                        category: *category,
                        span: Span::new(start, start + cut),
                    });
                }
            }
        }
        out
    }
}

/// Characters that bound Japanese match segments.
pub fn is_ja_boundary(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{3000}' | '、' | '。' | '・' | '「' | '」' | '『' | '』' | '（' | '）' | '！' | '？' | '〜' | '…'
        )
        // full-width ASCII punctuation and the half-width CJK punctuation block
        || matches!(c, '\u{FF01}'..='\u{FF0F}' | '\u{FF1A}'..='\u{FF20}' | '\u{FF3B}'..='\u{FF40}' | '\u{FF5B}'..='\u{FF65}')
}

/// A punctuation-free run of Japanese text in NFC, with a map from each
/// normalized character back to the original characters it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub chars: Vec<char>,
    /// Original-text character span of the cluster each normalized character
    /// belongs to.
    origin: Vec<Span>,
}

impl Segment {
    pub fn text(&self) -> String {
        self.chars.iter().collect()
    }

    /// Maps a span over `chars` back to the original text. Returns `None` when
    /// the span would split a normalization cluster.
    pub fn to_original(&self, start: usize, end: usize) -> Option<Span> {
        if start >= end || end > self.chars.len() {
            return None;
        }
        let starts_cluster = start == 0 || self.origin[start - 1] != self.origin[start];
        let ends_cluster = end == self.chars.len() || self.origin[end] != self.origin[end - 1];
        (starts_cluster && ends_cluster).then(|| Span::new(self.origin[start].start, self.origin[end - 1].end))
    }
}

/// Japanese text with boundary characters removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilteredText {
    pub segments: Vec<Segment>,
}

impl FilteredText {
    pub fn segment_texts(&self) -> Vec<String> {
        self.segments.iter().map(Segment::text).collect()
    }
}

/// Splits text at boundary characters and NFC-normalizes each segment one
/// combining cluster (a starter plus its following marks) at a time.
pub fn preprocess_ja(text: &str) -> FilteredText {
    let ccc = CanonicalCombiningClassMapBorrowed::new();
    let normalizer = ComposingNormalizerBorrowed::new_nfc();
    let chars: Vec<char> = text.chars().collect();

    let mut segments = Vec::new();
    let mut current = Segment {
        chars: Vec::new(),
        origin: Vec::new(),
    };
    let flush = |seg: &mut Segment, segments: &mut Vec<Segment>| {
        if !seg.chars.is_empty() {
            segments.push(std::mem::replace(
                seg,
                Segment {
                    chars: Vec::new(),
                    origin: Vec::new(),
                },
            ));
        }
    };

    let mut i = 0;
    while i < chars.len() {
        if is_ja_boundary(chars[i]) {
            flush(&mut current, &mut segments);
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() && !is_ja_boundary(chars[i]) && ccc.get_u8(chars[i]) != 0 {
            i += 1;
        }
        let span = Span::new(start, i);
        if i == start + 1 {
            let mut buf = [0u8; 4];
            if normalizer.is_normalized(chars[start].encode_utf8(&mut buf)) {
                current.chars.push(chars[start]);
                current.origin.push(span);
                continue;
            }
        }
        let cluster: String = chars[start..i].iter().collect();
        for c in normalizer.normalize(&cluster).chars() {
            current.chars.push(c);
            current.origin.push(span);
        }
    }
    flush(&mut current, &mut segments);
    FilteredText { segments }
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    terminal: Option<(String, GenderCategory)>,
}

/// Leftmost-longest scanner used for Japanese.
#[derive(Debug, Clone)]
pub struct ScanMatcher {
    nodes: Vec<TrieNode>,
}

impl ScanMatcher {
    pub fn new(lexicon: &Lexicon) -> Self {
        let mut nodes = vec![TrieNode::default()];
        for entry in lexicon.entries() {
            let mut at = 0;
            for c in entry.surface.chars() {
                at = match nodes[at].children.get(&c) {
                    Some(&next) => next,
                    None => {
                        nodes.push(TrieNode::default());
                        let next = nodes.len() - 1;
                        nodes[at].children.insert(c, next);
                        next
                    }
                };
            }
            nodes[at].terminal = Some((entry.surface, entry.category));
        }
        Self { nodes }
    }

    /// Longest match starting at `from` whose span maps cleanly back to the
    /// original text.
    fn longest_at(&self, segment: &Segment, from: usize) -> Option<(usize, Span, &(String, GenderCategory))> {
        let mut at = 0;
        let mut best = None;
        for (offset, c) in segment.chars[from..].iter().enumerate() {
            match self.nodes[at].children.get(c) {
                Some(&next) => at = next,
                None => break,
            }
            if let Some(terminal) = &self.nodes[at].terminal {
                let end = from + offset + 1;
                if let Some(span) = segment.to_original(from, end) {
                    best = Some((end, span, terminal));
                }
            }
        }
        best
    }

    pub fn extract(&self, text: &str) -> Vec<PronounOccurrence> {
        let filtered = preprocess_ja(text);
        let mut out = Vec::new();
        for segment in &filtered.segments {
            let mut i = 0;
            while i < segment.chars.len() {
                match self.longest_at(segment, i) {
                    Some((end, span, (surface, category))) => {
                        out.push(PronounOccurrence {
                            surface: char_slice(text, span).to_string(),
                            lexicon_surface: surface.clone(),
                            category: *category,
                            span,
                        });
                        i = end;
                    }
                    None => i += 1,
                }
            }
        }
        out
    }
}

/// Picks the matching strategy from the lexicon language: `jpn` is scanned,
/// everything else is tokenized on word boundaries.
#[derive(Debug, Clone)]
pub enum PronounMatcher {
    Word(WordMatcher),
    Scan(ScanMatcher),
}

impl PronounMatcher {
    pub fn new(lexicon: &Lexicon) -> Self {
        if lexicon.language() == "jpn" {
            Self::Scan(ScanMatcher::new(lexicon))
        } else {
            Self::Word(WordMatcher::new(lexicon))
        }
    }

    pub fn extract(&self, text: &str) -> Vec<PronounOccurrence> {
        match self {
            Self::Word(m) => m.extract(text),
            Self::Scan(m) => m.extract(text),
        }
    }
}

pub fn extract_pronouns_en(text: &str, lexicon: &Lexicon) -> Vec<PronounOccurrence> {
    WordMatcher::new(lexicon).extract(text)
}

pub fn extract_pronouns_ja(text: &str, lexicon: &Lexicon) -> Vec<PronounOccurrence> {
    ScanMatcher::new(lexicon).extract(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::builtin_lexicon;
    use GenderCategory::*;

    fn summary(occ: &[PronounOccurrence]) -> Vec<(&str, GenderCategory)> {
        occ.iter().map(|o| (o.surface.as_str(), o.category)).collect()
    }

    #[test]
    fn line_51_english() {
        let en = builtin_lexicon("eng").unwrap();
        let occ = extract_pronouns_en("The last person I told my idea to thought I was nuts.", &en);
        assert_eq!(summary(&occ), vec![("I", Ambiguous), ("my", Ambiguous), ("I", Ambiguous)]);
        assert_eq!(occ[0].span, Span::new(16, 17));
    }

    #[test]
    fn empty_english() {
        assert!(extract_pronouns_en("", &builtin_lexicon("eng").unwrap()).is_empty());
    }

    #[test]
    fn apostrophe_split_and_case() {
        let en = builtin_lexicon("eng").unwrap();
        let occ = extract_pronouns_en("He said he'd see Him.", &en);
        assert_eq!(summary(&occ), vec![("He", Masculine), ("he", Masculine), ("Him", Masculine)]);
        assert_eq!(occ[1].span, Span::new(8, 10));
        assert_eq!(occ[0].lexicon_surface, "he");
    }

    #[test]
    fn leading_apostrophe_em() {
        let en = builtin_lexicon("eng").unwrap();
        let occ = extract_pronouns_en("Tell 'em I'm late.", &en);
        assert_eq!(summary(&occ), vec![("'em", Ambiguous), ("I", Ambiguous)]);
        assert_eq!(occ[0].span, Span::new(5, 8));
        // a quote before an ordinary pronoun is not part of the token
        let occ = extract_pronouns_en("'she said so'", &en);
        assert_eq!(occ[0].span, Span::new(1, 4));
    }

    #[test]
    fn curly_apostrophe() {
        let en = builtin_lexicon("eng").unwrap();
        let occ = extract_pronouns_en("She\u{2019}s here.", &en);
        assert_eq!(summary(&occ), vec![("She", Feminine)]);
    }

    #[test]
    fn non_pronoun_tokens_ignored() {
        let en = builtin_lexicon("eng").unwrap();
        assert!(extract_pronouns_en("Theme thesis heather ithe", &en).is_empty());
        assert!(extract_pronouns_en("o'clock", &en).is_empty());
    }

    #[test]
    fn preprocess_splits_on_punctuation() {
        assert_eq!(preprocess_ja("僕が、僕を").segment_texts(), vec!["僕が", "僕を"]);
        assert!(preprocess_ja("、。！？「」").segments.is_empty());
        assert_eq!(preprocess_ja("私は\u{3000}学生").segment_texts(), vec!["私は", "学生"]);
    }

    #[test]
    fn line_51_japanese() {
        let ja = builtin_lexicon("jpn").unwrap();
        let text = "僕が最後に自分の考えを伝えた人は、僕を気遣いだと思ったようだ。";
        let occ = extract_pronouns_ja(text, &ja);
        assert_eq!(summary(&occ), vec![("僕", Masculine), ("僕", Masculine)]);
        assert_eq!(occ[1].span, Span::new(17, 18));
    }

    #[test]
    fn longest_match_wins() {
        let ja = builtin_lexicon("jpn").unwrap();
        let occ = extract_pronouns_ja("彼女は彼を見た", &ja);
        assert_eq!(summary(&occ), vec![("彼女", Feminine), ("彼", Masculine)]);
    }

    #[test]
    fn nani() {
        let ja = builtin_lexicon("jpn").unwrap();
        assert_eq!(summary(&extract_pronouns_ja("何もない", &ja)), vec![("何", Ambiguous)]);
    }

    #[test]
    fn matches_do_not_cross_boundaries() {
        let lex = Lexicon::from_entries("jpn", [("彼女", Feminine)]).unwrap();
        assert!(extract_pronouns_ja("彼、女", &lex).is_empty());
    }

    #[test]
    fn decomposed_input_matches_nfc_surface() {
        // "わたし" with the voiced "だ" of "だれ" written as た + U+3099
        let ja = builtin_lexicon("jpn").unwrap();
        let text = "\u{305F}\u{3099}れ？";
        let occ = extract_pronouns_ja(text, &ja);
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].lexicon_surface, "だれ");
        assert_eq!(occ[0].span, Span::new(0, 3));
        assert_eq!(char_slice(text, occ[0].span), occ[0].surface);
    }

    #[test]
    fn byte_range_on_multibyte() {
        assert_eq!(char_slice("あいう", Span::new(1, 3)), "いう");
        assert_eq!(char_slice("あいう", Span::new(3, 3)), "");
    }

    #[test]
    fn case_fold_handles_sharp_s() {
        assert_eq!(case_fold("Straße"), "strasse");
        assert_eq!(case_fold("HE"), "he");
    }
}
