//! Sentence and link ingestion for Tatoeba-style exports and two-column
//! parallel files.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("input is not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u64,
    pub language: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub pair_id: String,
    pub source: Sentence,
    pub target: Sentence,
}

/// Orientation-independent pair identifier: `min-max` of the two ids.
pub fn pair_id(a: u64, b: u64) -> String {
    format!("{}-{}", a.min(b), a.max(b))
}

impl SentencePair {
    pub fn new(source: Sentence, target: Sentence) -> Self {
        Self {
            pair_id: pair_id(source.id, target.id),
            source,
            target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub source_language: String,
    pub target_language: String,
    pub pairs: Vec<SentencePair>,
}

impl Corpus {
    pub fn new(source_language: impl Into<String>, target_language: impl Into<String>) -> Self {
        Self {
            source_language: source_language.into(),
            target_language: target_language.into(),
            pairs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, pair_id: &str) -> Option<&SentencePair> {
        self.pairs.iter().find(|p| p.pair_id == pair_id)
    }

    /// SHA-256 over a canonical rendering of every pair, in order.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{}\t{}\n", self.source_language, self.target_language));
        for pair in &self.pairs {
            hasher.update(format!(
                "{}\t{}\t{}\t{}\t{}\n",
                pair.pair_id,
                pair.source.id,
                pair.source.text.replace('\t', " "),
                pair.target.id,
                pair.target.text.replace('\t', " ")
            ));
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedSentences {
    pub sentences: Vec<Sentence>,
    /// Records that were malformed or duplicated an earlier id.
    pub skipped: usize,
    /// Well-formed records filtered out by language.
    pub filtered: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLinks {
    pub links: Vec<(u64, u64)>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltCorpus {
    pub corpus: Corpus,
    /// Links with at least one endpoint missing from the sentence sets.
    pub dropped: usize,
    /// Links that repeated an already-paired (source, target) combination.
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedParallel {
    pub corpus: Corpus,
    pub skipped: usize,
}

fn decode(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| CorpusError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })
}

/// Splits on LF, strips an optional CR, and drops the empty tail left by a
/// final terminator. Yields `(line_number, line)`.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let has_records = !text.is_empty();
    body.split('\n')
        .take_while(move |_| has_records)
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}

/// Parses `id<TAB>lang<TAB>text` records.
pub fn parse_sentences(bytes: &[u8], language: Option<&str>) -> Result<ParsedSentences, CorpusError> {
    let text = decode(bytes)?;
    let mut out = ParsedSentences::default();
    let mut seen: HashSet<(String, u64)> = HashSet::new();
    for (_, line) in records(text) {
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(lang), Some(body)) = (fields.next(), fields.next(), fields.next()) else {
            out.skipped += 1;
            continue;
        };
        let Ok(id) = id.trim().parse::<u64>() else {
            out.skipped += 1;
            continue;
        };
        if lang.is_empty() || body.trim().is_empty() {
            out.skipped += 1;
            continue;
        }
        if language.is_some_and(|want| want != lang) {
            out.filtered += 1;
            continue;
        }
        if !seen.insert((lang.to_string(), id)) {
            out.skipped += 1;
            continue;
        }
        out.sentences.push(Sentence {
            id,
            language: lang.to_string(),
            text: body.to_string(),
        });
    }
    Ok(out)
}

/// Parses `id<TAB>translation_id` records.
pub fn parse_links(bytes: &[u8]) -> Result<ParsedLinks, CorpusError> {
    let text = decode(bytes)?;
    let mut out = ParsedLinks::default();
    for (_, line) in records(text) {
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => match (a.trim().parse(), b.trim().parse()) {
                (Ok(a), Ok(b)) => out.links.push((a, b)),
                _ => out.skipped += 1,
            },
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

/// Joins source and target sentences through translation links. Each link is
/// oriented so the source-language sentence comes first; pairs keep the order
/// of the first link that produced them.
pub fn build_pairs(
    source_language: &str,
    target_language: &str,
    source: &[Sentence],
    target: &[Sentence],
    links: &[(u64, u64)],
) -> BuiltCorpus {
    let source_by_id: HashMap<u64, &Sentence> = source.iter().map(|s| (s.id, s)).collect();
    let target_by_id: HashMap<u64, &Sentence> = target.iter().map(|s| (s.id, s)).collect();

    let mut corpus = Corpus::new(source_language, target_language);
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    let mut dropped = 0;
    let mut duplicates = 0;
    for &(a, b) in links {
        let oriented = match (source_by_id.get(&a), target_by_id.get(&b)) {
            (Some(s), Some(t)) => Some((*s, *t)),
            _ => match (source_by_id.get(&b), target_by_id.get(&a)) {
                (Some(s), Some(t)) => Some((*s, *t)),
                _ => None,
            },
        };
        let Some((s, t)) = oriented else {
            dropped += 1;
            continue;
        };
        if !seen.insert((s.id, t.id)) {
            duplicates += 1;
            continue;
        }
        corpus.pairs.push(SentencePair::new(s.clone(), t.clone()));
    }
    BuiltCorpus {
        corpus,
        dropped,
        duplicates,
    }
}

/// Parses `source text<TAB>target text` lines; both sentences of line `n`
/// get id `n`.
pub fn parse_parallel_tsv(
    bytes: &[u8],
    source_language: &str,
    target_language: &str,
) -> Result<ParsedParallel, CorpusError> {
    let text = decode(bytes)?;
    let mut corpus = Corpus::new(source_language, target_language);
    let mut skipped = 0;
    for (line_no, line) in records(text) {
        let mut fields = line.split('\t');
        let (Some(src), Some(tgt), None) = (fields.next(), fields.next(), fields.next()) else {
            skipped += 1;
            continue;
        };
        if src.trim().is_empty() || tgt.trim().is_empty() {
            skipped += 1;
            continue;
        }
        let id = line_no as u64;
        corpus.pairs.push(SentencePair::new(
            Sentence {
                id,
                language: source_language.to_string(),
                text: src.to_string(),
            },
            Sentence {
                id,
                language: target_language.to_string(),
                text: tgt.to_string(),
            },
        ));
    }
    Ok(ParsedParallel { corpus, skipped })
}

/// Renders a corpus back into the two-column parallel format.
pub fn write_parallel_tsv(corpus: &Corpus) -> String {
    let mut out = String::new();
    for pair in &corpus.pairs {
        out.push_str(&pair.source.text);
        out.push('\t');
        out.push_str(&pair.target.text);
        out.push('\n');
    }
    out
}

/// Renders a corpus as Tatoeba-style `sentences` and `links` files.
pub fn write_tatoeba(corpus: &Corpus) -> (String, String) {
    let mut sentences = String::new();
    let mut links = String::new();
    let mut written: HashSet<(String, u64)> = HashSet::new();
    for pair in &corpus.pairs {
        for s in [&pair.source, &pair.target] {
            if written.insert((s.language.clone(), s.id)) {
                sentences.push_str(&format!("{}\t{}\t{}\n", s.id, s.language, s.text));
            }
        }
        links.push_str(&format!("{}\t{}\n", pair.source.id, pair.target.id));
    }
    (sentences, links)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(id: u64, lang: &str, text: &str) -> Sentence {
        Sentence {
            id,
            language: lang.into(),
            text: text.into(),
        }
    }

    #[test]
    fn parses_line_51() {
        let input = "51\teng\tThe last person I told my idea to thought I was nuts.\n";
        let parsed = parse_sentences(input.as_bytes(), None).unwrap();
        assert_eq!(
            parsed.sentences,
            vec![sentence(51, "eng", "The last person I told my idea to thought I was nuts.")]
        );
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn empty_stream() {
        let parsed = parse_sentences(b"", None).unwrap();
        assert!(parsed.sentences.is_empty());
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn malformed_line_is_skipped() {
        let input = "1\teng\tHello.\n2 eng no tabs here\n3\tjpn\tこんにちは。\n";
        let parsed = parse_sentences(input.as_bytes(), None).unwrap();
        assert_eq!(parsed.sentences.len(), 2);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn language_filter() {
        let input = "1\teng\tHello.\n3\tjpn\tこんにちは。\n";
        let parsed = parse_sentences(input.as_bytes(), Some("jpn")).unwrap();
        assert_eq!(parsed.sentences, vec![sentence(3, "jpn", "こんにちは。")]);
        assert_eq!(parsed.filtered, 1);
    }

    #[test]
    fn duplicate_ids_are_skipped() {
        let parsed = parse_sentences(b"1\teng\tA.\n1\teng\tB.\n", None).unwrap();
        assert_eq!(parsed.sentences.len(), 1);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let err = parse_sentences(b"1\teng\tab\xff\n", None).unwrap_err();
        assert_eq!(err, CorpusError::InvalidUtf8 { offset: 8 });
    }

    #[test]
    fn links_parse() {
        let parsed = parse_links(b"1\t2\n3\tx\n4\t5\r\n").unwrap();
        assert_eq!(parsed.links, vec![(1, 2), (4, 5)]);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn build_single_pair() {
        let en = [sentence(51, "eng", "The last person I told my idea to thought I was nuts.")];
        let ja = [sentence(4001, "jpn", "僕が最後に自分の考えを伝えた人は、僕を気遣いだと思ったようだ。")];
        let built = build_pairs("eng", "jpn", &en, &ja, &[(51, 4001)]);
        assert_eq!(built.corpus.len(), 1);
        assert_eq!(built.corpus.pairs[0].pair_id, "51-4001");
        assert_eq!(built.dropped, 0);
    }

    #[test]
    fn dangling_links_drop() {
        let en = [sentence(1, "eng", "x")];
        let built = build_pairs("eng", "jpn", &en, &[], &[(1, 99)]);
        assert!(built.corpus.is_empty());
        assert_eq!(built.dropped, 1);
    }

    #[test]
    fn both_link_orders_collapse() {
        let en = [sentence(7, "eng", "x")];
        let ja = [sentence(9, "jpn", "y")];
        let built = build_pairs("eng", "jpn", &en, &ja, &[(7, 9), (9, 7)]);
        assert_eq!(built.corpus.len(), 1);
        assert_eq!(built.duplicates, 1);
        assert_eq!(built.corpus.pairs[0].source.language, "eng");
    }

    #[test]
    fn parallel_ids_follow_lines() {
        let parsed = parse_parallel_tsv("a\tb\nc\td\n".as_bytes(), "eng", "jpn").unwrap();
        let ids: Vec<_> = parsed.corpus.pairs.iter().map(|p| p.source.id).collect();
        assert_eq!(ids, vec![1, 2]);
        assert_eq!(parsed.corpus.pairs[1].pair_id, "2-2");
    }

    #[test]
    fn parallel_biology_line() {
        let parsed = parse_parallel_tsv("I never liked biology.\t生物学は好きになれません。\n".as_bytes(), "eng", "jpn").unwrap();
        let pair = &parsed.corpus.pairs[0];
        assert_eq!(pair.source.text, "I never liked biology.");
        assert_eq!(pair.target.text, "生物学は好きになれません。");
    }

    #[test]
    fn crlf_matches_lf() {
        let lf = parse_parallel_tsv("a\tb\nc\td\n".as_bytes(), "eng", "jpn").unwrap();
        let crlf = parse_parallel_tsv("a\tb\r\nc\td\r\n".as_bytes(), "eng", "jpn").unwrap();
        assert_eq!(lf, crlf);
        assert_eq!(lf.corpus.digest(), crlf.corpus.digest());
    }

    #[test]
    fn parallel_wrong_tab_count_skipped() {
        let parsed = parse_parallel_tsv("a\tb\nno tab\nx\ty\tz\n".as_bytes(), "eng", "jpn").unwrap();
        assert_eq!(parsed.corpus.len(), 1);
        assert_eq!(parsed.skipped, 2);
    }

    #[test]
    fn tatoeba_writer_roundtrips() {
        let parsed = parse_parallel_tsv("He ran.\t彼は走った。\nShe sat.\t彼女は座った。\n".as_bytes(), "eng", "jpn")
            .unwrap()
            .corpus;
        let (sentences, links) = write_tatoeba(&parsed);
        let en = parse_sentences(sentences.as_bytes(), Some("eng")).unwrap().sentences;
        let ja = parse_sentences(sentences.as_bytes(), Some("jpn")).unwrap().sentences;
        let links = parse_links(links.as_bytes()).unwrap().links;
        assert_eq!(build_pairs("eng", "jpn", &en, &ja, &links).corpus, parsed);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conservation(lines in proptest::collection::vec("[0-9a-z\t ]{0,12}", 0..20)) {
                let input = lines.join("\n");
                let parsed = parse_sentences(input.as_bytes(), None).unwrap();
                let total = if input.is_empty() { 0 } else { input.strip_suffix('\n').unwrap_or(&input).split('\n').count() };
                prop_assert_eq!(parsed.sentences.len() + parsed.skipped + parsed.filtered, total);
            }

            #[test]
            fn link_orientation_is_irrelevant(
                links in proptest::collection::vec((0u64..8, 0u64..8), 0..20)
            ) {
                let en: Vec<_> = (0..4).map(|i| sentence(i, "eng", "e")).collect();
                let ja: Vec<_> = (4..8).map(|i| sentence(i, "jpn", "j")).collect();
                let reversed: Vec<_> = links.iter().map(|&(a, b)| (b, a)).collect();
                let a = build_pairs("eng", "jpn", &en, &ja, &links);
                let b = build_pairs("eng", "jpn", &en, &ja, &reversed);
                prop_assert_eq!(a, b);
            }

            #[test]
            fn deterministic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
                let a = parse_parallel_tsv(&bytes, "eng", "jpn");
                let b = parse_parallel_tsv(&bytes, "eng", "jpn");
                prop_assert_eq!(a, b);
            }
        }
    }
}
