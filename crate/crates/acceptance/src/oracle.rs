//! Substring-enumeration pronoun finder and direct-count audit report.

use std::collections::{BTreeSet, HashMap};

use pronoun_audit::corpus::Corpus;
use pronoun_audit::lexicon::{GenderCategory, Lexicon};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::textbook;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub lexicon_surface: String,
    pub category: GenderCategory,
}

fn apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn key(s: &str) -> String {
    s.chars()
        .map(|c| if apostrophe(c) { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

fn table(lexicon: &Lexicon, fold: bool) -> HashMap<String, (String, GenderCategory)> {
    lexicon
        .entries()
        .into_iter()
        .map(|e| {
            let k = if fold { key(&e.surface) } else { e.surface.clone() };
            (k, (e.surface, e.category))
        })
        .collect()
}

/// True when `chars[i..j]` is a complete word: letters with single embedded
/// apostrophes, not continued by a letter or an apostrophe-letter pair on
/// either side.
fn whole_word(chars: &[char], i: usize, j: usize) -> bool {
    let letter = |k: usize| chars[k].is_alphabetic();
    if i >= j || !letter(i) || !letter(j - 1) {
        return false;
    }
    for k in i..j {
        if !letter(k) && !(apostrophe(chars[k]) && letter(k - 1) && letter(k + 1)) {
            return false;
        }
    }
    let left_ok = i == 0 || (!letter(i - 1) && !(apostrophe(chars[i - 1]) && i >= 2 && letter(i - 2)));
    let right_ok = j == chars.len() || (!letter(j) && !(apostrophe(chars[j]) && j + 1 < chars.len() && letter(j + 1)));
    left_ok && right_ok
}

/// Every whole word is looked up as-is, with a detached leading apostrophe
/// (`'em`), or by the part before its first apostrophe (`he's`).
pub fn english(text: &str, lexicon: &Lexicon) -> Vec<Found> {
    let lex = table(lexicon, true);
    let chars: Vec<char> = text.chars().collect();
    let slice = |i: usize, j: usize| chars[i..j].iter().collect::<String>();
    let found = |i: usize, j: usize, (surface, category): &(String, GenderCategory)| Found {
        start: i,
        end: j,
        surface: slice(i, j),
        lexicon_surface: surface.clone(),
        category: *category,
    };
    let mut out = Vec::new();
    for i in 0..chars.len() {
        for j in i + 1..=chars.len() {
            if !whole_word(&chars, i, j) {
                continue;
            }
            let detached = i >= 1 && apostrophe(chars[i - 1]) && (i == 1 || !chars[i - 2].is_alphabetic());
            if detached {
                if let Some(hit) = lex.get(&key(&slice(i - 1, j))).filter(|(s, _)| s.starts_with('\'')) {
                    out.push(found(i - 1, j, hit));
                    continue;
                }
            }
            if let Some(hit) = lex.get(&key(&slice(i, j))) {
                out.push(found(i, j, hit));
            } else if let Some(cut) = (i..j).find(|&k| apostrophe(chars[k])) {
                if let Some(hit) = lex.get(&key(&slice(i, cut))) {
                    out.push(found(i, cut, hit));
                }
            }
        }
    }
    out
}

fn boundary(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || "\u{3000}、。・「」『』（）！？〜…".contains(c)
        || ('\u{FF01}'..='\u{FF0F}').contains(&c)
        || ('\u{FF1A}'..='\u{FF20}').contains(&c)
        || ('\u{FF3B}'..='\u{FF40}').contains(&c)
        || ('\u{FF5B}'..='\u{FF65}').contains(&c)
}

/// All boundary-free substrings that are lexicon surfaces, then a greedy
/// pass in (start, longest first) order keeping non-overlapping ones.
/// Expects NFC input.
pub fn japanese(text: &str, lexicon: &Lexicon) -> Vec<Found> {
    let lex = table(lexicon, false);
    let chars: Vec<char> = text.chars().collect();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..chars.len() {
        for j in i + 1..=chars.len() {
            if chars[i..j].iter().any(|&c| boundary(c)) {
                break;
            }
            if lex.contains_key(&chars[i..j].iter().collect::<String>()) {
                candidates.push((i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = Vec::new();
    let mut taken_to = 0;
    for (i, j) in candidates {
        if i < taken_to {
            continue;
        }
        let surface: String = chars[i..j].iter().collect();
        let (lexicon_surface, category) = lex[&surface].clone();
        out.push(Found {
            start: i,
            end: j,
            surface,
            lexicon_surface,
            category,
        });
        taken_to = j;
    }
    out
}

const LABELS: [&str; 8] = ["None", "A", "F", "FA", "M", "MA", "FM", "FMA"];
const CATS: [GenderCategory; 3] = [GenderCategory::Masculine, GenderCategory::Feminine, GenderCategory::Ambiguous];

/// Index into `LABELS`: bit 4 for masculine, 2 for feminine, 1 for ambiguous.
fn label(found: &[Found]) -> usize {
    let has = |g| found.iter().any(|f| f.category == g) as usize;
    4 * has(GenderCategory::Masculine) + 2 * has(GenderCategory::Feminine) + has(GenderCategory::Ambiguous)
}

fn digest_corpus(corpus: &Corpus) -> String {
    let mut text = format!("{}\t{}\n", corpus.source_language, corpus.target_language);
    for p in &corpus.pairs {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.pair_id,
            p.source.id,
            p.source.text.replace('\t', " "),
            p.target.id,
            p.target.text.replace('\t', " ")
        ));
    }
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn digest_lexicon(lexicon: &Lexicon) -> String {
    let mut entries: Vec<(usize, String)> = lexicon
        .entries()
        .into_iter()
        .map(|e| (CATS.iter().position(|&c| c == e.category).unwrap(), e.surface))
        .collect();
    entries.sort();
    let mut text = format!("# language={} entries={}\n", lexicon.language(), entries.len());
    for (cat, surface) in entries {
        text.push_str(&format!("{surface}\t{}\n", ["M", "F", "A"][cat]));
    }
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn outcome(cells: &[Vec<u64>], yates: bool) -> Value {
    let plain = textbook::chi2(cells);
    let stat = if yates { textbook::chi2_yates(cells) } else { plain };
    match (stat, plain) {
        (Some(chi2), Some(plain)) => json!({
            "status": "ok",
            "chi2": chi2,
            "df": (cells.len() - 1) * (cells[0].len() - 1),
            "n": cells.iter().flatten().sum::<u64>(),
            "cramers_v": textbook::cramers_v(chi2, cells),
            "yates_applied": yates,
            "chi2_uncorrected": plain,
        }),
        _ => json!({ "status": "error", "message": "degenerate table" }),
    }
}

fn test(id: &str, description: &str, rows: &[&str], cols: &[&str], cells: Vec<Vec<u64>>, yates: bool) -> Value {
    json!({
        "id": id,
        "description": description,
        "table": { "row_labels": rows, "col_labels": cols, "cells": cells },
        "outcome": outcome(&cells, yates),
    })
}

fn lexicon_info(lexicon: &Lexicon) -> Value {
    json!({
        "language": lexicon.language(),
        "source": serde_json::to_value(lexicon.source()).unwrap(),
        "entries": lexicon.len(),
        "digest": digest_lexicon(lexicon),
    })
}

/// The audit report for `corpus`, recomputed from scratch.
pub fn audit_report(corpus: &Corpus, en: &Lexicon, ja: &Lexicon) -> Value {
    let mut matrix = [[0u64; 8]; 8];
    let mut presence = [[0u64; 3]; 2];
    let mut matched = [0u64; 3];
    let mut mismatched = [0u64; 3];
    let mut tokens = [[0u64; 3]; 2];
    for pair in &corpus.pairs {
        let e = english(&pair.source.text, en);
        let j = japanese(&pair.target.text, ja);
        matrix[label(&e)][label(&j)] += 1;
        for (g, cat) in CATS.iter().enumerate() {
            let in_e = e.iter().any(|f| f.category == *cat);
            let in_j = j.iter().any(|f| f.category == *cat);
            presence[0][g] += in_e as u64;
            presence[1][g] += in_j as u64;
            matched[g] += (in_e && in_j) as u64;
            mismatched[g] += (in_e != in_j) as u64;
            tokens[0][g] += e.iter().filter(|f| f.category == *cat).count() as u64;
            tokens[1][g] += j.iter().filter(|f| f.category == *cat).count() as u64;
        }
    }
    let total = corpus.pairs.len() as u64;
    let diagonal: u64 = (0..8).map(|i| matrix[i][i]).sum();
    let counts = |p: [u64; 3]| json!({"masculine": p[0], "feminine": p[1], "ambiguous": p[2], "non_masculine": p[1] + p[2]});
    let mc = |g: usize| json!({"match": matched[g], "mismatch": mismatched[g]});
    let mc2 = |a: usize, b: usize| json!({"match": matched[a] + matched[b], "mismatch": mismatched[a] + mismatched[b]});
    let tok = |t: [u64; 3]| json!({"masculine": t[0], "feminine": t[1], "ambiguous": t[2], "total": t.iter().sum::<u64>()});
    let (en_p, ja_p) = (presence[0], presence[1]);

    json!({
        "schema_version": pronoun_audit::report::SCHEMA_VERSION,
        "tool": { "name": pronoun_audit::report::TOOL_NAME, "version": pronoun_audit::report::TOOL_VERSION },
        "config": null,
        "inputs": {
            "corpus": {
                "source_language": corpus.source_language,
                "target_language": corpus.target_language,
                "pairs": total,
                "digest": digest_corpus(corpus),
            },
            "matrix": null,
        },
        "lexicons": [lexicon_info(en), lexicon_info(ja)],
        "matrix": {
            "labels": LABELS,
            "rows": matrix.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            "total": total,
            "diagonal": diagonal,
        },
        "presence": { "english": counts(en_p), "japanese": counts(ja_p) },
        "match_table": {
            "masculine": mc(0),
            "non_masculine": mc2(1, 2),
            "feminine": mc(1),
            "non_feminine": mc2(0, 2),
            "ambiguous": mc(2),
            "non_ambiguous": mc2(0, 1),
        },
        "diagonal": {
            "matched": diagonal,
            "total": total,
            "rate": if total > 0 { json!(diagonal as f64 / total as f64) } else { Value::Null },
        },
        "bias_tests": [
            test("T1", "language x pronoun category presence", &["eng", "jpn"], &["M", "F", "A"],
                 vec![en_p.to_vec(), ja_p.to_vec()], false),
            test("T2", "language x masculine/non-masculine presence", &["eng", "jpn"], &["M", "non-M"],
                 vec![vec![en_p[0], en_p[1] + en_p[2]], vec![ja_p[0], ja_p[1] + ja_p[2]]], true),
            test("T3", "masculine/non-masculine x translation match/mismatch", &["M", "non-M"], &["match", "mismatch"],
                 vec![vec![matched[0], mismatched[0]], vec![matched[1] + matched[2], mismatched[1] + mismatched[2]]], true),
            test("T4", "feminine/non-feminine x translation match/mismatch", &["F", "non-F"], &["match", "mismatch"],
                 vec![vec![matched[1], mismatched[1]], vec![matched[0] + matched[2], mismatched[0] + mismatched[2]]], true),
        ],
        "tokens": { "english": tok(tokens[0]), "japanese": tok(tokens[1]) },
        "notes": [{
            "id": "within-language-gendered-vs-ambiguous",
            "status": "not reproducible from published data",
            "message": "The per-language tests of masculine+feminine against ambiguous presence are not computed: \
                        the published sample sizes for them cannot be derived from the published presence counts.",
        }],
    })
}

/// Distinct (start, end) spans, for set comparisons.
pub fn spans(found: &[Found]) -> BTreeSet<(usize, usize)> {
    found.iter().map(|f| (f.start, f.end)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pronoun_audit::lexicon::builtin_lexicon;

    #[test]
    fn english_cases() {
        let en = builtin_lexicon("eng").unwrap();
        let f = english("He said he'd see Him. Tell 'em, o'clock.", &en);
        let got: Vec<_> = f.iter().map(|f| f.surface.as_str()).collect();
        assert_eq!(got, ["He", "he", "Him", "'em"]);
    }

    #[test]
    fn japanese_longest() {
        let ja = builtin_lexicon("jpn").unwrap();
        let f = japanese("彼女は彼を見た。彼女らも。", &ja);
        let got: Vec<_> = f.iter().map(|f| f.surface.as_str()).collect();
        assert_eq!(got, ["彼女", "彼", "彼女ら"]);
    }

    #[test]
    fn labels() {
        let f = |c| Found {
            start: 0,
            end: 1,
            surface: String::new(),
            lexicon_surface: String::new(),
            category: c,
        };
        let name = |found: &[Found]| LABELS[label(found)];
        assert_eq!(name(&[]), "None");
        assert_eq!(name(&[f(GenderCategory::Ambiguous), f(GenderCategory::Feminine)]), "FA");
        assert_eq!(name(&[f(GenderCategory::Ambiguous), f(GenderCategory::Masculine)]), "MA");
        assert_eq!(name(&[f(GenderCategory::Masculine), f(GenderCategory::Feminine)]), "FM");
    }
}
