//! The audit report: every statistic plus the provenance needed to rerun it.
//!
//! Field order is fixed by declaration order, and no maps with unordered keys
//! appear anywhere, so serialization is byte-deterministic.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{Classifier, PairClassification, CATEGORY_SET_LABELS};
use crate::corpus::Corpus;
use crate::lexicon::{GenderCategory, Lexicon, LexiconSource};
use crate::stats::{
    bias_tests, confusion_matrix, diagonal_rate, match_table, presence_counts, BiasTest, ConfusionMatrix, DiagonalRate,
    MatchTable, PresenceCounts,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "pronoun-audit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Where the pairs or matrix came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InputConfig {
    Pairs {
        path: String,
        src_lang: String,
        tgt_lang: String,
    },
    Tatoeba {
        sentences: String,
        links: String,
        src_lang: String,
        tgt_lang: String,
    },
    Matrix {
        path: String,
    },
}

/// Invocation settings, echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: InputConfig,
    /// `builtin` or a file path.
    pub lexicon_en: String,
    pub lexicon_ja: String,
    pub out: Option<String>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub source_language: String,
    pub target_language: String,
    pub pairs: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub corpus: Option<CorpusInfo>,
    /// sha256 of an imported matrix file.
    pub matrix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconInfo {
    pub language: String,
    pub source: LexiconSource,
    pub entries: u64,
    pub digest: String,
}

impl LexiconInfo {
    pub fn of(lexicon: &Lexicon) -> Self {
        Self {
            language: lexicon.language().to_string(),
            source: lexicon.source().clone(),
            entries: lexicon.len() as u64,
            digest: lexicon.digest(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSection {
    /// Row (English) and column (Japanese) labels, canonical order.
    pub labels: Vec<String>,
    pub rows: Vec<Vec<u64>>,
    pub total: u64,
    pub diagonal: u64,
}

impl From<&ConfusionMatrix> for MatrixSection {
    fn from(m: &ConfusionMatrix) -> Self {
        Self {
            labels: CATEGORY_SET_LABELS.iter().map(|s| s.to_string()).collect(),
            rows: m.counts.iter().map(|r| r.to_vec()).collect(),
            total: m.total(),
            diagonal: m.diagonal(),
        }
    }
}

/// Pronoun tokens (not sentences) per category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub masculine: u64,
    pub feminine: u64,
    pub ambiguous: u64,
    pub total: u64,
}

impl TokenCounts {
    fn add(&mut self, category: GenderCategory) {
        match category {
            GenderCategory::Masculine => self.masculine += 1,
            GenderCategory::Feminine => self.feminine += 1,
            GenderCategory::Ambiguous => self.ambiguous += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub english: TokenCounts,
    pub japanese: TokenCounts,
}

pub fn token_totals(classifications: &[PairClassification]) -> TokenTotals {
    let mut totals = TokenTotals::default();
    for c in classifications {
        c.en_occurrences.iter().for_each(|o| totals.english.add(o.category));
        c.ja_occurrences.iter().for_each(|o| totals.japanese.add(o.category));
    }
    totals
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportNote {
    pub id: String,
    pub status: String,
    pub message: String,
}

fn standing_notes() -> Vec<ReportNote> {
    vec![ReportNote {
        id: "within-language-gendered-vs-ambiguous".into(),
        status: "not reproducible from published data".into(),
        message: "The per-language tests of masculine+feminine against ambiguous presence are not computed: \
                  the published sample sizes for them cannot be derived from the published presence counts."
            .into(),
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config: Option<RunConfig>,
    pub inputs: InputDigests,
    pub lexicons: Vec<LexiconInfo>,
    pub matrix: MatrixSection,
    pub presence: PresenceCounts,
    pub match_table: MatchTable,
    pub diagonal: DiagonalRate,
    pub bias_tests: Vec<BiasTest>,
    /// Absent when the report was built from an imported matrix.
    pub tokens: Option<TokenTotals>,
    pub notes: Vec<ReportNote>,
}

impl Report {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

fn statistics_report(
    matrix: &ConfusionMatrix,
    config: Option<&RunConfig>,
    inputs: InputDigests,
    lexicons: Vec<LexiconInfo>,
    tokens: Option<TokenTotals>,
) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::default(),
        config: config.cloned(),
        inputs,
        lexicons,
        matrix: MatrixSection::from(matrix),
        presence: presence_counts(matrix),
        match_table: match_table(matrix),
        diagonal: diagonal_rate(matrix),
        bias_tests: bias_tests(matrix),
        tokens,
        notes: standing_notes(),
    }
}

/// Report over already classified pairs.
pub fn report_from_classifications(
    corpus: &Corpus,
    classifications: &[PairClassification],
    source_lexicon: &Lexicon,
    target_lexicon: &Lexicon,
    config: Option<&RunConfig>,
) -> Report {
    let matrix = confusion_matrix(classifications);
    let inputs = InputDigests {
        corpus: Some(CorpusInfo {
            source_language: corpus.source_language.clone(),
            target_language: corpus.target_language.clone(),
            pairs: corpus.len() as u64,
            digest: corpus.digest(),
        }),
        matrix: None,
    };
    let lexicons = vec![LexiconInfo::of(source_lexicon), LexiconInfo::of(target_lexicon)];
    statistics_report(&matrix, config, inputs, lexicons, Some(token_totals(classifications)))
}

/// Classifies the corpus and reports on it.
pub fn audit_report(
    corpus: &Corpus,
    source_lexicon: &Lexicon,
    target_lexicon: &Lexicon,
    config: Option<&RunConfig>,
) -> Report {
    let classifications = Classifier::new(source_lexicon, target_lexicon).classify_corpus(corpus);
    report_from_classifications(corpus, &classifications, source_lexicon, target_lexicon, config)
}

/// Report over an imported matrix; token totals and lexicons are unknown.
pub fn matrix_report(matrix: &ConfusionMatrix, matrix_digest: Option<String>, config: Option<&RunConfig>) -> Report {
    let inputs = InputDigests {
        corpus: None,
        matrix: matrix_digest,
    };
    statistics_report(matrix, config, inputs, Vec::new(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_parallel_tsv;
    use crate::lexicon::builtin_lexicon;
    use crate::stats::TestOutcome;

    const PUBLISHED: &str = include_str!("../tests/fixtures/published_matrix.tsv");

    fn lexicons() -> (Lexicon, Lexicon) {
        (builtin_lexicon("eng").unwrap(), builtin_lexicon("jpn").unwrap())
    }

    #[test]
    fn empty_corpus() {
        let (en, ja) = lexicons();
        let r = audit_report(&Corpus::new("eng", "jpn"), &en, &ja, None);
        assert_eq!(r.matrix.total, 0);
        assert_eq!(r.diagonal.rate, None);
        assert_eq!(r.bias_tests.len(), 4);
        for t in &r.bias_tests {
            assert_eq!(
                t.outcome,
                TestOutcome::Error {
                    message: "degenerate table".into()
                }
            );
        }
        assert_eq!(r.tokens, Some(TokenTotals::default()));
    }

    #[test]
    fn deterministic_and_ordered() {
        let (en, ja) = lexicons();
        let corpus = parse_parallel_tsv("He ran.\t彼は走った。\nShe and I left.\t彼女と私は出た。\n".as_bytes(), "eng", "jpn")
            .unwrap()
            .corpus;
        let a = audit_report(&corpus, &en, &ja, None).to_json();
        let b = audit_report(&corpus, &en, &ja, None).to_json();
        assert_eq!(a, b);
        let keys = [
            "\"schema_version\"",
            "\"tool\"",
            "\"config\"",
            "\"inputs\"",
            "\"lexicons\"",
            "\"matrix\"",
            "\"presence\"",
            "\"match_table\"",
            "\"diagonal\"",
            "\"bias_tests\"",
            "\"tokens\"",
            "\"notes\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| a.find(&format!("\n  {k}")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["tokens"]["english"]["total"], 3);
        assert_eq!(parsed["lexicons"][0]["source"]["kind"], "builtin");
    }

    #[test]
    fn published_matrix_report() {
        let m = ConfusionMatrix::from_tsv(PUBLISHED).unwrap();
        let r = matrix_report(&m, Some(sha256_hex(PUBLISHED.as_bytes())), None);
        assert_eq!(r.matrix.total, 255_675);
        assert_eq!(r.presence.english.masculine, 43_453);
        assert_eq!(r.presence.japanese.non_masculine, 79_039);
        assert_eq!(r.match_table.feminine.mismatch, 2_438);
        assert!(r.tokens.is_none());
        assert!(r.lexicons.is_empty());
        assert_eq!(r.notes[0].status, "not reproducible from published data");
    }

    #[test]
    fn config_is_echoed() {
        let config = RunConfig {
            command: "stats".into(),
            input: InputConfig::Matrix { path: "m.tsv".into() },
            lexicon_en: "builtin".into(),
            lexicon_ja: "builtin".into(),
            out: None,
            workers: Some(2),
        };
        let r = matrix_report(&ConfusionMatrix::default(), None, Some(&config));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["config"]["input"]["mode"], "matrix");
        assert_eq!(v["config"]["workers"], 2);
    }
}
