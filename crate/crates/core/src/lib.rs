//! Pronoun auditing for English/Japanese parallel corpora.
//!
//! The pipeline runs corpus ingestion, lexicon-driven pronoun location,
//! per-pair category-set classification, and a confusion matrix from which
//! presence counts, match/mismatch tables and chi-square tests are derived.
//! The [`rewriter`] module replaces located pronouns with `[p]` placeholder
//! tokens and expands templates back from pronoun paradigms.

pub mod classifier;
pub mod corpus;
pub mod lexicon;
pub mod report;
pub mod rewriter;
pub mod stats;
pub mod tokenizer;

pub use classifier::{category_set, classify_pair, CategorySet, Classifier, PairClassification};
pub use corpus::{Corpus, Sentence, SentencePair};
pub use lexicon::{builtin_lexicon, load_lexicon, serialize_lexicon, GenderCategory, Lexicon};
pub use stats::{bias_tests, chi_square, confusion_matrix, match_table, presence_counts, ConfusionMatrix};
pub use tokenizer::{extract_pronouns_en, extract_pronouns_ja, preprocess_ja, PronounOccurrence, Span};
pub use rewriter::{
    apply, expand, roundtrip_check, suggest, ParadigmPair, ParadigmSet, PlaceholderSuggestion, PlaceholderToken,
    ReviewDecision, SuggestionScope, TemplatedPair,
};
pub use report::{audit_report, matrix_report, Report, RunConfig};
