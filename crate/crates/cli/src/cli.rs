use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pronoun-audit", version, about = "Audit pronoun categories in English/Japanese parallel corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// A corpus given either as a two-column parallel TSV or as Tatoeba-style
/// sentences and links files.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Parallel TSV: `source text<TAB>target text` per line.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["sentences", "links"])]
    pub pairs: Option<PathBuf>,
    /// Sentences file: `id<TAB>lang<TAB>text` per line.
    #[arg(long, value_name = "FILE", requires = "links")]
    pub sentences: Option<PathBuf>,
    /// Links file: `id<TAB>translation_id` per line.
    #[arg(long, value_name = "FILE", requires = "sentences")]
    pub links: Option<PathBuf>,
    /// Source language code.
    #[arg(long, default_value = "eng")]
    pub src_lang: String,
    /// Target language code.
    #[arg(long, default_value = "jpn")]
    pub tgt_lang: String,
    /// Source-side lexicon file (default: built-in list).
    #[arg(long, value_name = "FILE")]
    pub lexicon_en: Option<PathBuf>,
    /// Target-side lexicon file (default: built-in list).
    #[arg(long, value_name = "FILE")]
    pub lexicon_ja: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WorkerArgs {
    /// Worker threads for classification (default: one per core).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct RewriteArgs {
    /// Which pronouns get suggestions: gendered-only or all-pronouns.
    #[arg(long, default_value = "gendered-only")]
    pub scope: String,
    /// Paradigm registry file (default: built-in he/she/they).
    #[arg(long, value_name = "FILE")]
    pub paradigms: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a corpus and write the full JSON report.
    Audit {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        workers: WorkerArgs,
        /// Report path (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print or export the 8x8 confusion matrix TSV.
    Matrix {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        workers: WorkerArgs,
        /// Matrix TSV path (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the chi-square tests on an imported matrix TSV.
    Stats {
        /// 8x8 matrix TSV with canonical labels.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Also write the full JSON report here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Dump located pronouns per pair as JSON lines.
    Tokenize {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output path (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Built-in lexicon export and lexicon file validation.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Placeholder suggestion, application and expansion.
    #[command(subcommand)]
    Rewrite(RewriteCommand),
    /// Serve the review queue over HTTP.
    Serve {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        rewrite: RewriteArgs,
        /// Decisions log (JSON lines); created if absent.
        #[arg(long, value_name = "FILE")]
        decisions: PathBuf,
        /// Directory for templated exports.
        #[arg(long, value_name = "DIR", default_value = "export")]
        out: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Subcommand)]
pub enum LexiconCommand {
    /// Write a built-in lexicon in the lexicon file format.
    Export {
        /// Language code: eng or jpn.
        #[arg(long)]
        lang: String,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check a lexicon file and summarize it.
    Validate {
        #[arg(value_name = "FILE")]
        path: PathBuf,
        /// Language code, unless the file declares one.
        #[arg(long)]
        lang: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum RewriteCommand {
    /// Propose placeholders; writes JSON lines.
    Suggest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        rewrite: RewriteArgs,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Apply a decisions log and write the templated parallel TSV.
    Apply {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        rewrite: RewriteArgs,
        /// Decisions log (JSON lines).
        #[arg(long, value_name = "FILE")]
        decisions: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Expand a templated parallel TSV with one paradigm per index.
    Expand {
        /// Templated parallel TSV.
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        /// Assignments such as `1=he,2=she`.
        #[arg(long, value_name = "INDEX=ID,...")]
        assign: String,
        #[arg(long, value_name = "FILE")]
        paradigms: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Template and restore every paradigm pronoun; report mismatches.
    Roundtrip {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_name = "FILE")]
        paradigms: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}
