//! Reading corpora, lexicons and paradigm files named on the command line.

use std::path::{Path, PathBuf};

use pronoun_audit::corpus::{build_pairs, parse_links, parse_parallel_tsv, parse_sentences, Corpus};
use pronoun_audit::lexicon::{builtin_lexicon, load_lexicon, Lexicon};
use pronoun_audit::report::{InputConfig, RunConfig};
use pronoun_audit::rewriter::{ParadigmSet, SuggestionScope};

use crate::cli::{CorpusArgs, RewriteArgs};
use crate::CliError;

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
}

fn warn_skipped(path: &Path, skipped: usize, what: &str) {
    if skipped > 0 {
        eprintln!("warning: {}: skipped {skipped} malformed {what}", path.display());
    }
}

pub fn load_corpus(args: &CorpusArgs) -> Result<Corpus, CliError> {
    let invalid = |path: &Path, e: pronoun_audit::corpus::CorpusError| CliError::Input(format!("{}: {e}", path.display()));
    match (&args.pairs, &args.sentences, &args.links) {
        (Some(path), None, None) => {
            let parsed = parse_parallel_tsv(&read(path)?, &args.src_lang, &args.tgt_lang).map_err(|e| invalid(path, e))?;
            warn_skipped(path, parsed.skipped, "lines");
            Ok(parsed.corpus)
        }
        (None, Some(sentences), Some(links)) => {
            let bytes = read(sentences)?;
            let source = parse_sentences(&bytes, Some(&args.src_lang)).map_err(|e| invalid(sentences, e))?;
            let target = parse_sentences(&bytes, Some(&args.tgt_lang)).map_err(|e| invalid(sentences, e))?;
            warn_skipped(sentences, source.skipped, "sentence records");
            let parsed_links = parse_links(&read(links)?).map_err(|e| invalid(links, e))?;
            warn_skipped(links, parsed_links.skipped, "link records");
            let built = build_pairs(
                &args.src_lang,
                &args.tgt_lang,
                &source.sentences,
                &target.sentences,
                &parsed_links.links,
            );
            if built.dropped > 0 {
                eprintln!(
                    "warning: {}: dropped {} links without both a {} and a {} sentence",
                    links.display(),
                    built.dropped,
                    args.src_lang,
                    args.tgt_lang
                );
            }
            Ok(built.corpus)
        }
        _ => Err(CliError::Usage(
            "give exactly one input: --pairs FILE, or --sentences FILE with --links FILE".into(),
        )),
    }
}

fn lexicon(path: Option<&PathBuf>, language: &str) -> Result<Lexicon, CliError> {
    match path {
        Some(path) => load_lexicon(&read(path)?, language).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => builtin_lexicon(language).map_err(|e| CliError::Input(e.to_string())),
    }
}

pub fn load_lexicons(args: &CorpusArgs) -> Result<(Lexicon, Lexicon), CliError> {
    Ok((
        lexicon(args.lexicon_en.as_ref(), &args.src_lang)?,
        lexicon(args.lexicon_ja.as_ref(), &args.tgt_lang)?,
    ))
}

pub fn load_paradigms(path: Option<&PathBuf>) -> Result<ParadigmSet, CliError> {
    match path {
        Some(path) => ParadigmSet::load(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => Ok(ParadigmSet::builtin()),
    }
}

pub fn scope(args: &RewriteArgs) -> Result<SuggestionScope, CliError> {
    args.scope.parse().map_err(CliError::Usage)
}

fn display(path: &Option<PathBuf>) -> Option<String> {
    path.as_ref().map(|p| p.display().to_string())
}

fn lexicon_label(path: &Option<PathBuf>) -> String {
    display(path).unwrap_or_else(|| "builtin".into())
}

pub fn run_config(command: &str, args: &CorpusArgs, out: &Option<PathBuf>, workers: Option<usize>) -> RunConfig {
    let input = match (&args.pairs, &args.sentences, &args.links) {
        (Some(path), _, _) => InputConfig::Pairs {
            path: path.display().to_string(),
            src_lang: args.src_lang.clone(),
            tgt_lang: args.tgt_lang.clone(),
        },
        (_, sentences, links) => InputConfig::Tatoeba {
            sentences: display(sentences).unwrap_or_default(),
            links: display(links).unwrap_or_default(),
            src_lang: args.src_lang.clone(),
            tgt_lang: args.tgt_lang.clone(),
        },
    };
    RunConfig {
        command: command.into(),
        input,
        lexicon_en: lexicon_label(&args.lexicon_en),
        lexicon_ja: lexicon_label(&args.lexicon_ja),
        out: display(out),
        workers,
    }
}

pub fn write_output(out: Option<&PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}
