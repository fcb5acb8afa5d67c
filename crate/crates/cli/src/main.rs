//! `pronoun-audit` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 internal error.

mod cli;
mod input;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pronoun_audit::lexicon::{builtin_lexicon, load_lexicon, serialize_lexicon, GenderCategory};
use pronoun_audit::report::{matrix_report, report_from_classifications, sha256_hex, InputConfig, RunConfig};
use pronoun_audit::rewriter::{apply, expand, roundtrip_check, suggest, ReviewDecision, TemplatedPair};
use pronoun_audit::stats::{confusion_matrix, ConfusionMatrix, TestOutcome};
use pronoun_audit::{Classifier, PairClassification};
use pronoun_review::{log::parse_log, start_session, SessionConfig};

use cli::{Cli, Command, CorpusArgs, LexiconCommand, RewriteCommand};
use input::{load_corpus, load_lexicons, load_paradigms, read, read_text, run_config, scope, write_output};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Internal(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Audit { corpus, workers, out } => {
            let config = run_config("audit", &corpus, &out, workers.workers);
            let (corpus_data, en, ja, classified) = classify(&corpus, workers.workers)?;
            let report = report_from_classifications(&corpus_data, &classified, &en, &ja, Some(&config));
            write_output(out.as_ref(), &report.to_json())
        }
        Command::Matrix { corpus, workers, out } => {
            let (_, _, _, classified) = classify(&corpus, workers.workers)?;
            write_output(out.as_ref(), &confusion_matrix(&classified).to_tsv())
        }
        Command::Stats { matrix, out } => stats(&matrix, out),
        Command::Tokenize { corpus, out } => {
            let (_, _, _, classified) = classify(&corpus, None)?;
            let mut text = String::new();
            for c in &classified {
                text.push_str(&to_json_line(c)?);
            }
            write_output(out.as_ref(), &text)
        }
        Command::Lexicon(LexiconCommand::Export { lang, out }) => {
            let lexicon = builtin_lexicon(&lang).map_err(|e| CliError::Input(e.to_string()))?;
            let text = String::from_utf8(serialize_lexicon(&lexicon)).expect("lexicon text is UTF-8");
            write_output(out.as_ref(), &text)
        }
        Command::Lexicon(LexiconCommand::Validate { path, lang }) => {
            let lexicon = load_lexicon(&read(&path)?, &lang).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let counts: Vec<String> = GenderCategory::ALL
                .iter()
                .map(|&g| format!("{}={}", g.letter(), lexicon.surfaces(g).len()))
                .collect();
            println!(
                "ok: {} language={} entries={} {} sha256={}",
                path.display(),
                lexicon.language(),
                lexicon.len(),
                counts.join(" "),
                lexicon.digest()
            );
            Ok(())
        }
        Command::Rewrite(command) => rewrite(command),
        Command::Serve {
            corpus,
            rewrite,
            decisions,
            out,
            port,
        } => {
            let (en, ja) = load_lexicons(&corpus)?;
            let config = SessionConfig {
                corpus: load_corpus(&corpus)?,
                source_lexicon: en,
                target_lexicon: ja,
                paradigms: load_paradigms(rewrite.paradigms.as_ref())?,
                scope: scope(&rewrite)?,
                log_path: decisions,
                export_dir: out,
            };
            let (session, report) = start_session(config).map_err(|e| CliError::Input(e.to_string()))?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            let progress = session.progress();
            eprintln!(
                "serving {} suggestions ({} pending) on http://127.0.0.1:{port}/api/v1/",
                progress.total, progress.pending
            );
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port));
            runtime
                .block_on(pronoun_review::serve(session, addr))
                .map_err(|e| CliError::Input(format!("port {port}: {e}")))
        }
    }
}

type Classified = (
    pronoun_audit::Corpus,
    pronoun_audit::Lexicon,
    pronoun_audit::Lexicon,
    Vec<PairClassification>,
);

/// Loads inputs and classifies every pair, on a dedicated pool when a worker
/// count is given. Output order is corpus order for any worker count.
fn classify(args: &CorpusArgs, workers: Option<usize>) -> Result<Classified, CliError> {
    let corpus = load_corpus(args)?;
    let (en, ja) = load_lexicons(args)?;
    let classifier = Classifier::new(&en, &ja);
    let classified = match workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(|| classifier.classify_corpus(&corpus)),
        None => classifier.classify_corpus(&corpus),
    };
    Ok((corpus, en, ja, classified))
}

fn to_json_line<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut line = serde_json::to_string(value).map_err(|e| CliError::Internal(e.to_string()))?;
    line.push('\n');
    Ok(line)
}

fn stats(path: &PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let text = read_text(path)?;
    let matrix = ConfusionMatrix::from_tsv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let config = RunConfig {
        command: "stats".into(),
        input: InputConfig::Matrix {
            path: path.display().to_string(),
        },
        lexicon_en: "n/a".into(),
        lexicon_ja: "n/a".into(),
        out: out.as_ref().map(|p| p.display().to_string()),
        workers: None,
    };
    let report = matrix_report(&matrix, Some(sha256_hex(text.as_bytes())), Some(&config));
    let mut summary = format!("pairs={} diagonal={}", report.diagonal.total, report.diagonal.matched);
    if let Some(rate) = report.diagonal.rate {
        let _ = write!(summary, " rate={rate:.4}");
    }
    summary.push('\n');
    for test in &report.bias_tests {
        match &test.outcome {
            TestOutcome::Ok { result, chi2_uncorrected } => {
                let _ = write!(
                    summary,
                    "{}\t{}\tchi2={:.1}\tdf={}\tN={}\tV={:.3}",
                    test.id, test.description, result.chi2, result.df, result.n, result.cramers_v
                );
                if result.yates_applied {
                    let _ = write!(summary, "\t(Yates; uncorrected chi2={chi2_uncorrected:.1})");
                }
                summary.push('\n');
            }
            TestOutcome::Error { message } => {
                let _ = writeln!(summary, "{}\t{}\terror: {message}", test.id, test.description);
            }
        }
    }
    print!("{summary}");
    if let Some(out) = out {
        write_output(Some(&out), &report.to_json())?;
    }
    Ok(())
}

fn parse_assignment(spec: &str, paradigms: &pronoun_audit::ParadigmSet) -> Result<BTreeMap<u32, pronoun_audit::ParadigmPair>, CliError> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (index, id) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad assignment `{item}`; expected INDEX=PARADIGM")))?;
        let index: u32 = index
            .trim()
            .parse()
            .ok()
            .filter(|&i| i > 0)
            .ok_or_else(|| CliError::Usage(format!("bad placeholder index in `{item}`")))?;
        let pair = paradigms
            .get(id.trim())
            .ok_or_else(|| CliError::Input(format!("unknown paradigm `{}`", id.trim())))?;
        out.insert(index, pair.clone());
    }
    Ok(out)
}

fn rewrite(command: RewriteCommand) -> Result<(), CliError> {
    match command {
        RewriteCommand::Suggest { corpus, rewrite, out } => {
            let scope = scope(&rewrite)?;
            let paradigms = load_paradigms(rewrite.paradigms.as_ref())?;
            let data = load_corpus(&corpus)?;
            let (en, ja) = load_lexicons(&corpus)?;
            let classifier = Classifier::new(&en, &ja);
            let mut text = String::new();
            for pair in &data.pairs {
                for s in suggest(pair, &classifier, &paradigms, scope) {
                    text.push_str(&to_json_line(&s)?);
                }
            }
            write_output(out.as_ref(), &text)
        }
        RewriteCommand::Apply {
            corpus,
            rewrite,
            decisions,
            out,
        } => {
            let scope = scope(&rewrite)?;
            let paradigms = load_paradigms(rewrite.paradigms.as_ref())?;
            let data = load_corpus(&corpus)?;
            let (en, ja) = load_lexicons(&corpus)?;
            let log = read_text(&decisions)?;
            let replayed = parse_log(&log).map_err(|e| CliError::Input(format!("{}: {e}", decisions.display())))?;
            if replayed.torn_tail {
                eprintln!("warning: {}: partial final record ignored", decisions.display());
            }
            let decisions: Vec<ReviewDecision> = replayed.decisions.into_iter().map(|(_, d)| d).collect();
            let classifier = Classifier::new(&en, &ja);
            let mut text = String::new();
            for pair in &data.pairs {
                let suggestions = suggest(pair, &classifier, &paradigms, scope);
                match apply(pair, &suggestions, &decisions) {
                    Ok(t) => {
                        let _ = writeln!(text, "{}\t{}", t.source_text, t.target_text);
                    }
                    Err(e) => eprintln!("warning: pair {}: {e}; pair left out", pair.pair_id),
                }
            }
            write_output(out.as_ref(), &text)
        }
        RewriteCommand::Expand {
            pairs,
            assign,
            paradigms,
            out,
        } => {
            let paradigms = load_paradigms(paradigms.as_ref())?;
            let assignment = parse_assignment(&assign, &paradigms)?;
            let args = CorpusArgs {
                pairs: Some(pairs),
                sentences: None,
                links: None,
                src_lang: "eng".into(),
                tgt_lang: "jpn".into(),
                lexicon_en: None,
                lexicon_ja: None,
            };
            let data = load_corpus(&args)?;
            let mut text = String::new();
            for pair in &data.pairs {
                let templated = TemplatedPair {
                    pair_id: pair.pair_id.clone(),
                    source_text: pair.source.text.clone(),
                    target_text: pair.target.text.clone(),
                    applied: Vec::new(),
                };
                let expanded = expand(&templated, &assignment)
                    .map_err(|e| CliError::Input(format!("line {}: {e}", pair.source.id)))?;
                for flag in &expanded.agreement_flags {
                    eprintln!(
                        "warning: line {}: `{}` for [p{}] precedes a clitic; check verb agreement",
                        pair.source.id, flag.form, flag.index
                    );
                }
                let _ = writeln!(text, "{}\t{}", expanded.source_text, expanded.target_text);
            }
            write_output(out.as_ref(), &text)
        }
        RewriteCommand::Roundtrip { corpus, paradigms, out } => {
            let paradigms = load_paradigms(paradigms.as_ref())?;
            let data = load_corpus(&corpus)?;
            let (en, ja) = load_lexicons(&corpus)?;
            let classifier = Classifier::new(&en, &ja);
            let mut text = String::new();
            let (mut passed, mut out_of_paradigm) = (0, 0);
            for pair in &data.pairs {
                let report = roundtrip_check(pair, &classifier, &paradigms);
                passed += usize::from(report.passed);
                out_of_paradigm += report.out_of_paradigm.len();
                text.push_str(&to_json_line(&report)?);
            }
            write_output(out.as_ref(), &text)?;
            eprintln!(
                "roundtrip: {passed}/{} pairs passed; {out_of_paradigm} out-of-paradigm occurrences excluded",
                data.pairs.len()
            );
            Ok(())
        }
    }
}
