//! The review session: regenerated suggestions plus replayed decisions.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use pronoun_audit::corpus::{write_parallel_tsv, write_tatoeba, Corpus, Sentence, SentencePair};
use pronoun_audit::lexicon::{GenderCategory, Lexicon};
use pronoun_audit::rewriter::{
    apply, suggest, AppliedSubstitution, ParadigmSet, PlaceholderSuggestion, ReviewDecision, Side, SuggestionScope,
    SuggestionStatus,
};
use pronoun_audit::Classifier;
use serde::{Deserialize, Serialize};

use crate::log::{DecisionLog, Replayed};
use crate::{SessionError, SCHEMA_VERSION};

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 500;

pub struct SessionConfig {
    pub corpus: Corpus,
    pub source_lexicon: Lexicon,
    pub target_lexicon: Lexicon,
    pub paradigms: ParadigmSet,
    pub scope: SuggestionScope,
    pub log_path: PathBuf,
    pub export_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: u64,
    pub pending: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub edited: u64,
}

impl Progress {
    pub fn recount(suggestions: &[PlaceholderSuggestion]) -> Self {
        let mut p = Progress::default();
        for s in suggestions {
            p.bump(s.status, 1);
        }
        p
    }

    fn bump(&mut self, status: SuggestionStatus, delta: i64) {
        let slot = match status {
            SuggestionStatus::Pending => &mut self.pending,
            SuggestionStatus::Accepted => &mut self.accepted,
            SuggestionStatus::Rejected => &mut self.rejected,
            SuggestionStatus::Edited => &mut self.edited,
        };
        *slot = slot.checked_add_signed(delta).expect("progress counter underflow");
        self.total = self.total.checked_add_signed(delta).expect("progress counter underflow");
    }
}

/// Startup summary; `warnings` holds one line per skipped log entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StartReport {
    pub replayed: usize,
    pub skipped_unknown: usize,
    pub torn_tail: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuggestionFilter {
    pub status: Option<SuggestionStatus>,
    pub category: Option<GenderCategory>,
    /// A language code (`eng`) or a side (`source`, `target`).
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairContext {
    pub pair_id: String,
    pub source: Sentence,
    pub target: Sentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuggestionView {
    #[serde(flatten)]
    pub suggestion: PlaceholderSuggestion,
    pub pair: PairContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuggestionPage {
    pub items: Vec<SuggestionView>,
    /// 1-based.
    pub page: usize,
    pub page_size: usize,
    /// Matching suggestions across all pages.
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportError {
    pub pair_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportedSubstitution {
    pub pair_id: String,
    #[serde(flatten)]
    pub substitution: AppliedSubstitution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportReport {
    pub schema_version: u32,
    pub corpus_digest: String,
    pub pairs_total: usize,
    pub pairs_exported: usize,
    pub substitutions: Vec<ExportedSubstitution>,
    pub errors: Vec<ExportError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportFiles {
    pub pairs: PathBuf,
    pub sentences: PathBuf,
    pub links: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug)]
pub struct ReviewSession {
    corpus: Corpus,
    corpus_digest: String,
    /// Ordered by (pair_id, span start, side).
    suggestions: Vec<PlaceholderSuggestion>,
    by_id: HashMap<String, usize>,
    pairs: HashMap<String, usize>,
    progress: Progress,
    log: DecisionLog,
    export_dir: PathBuf,
}

/// Suggestions for a whole corpus in listing order.
pub fn corpus_suggestions(
    corpus: &Corpus,
    classifier: &Classifier,
    paradigms: &ParadigmSet,
    scope: SuggestionScope,
) -> Vec<PlaceholderSuggestion> {
    let mut all: Vec<PlaceholderSuggestion> = corpus
        .pairs
        .iter()
        .flat_map(|p| suggest(p, classifier, paradigms, scope))
        .collect();
    all.sort_by(|a, b| (&a.pair_id, a.span.start, a.side).cmp(&(&b.pair_id, b.span.start, b.side)));
    all
}

/// Pure replay: decisions applied in order over fresh suggestions. Unknown
/// ids are skipped.
pub fn replay(suggestions: &[PlaceholderSuggestion], decisions: &[ReviewDecision]) -> Vec<PlaceholderSuggestion> {
    let mut out = suggestions.to_vec();
    let index: HashMap<&str, usize> = suggestions
        .iter()
        .enumerate()
        .map(|(i, s)| (s.suggestion_id.as_str(), i))
        .collect();
    for d in decisions {
        if let Some(&i) = index.get(d.suggestion_id.as_str()) {
            d.apply_to(&mut out[i]);
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), SessionError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))
}

impl ReviewSession {
    /// Regenerates suggestions and replays the decisions log.
    pub fn start(config: SessionConfig) -> Result<(Self, StartReport), SessionError> {
        let classifier = Classifier::new(&config.source_lexicon, &config.target_lexicon);
        let suggestions = corpus_suggestions(&config.corpus, &classifier, &config.paradigms, config.scope);
        let (log, replayed) = DecisionLog::open(&config.log_path)?;
        let mut session = Self::assemble(config.corpus, suggestions, log, config.export_dir);
        let report = session.replay_log(replayed);
        Ok((session, report))
    }

    fn assemble(corpus: Corpus, suggestions: Vec<PlaceholderSuggestion>, log: DecisionLog, export_dir: PathBuf) -> Self {
        let by_id = suggestions
            .iter()
            .enumerate()
            .map(|(i, s)| (s.suggestion_id.clone(), i))
            .collect();
        let pairs = corpus
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.pair_id.clone(), i))
            .collect();
        Self {
            corpus_digest: corpus.digest(),
            progress: Progress::recount(&suggestions),
            corpus,
            suggestions,
            by_id,
            pairs,
            log,
            export_dir,
        }
    }

    fn replay_log(&mut self, replayed: Replayed) -> StartReport {
        let mut report = StartReport {
            torn_tail: replayed.torn_tail,
            ..Default::default()
        };
        if replayed.torn_tail {
            report
                .warnings
                .push("decisions log ended in a partial record; it was discarded".into());
        }
        for (line, decision) in replayed.decisions {
            match self.by_id.get(&decision.suggestion_id) {
                Some(&i) => {
                    self.set_status(i, &decision);
                    report.replayed += 1;
                }
                None => {
                    report.skipped_unknown += 1;
                    report.warnings.push(format!(
                        "decisions log line {line}: unknown suggestion `{}` skipped",
                        decision.suggestion_id
                    ));
                }
            }
        }
        report
    }

    fn set_status(&mut self, i: usize, decision: &ReviewDecision) {
        let before = self.suggestions[i].status;
        decision.apply_to(&mut self.suggestions[i]);
        self.progress.bump(before, -1);
        self.progress.bump(self.suggestions[i].status, 1);
    }

    /// Swaps the log destination, e.g. for fault injection.
    pub fn set_log(&mut self, log: DecisionLog) {
        self.log = log;
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn corpus_digest(&self) -> &str {
        &self.corpus_digest
    }

    pub fn suggestions(&self) -> &[PlaceholderSuggestion] {
        &self.suggestions
    }

    pub fn suggestion(&self, id: &str) -> Option<&PlaceholderSuggestion> {
        self.by_id.get(id).map(|&i| &self.suggestions[i])
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    pub fn pair(&self, pair_id: &str) -> Option<&SentencePair> {
        self.pairs.get(pair_id).map(|&i| &self.corpus.pairs[i])
    }

    pub fn pair_suggestions(&self, pair_id: &str) -> Vec<&PlaceholderSuggestion> {
        self.suggestions.iter().filter(|s| s.pair_id == pair_id).collect()
    }

    fn context(&self, pair_id: &str) -> PairContext {
        let pair = self.pair(pair_id).expect("suggestions come from corpus pairs");
        PairContext {
            pair_id: pair.pair_id.clone(),
            source: pair.source.clone(),
            target: pair.target.clone(),
        }
    }

    fn language_matches(&self, s: &PlaceholderSuggestion, language: &str) -> bool {
        match language {
            "source" => s.side == Side::Source,
            "target" => s.side == Side::Target,
            code => s.language == code,
        }
    }

    /// Validates a language filter value against the session's corpus.
    pub fn check_language(&self, language: &str) -> Result<(), SessionError> {
        let known = ["source", "target", &self.corpus.source_language, &self.corpus.target_language];
        if known.contains(&language) {
            Ok(())
        } else {
            Err(SessionError::Validation(format!(
                "unknown language `{language}` (expected one of {})",
                known.join(", ")
            )))
        }
    }

    pub fn list_suggestions(
        &self,
        filter: &SuggestionFilter,
        page: usize,
        page_size: usize,
    ) -> Result<SuggestionPage, SessionError> {
        if page == 0 {
            return Err(SessionError::Validation("page starts at 1".into()));
        }
        if page_size == 0 || page_size > MAX_PAGE_SIZE {
            return Err(SessionError::Validation(format!("page_size must be between 1 and {MAX_PAGE_SIZE}")));
        }
        if let Some(language) = &filter.language {
            self.check_language(language)?;
        }
        let matching: Vec<&PlaceholderSuggestion> = self
            .suggestions
            .iter()
            .filter(|s| filter.status.is_none_or(|st| s.status == st))
            .filter(|s| filter.category.is_none_or(|c| s.category == c))
            .filter(|s| filter.language.as_deref().is_none_or(|l| self.language_matches(s, l)))
            .collect();
        let items = matching
            .iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .map(|s| SuggestionView {
                suggestion: (*s).clone(),
                pair: self.context(&s.pair_id),
            })
            .collect();
        Ok(SuggestionPage {
            items,
            page,
            page_size,
            total: matching.len(),
        })
    }

    /// Logs the decision durably, then updates state. A decision that would
    /// not change the suggestion is acknowledged without logging.
    pub fn record_decision(&mut self, mut decision: ReviewDecision) -> Result<PlaceholderSuggestion, SessionError> {
        let &i = self
            .by_id
            .get(&decision.suggestion_id)
            .ok_or_else(|| SessionError::NotFound(decision.suggestion_id.clone()))?;
        decision
            .validate()
            .map_err(|e| SessionError::Validation(e.to_string()))?;

        let mut next = self.suggestions[i].clone();
        decision.apply_to(&mut next);
        if next == self.suggestions[i] {
            return Ok(next);
        }
        if decision.timestamp.is_empty() {
            decision.timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        }
        self.log
            .append(&decision)
            .map_err(|e| SessionError::LogWrite(format!("{}: {e}", self.log.path().display())))?;
        self.set_status(i, &decision);
        Ok(self.suggestions[i].clone())
    }

    /// Applies current decisions to every pair and writes the templated
    /// corpus. Pairs that fail to apply are left out and listed in the report.
    pub fn export_templated(&self) -> Result<(ExportFiles, ExportReport), SessionError> {
        let mut templated = Corpus::new(&self.corpus.source_language, &self.corpus.target_language);
        let mut report = ExportReport {
            schema_version: SCHEMA_VERSION,
            corpus_digest: self.corpus_digest.clone(),
            pairs_total: self.corpus.len(),
            pairs_exported: 0,
            substitutions: Vec::new(),
            errors: Vec::new(),
        };
        let mut by_pair: HashMap<&str, Vec<PlaceholderSuggestion>> = HashMap::new();
        for s in &self.suggestions {
            by_pair.entry(s.pair_id.as_str()).or_default().push(s.clone());
        }
        for pair in &self.corpus.pairs {
            let suggestions = by_pair.get(pair.pair_id.as_str()).map_or(&[][..], Vec::as_slice);
            match apply(pair, suggestions, &[]) {
                Ok(t) => {
                    let mut source = pair.source.clone();
                    let mut target = pair.target.clone();
                    source.text = t.source_text;
                    target.text = t.target_text;
                    templated.pairs.push(SentencePair::new(source, target));
                    report
                        .substitutions
                        .extend(t.applied.into_iter().map(|substitution| ExportedSubstitution {
                            pair_id: pair.pair_id.clone(),
                            substitution,
                        }));
                }
                Err(e) => report.errors.push(ExportError {
                    pair_id: pair.pair_id.clone(),
                    message: e.to_string(),
                }),
            }
        }
        report.pairs_exported = templated.len();

        std::fs::create_dir_all(&self.export_dir)
            .map_err(|e| SessionError::Io(format!("{}: {e}", self.export_dir.display())))?;
        let files = ExportFiles {
            pairs: self.export_dir.join("templated_pairs.tsv"),
            sentences: self.export_dir.join("templated_sentences.tsv"),
            links: self.export_dir.join("templated_links.tsv"),
            report: self.export_dir.join("export_report.json"),
        };
        let (sentences, links) = write_tatoeba(&templated);
        write_file(&files.pairs, &write_parallel_tsv(&templated))?;
        write_file(&files.sentences, &sentences)?;
        write_file(&files.links, &links)?;
        let json = serde_json::to_string_pretty(&report).expect("export report serializes") + "\n";
        write_file(&files.report, &json)?;
        Ok((files, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::LogSink;
    use pronoun_audit::corpus::parse_parallel_tsv;
    use pronoun_audit::lexicon::builtin_lexicon;
    use pronoun_audit::rewriter::DecisionAction;

    const PAIRS: &str = "He said his idea.\t彼は考えを言った。\nShe saw them.\t彼女は彼らを見た。\nCats sleep.\t猫が寝る。\n";

    fn config(dir: &Path, pairs: &str) -> SessionConfig {
        SessionConfig {
            corpus: parse_parallel_tsv(pairs.as_bytes(), "eng", "jpn").unwrap().corpus,
            source_lexicon: builtin_lexicon("eng").unwrap(),
            target_lexicon: builtin_lexicon("jpn").unwrap(),
            paradigms: ParadigmSet::builtin(),
            scope: SuggestionScope::GenderedOnly,
            log_path: dir.join("decisions.jsonl"),
            export_dir: dir.join("export"),
        }
    }

    fn decide(id: &str, action: DecisionAction, replacement: Option<&str>) -> ReviewDecision {
        ReviewDecision {
            suggestion_id: id.into(),
            action,
            replacement: replacement.map(str::to_string),
            reviewer: "test".into(),
            timestamp: "2026-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn fresh_session_is_all_pending() {
        let dir = tempfile::tempdir().unwrap();
        let (s, report) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        assert_eq!(report, StartReport::default());
        let p = s.progress();
        assert_eq!(p.total, p.pending);
        assert_eq!(p.total, s.suggestions().len() as u64);
        assert!(p.total >= 5);
    }

    #[test]
    fn resume_after_two_decisions() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        let ids: Vec<String> = s.suggestions().iter().map(|s| s.suggestion_id.clone()).collect();
        s.record_decision(decide(&ids[0], DecisionAction::Accept, None)).unwrap();
        s.record_decision(decide(&ids[1], DecisionAction::Reject, None)).unwrap();
        let before = s.progress();
        drop(s);
        let (s, report) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        assert_eq!(report.replayed, 2);
        assert_eq!(s.progress(), before);
        assert_eq!(s.progress().pending, s.progress().total - 2);
    }

    #[test]
    fn vanished_suggestion_warns() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        let first = s.suggestions()[0].suggestion_id.clone();
        s.record_decision(decide(&first, DecisionAction::Accept, None)).unwrap();
        drop(s);
        let edited = PAIRS.replacen("He said his idea.", "Someone said an idea.", 1);
        let (s, report) = ReviewSession::start(config(dir.path(), &edited)).unwrap();
        assert_eq!(report.skipped_unknown, 1);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(s.progress().pending, s.progress().total);
    }

    #[test]
    fn unknown_and_invalid_decisions() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        assert!(matches!(
            s.record_decision(decide("nope", DecisionAction::Accept, None)),
            Err(SessionError::NotFound(_))
        ));
        let id = s.suggestions()[0].suggestion_id.clone();
        assert!(matches!(
            s.record_decision(decide(&id, DecisionAction::Edit, Some("[p0]"))),
            Err(SessionError::Validation(_))
        ));
        let edited = s.record_decision(decide(&id, DecisionAction::Edit, Some("[p2:obj]"))).unwrap();
        assert_eq!(edited.status, SuggestionStatus::Edited);
        assert_eq!(edited.edited_text.as_deref(), Some("[p2:obj]"));
    }

    #[test]
    fn repeated_decision_is_noop() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        let id = s.suggestions()[0].suggestion_id.clone();
        s.record_decision(decide(&id, DecisionAction::Accept, None)).unwrap();
        let after_first = s.progress();
        s.record_decision(decide(&id, DecisionAction::Accept, None)).unwrap();
        assert_eq!(s.progress(), after_first);
        assert_eq!(after_first, Progress::recount(s.suggestions()));
    }

    struct Broken;

    impl std::io::Write for Broken {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("disk full"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    impl LogSink for Broken {
        fn sync(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn log_failure_leaves_state_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        s.set_log(DecisionLog::with_sink(Path::new("broken"), Box::new(Broken)));
        let id = s.suggestions()[0].suggestion_id.clone();
        let before = s.suggestions().to_vec();
        assert!(matches!(
            s.record_decision(decide(&id, DecisionAction::Accept, None)),
            Err(SessionError::LogWrite(_))
        ));
        assert_eq!(s.suggestions(), before.as_slice());
        assert_eq!(s.progress().pending, s.progress().total);
    }

    #[test]
    fn listing_filters_and_pages() {
        let dir = tempfile::tempdir().unwrap();
        let (s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        let all = s.list_suggestions(&SuggestionFilter::default(), 1, 50).unwrap();
        assert_eq!(all.total, s.suggestions().len());
        let feminine = SuggestionFilter {
            category: Some(GenderCategory::Feminine),
            ..Default::default()
        };
        let page = s.list_suggestions(&feminine, 1, 50).unwrap();
        assert!(page.total > 0 && page.items.iter().all(|v| v.suggestion.category == GenderCategory::Feminine));
        let beyond = s.list_suggestions(&SuggestionFilter::default(), 99, 2).unwrap();
        assert!(beyond.items.is_empty());
        assert_eq!(beyond.total, all.total);
        let japanese = SuggestionFilter {
            language: Some("jpn".into()),
            ..Default::default()
        };
        assert!(s
            .list_suggestions(&japanese, 1, 50)
            .unwrap()
            .items
            .iter()
            .all(|v| v.suggestion.side == Side::Target));
        assert!(s.list_suggestions(&SuggestionFilter::default(), 0, 10).is_err());
        assert!(s.list_suggestions(&SuggestionFilter::default(), 1, MAX_PAGE_SIZE + 1).is_err());
        let bad = SuggestionFilter {
            language: Some("fra".into()),
            ..Default::default()
        };
        assert!(s.list_suggestions(&bad, 1, 10).is_err());
    }

    #[test]
    fn export_without_decisions_is_identity_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), PAIRS);
        let original = write_parallel_tsv(&cfg.corpus);
        let (s, _) = ReviewSession::start(cfg).unwrap();
        let (files, report) = s.export_templated().unwrap();
        let first = std::fs::read(&files.pairs).unwrap();
        assert_eq!(String::from_utf8(first.clone()).unwrap(), original);
        assert!(report.substitutions.is_empty());
        let first_report = std::fs::read(&files.report).unwrap();
        s.export_templated().unwrap();
        assert_eq!(std::fs::read(&files.pairs).unwrap(), first);
        assert_eq!(std::fs::read(&files.report).unwrap(), first_report);
    }

    #[test]
    fn export_two_accepts() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), "He said his idea.\t考えを言った。\n")).unwrap();
        let ids: Vec<String> = s.suggestions().iter().map(|s| s.suggestion_id.clone()).collect();
        assert_eq!(ids.len(), 2);
        for id in &ids {
            s.record_decision(decide(id, DecisionAction::Accept, None)).unwrap();
        }
        let (files, report) = s.export_templated().unwrap();
        assert_eq!(
            std::fs::read_to_string(files.pairs).unwrap(),
            "[p1:subj] said [p1:poss] idea.\t考えを言った。\n"
        );
        assert_eq!(report.substitutions.len(), 2);
    }

    #[test]
    fn replay_matches_session() {
        let dir = tempfile::tempdir().unwrap();
        let (mut s, _) = ReviewSession::start(config(dir.path(), PAIRS)).unwrap();
        let fresh = s.suggestions().to_vec();
        let decisions = vec![
            decide(&fresh[0].suggestion_id, DecisionAction::Accept, None),
            decide(&fresh[1].suggestion_id, DecisionAction::Edit, Some("that person")),
            decide(&fresh[0].suggestion_id, DecisionAction::Reject, None),
        ];
        for d in &decisions {
            s.record_decision(d.clone()).unwrap();
        }
        assert_eq!(s.suggestions(), replay(&fresh, &decisions).as_slice());
    }
}
