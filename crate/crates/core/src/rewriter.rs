//! Pronoun placeholders.
//!
//! Located pronouns are proposed for replacement by placeholder tokens
//! (`[p]`, `[p1]`, `[p1:subj]`, `[p1:subj:list]`). A reviewer accepts,
//! rejects or edits each proposal; accepted proposals are applied to produce
//! a templated pair, and templates are expanded back into concrete text from
//! a paradigm per placeholder index.
//!
//! Within one pair, every occurrence belonging to the same paradigm shares a
//! placeholder index, across both languages. Occurrences outside every
//! paradigm are grouped by their lexicon surface.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Classifier;
use crate::corpus::SentencePair;
use crate::lexicon::GenderCategory;
use crate::tokenizer::{byte_range, case_fold, is_apostrophe, PronounOccurrence, Span};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("malformed placeholder `{0}`")]
    MalformedPlaceholder(String),
    #[error("pair {pair_id}: accepted spans overlap ({first} and {second})")]
    Overlap {
        pair_id: String,
        first: String,
        second: String,
    },
    #[error("placeholder index {0} has no paradigm assigned")]
    Unassigned(u32),
    #[error("placeholder index {index}: paradigm `{paradigm}` has no {role} form")]
    RoleMissing {
        index: u32,
        paradigm: String,
        role: String,
    },
    #[error("placeholder index {index} is restricted to list `{expected}` but paradigm `{found}` was assigned")]
    ListMismatch {
        index: u32,
        expected: String,
        found: String,
    },
    #[error("invalid decision for {suggestion_id}: {reason}")]
    InvalidDecision { suggestion_id: String, reason: String },
    #[error("paradigm line {line}: {message}")]
    ParadigmFormat { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subj,
    Obj,
    Poss,
    Refl,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Subj, Role::Obj, Role::Poss, Role::Refl];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Subj => "subj",
            Role::Obj => "obj",
            Role::Poss => "poss",
            Role::Refl => "refl",
        }
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaceholderToken {
    pub index: u32,
    pub role: Option<Role>,
    pub list_id: Option<String>,
}

impl PlaceholderToken {
    pub fn new(index: u32) -> Self {
        Self {
            index,
            role: None,
            list_id: None,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PlaceholderToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[p{}", self.index)?;
        if let Some(role) = self.role {
            write!(f, ":{}", role.as_str())?;
            if let Some(list) = &self.list_id {
                write!(f, ":{list}")?;
            }
        }
        f.write_str("]")
    }
}

fn valid_list_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl FromStr for PlaceholderToken {
    type Err = RewriteError;

    /// `[p]` | `[p<index>]` | `[p<index>:<role>]` | `[p<index>:<role>:<list_id>]`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RewriteError::MalformedPlaceholder(s.to_string());
        let inner = s.strip_prefix("[p").and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let mut parts = inner.split(':');
        let index_part = parts.next().unwrap_or_default();
        let index = if index_part.is_empty() {
            1
        } else {
            if !index_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            index_part.parse::<u32>().map_err(|_| bad())?
        };
        if index == 0 {
            return Err(bad());
        }
        let role = match parts.next() {
            None => None,
            Some(r) => Some(r.parse::<Role>().map_err(|_| bad())?),
        };
        let list_id = match parts.next() {
            None => None,
            Some(l) if valid_list_id(l) => Some(l.to_string()),
            Some(_) => return Err(bad()),
        };
        if parts.next().is_some() || (index_part.is_empty() && role.is_some()) {
            return Err(bad());
        }
        Ok(Self { index, role, list_id })
    }
}

/// Every placeholder in `text` with its byte range. Any `[p` that does not
/// start a well-formed token is an error.
pub fn find_placeholders(text: &str) -> Result<Vec<(std::ops::Range<usize>, PlaceholderToken)>, RewriteError> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = text[from..].find("[p") {
        let start = from + pos;
        let Some(close) = text[start..].find(']') else {
            return Err(RewriteError::MalformedPlaceholder(text[start..].to_string()));
        };
        let end = start + close + 1;
        let token: PlaceholderToken = text[start..end].parse()?;
        out.push((start..end, token));
        from = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadigmForms {
    English {
        subj: String,
        obj: String,
        poss: String,
        refl: String,
    },
    Japanese {
        base: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paradigm {
    pub language: String,
    pub category: GenderCategory,
    pub forms: ParadigmForms,
}

impl Paradigm {
    pub fn english(category: GenderCategory, subj: &str, obj: &str, poss: &str, refl: &str) -> Self {
        Self {
            language: "eng".into(),
            category,
            forms: ParadigmForms::English {
                subj: subj.into(),
                obj: obj.into(),
                poss: poss.into(),
                refl: refl.into(),
            },
        }
    }

    pub fn japanese(category: GenderCategory, base: &str) -> Self {
        Self {
            language: "jpn".into(),
            category,
            forms: ParadigmForms::Japanese { base: base.into() },
        }
    }

    /// Surface for a role. English tokens without a role read as subject;
    /// Japanese paradigms only have a role-less base form.
    pub fn form(&self, role: Option<Role>) -> Option<&str> {
        match (&self.forms, role) {
            (ParadigmForms::English { subj, obj, poss, refl }, role) => Some(match role.unwrap_or(Role::Subj) {
                Role::Subj => subj,
                Role::Obj => obj,
                Role::Poss => poss,
                Role::Refl => refl,
            }),
            (ParadigmForms::Japanese { base }, None) => Some(base),
            (ParadigmForms::Japanese { .. }, Some(_)) => None,
        }
    }

    /// First role (subj, obj, poss, refl order) whose form matches the
    /// surface; `Some(None)` for a Japanese base form.
    fn role_of(&self, surface: &str) -> Option<Option<Role>> {
        match &self.forms {
            ParadigmForms::English { .. } => {
                let folded = case_fold(surface);
                Role::ALL
                    .into_iter()
                    .find(|&r| self.form(Some(r)).is_some_and(|f| case_fold(f) == folded))
                    .map(Some)
            }
            ParadigmForms::Japanese { base } => (base == surface).then_some(None),
        }
    }
}

/// A referent's paradigm in both languages. The id doubles as the list id a
/// placeholder may be restricted to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParadigmPair {
    pub id: String,
    pub source: Paradigm,
    pub target: Paradigm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParadigmSet {
    pub pairs: Vec<ParadigmPair>,
}

impl ParadigmSet {
    /// he/彼, she/彼女, they/あの人.
    pub fn builtin() -> Self {
        use GenderCategory::*;
        let pair = |id: &str, en: Paradigm, ja: Paradigm| ParadigmPair {
            id: id.into(),
            source: en,
            target: ja,
        };
        Self {
            pairs: vec![
                pair(
                    "he",
                    Paradigm::english(Masculine, "he", "him", "his", "himself"),
                    Paradigm::japanese(Masculine, "彼"),
                ),
                pair(
                    "she",
                    Paradigm::english(Feminine, "she", "her", "her", "herself"),
                    Paradigm::japanese(Feminine, "彼女"),
                ),
                pair(
                    "they",
                    Paradigm::english(Ambiguous, "they", "them", "their", "themselves"),
                    Paradigm::japanese(Ambiguous, "あの人"),
                ),
            ],
        }
    }

    /// Reads a paradigm registry, one pair per line:
    /// `id<TAB>category<TAB>subj,obj,poss,refl<TAB>japanese base`.
    pub fn load(text: &str) -> Result<Self, RewriteError> {
        let mut pairs: Vec<ParadigmPair> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: &str| RewriteError::ParadigmFormat {
                line: line_no,
                message: message.to_string(),
            };
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, category, english, japanese] = fields[..] else {
                return Err(err("expected id, category, english forms, japanese base"));
            };
            if !valid_list_id(id) {
                return Err(err("id must be ASCII letters, digits, '_' or '-'"));
            }
            if pairs.iter().any(|p| p.id == id) {
                return Err(err("duplicate id"));
            }
            let category = GenderCategory::from_letter(category).ok_or_else(|| err("category must be M, F or A"))?;
            let forms: Vec<&str> = english.split(',').map(str::trim).collect();
            let [subj, obj, poss, refl] = forms[..] else {
                return Err(err("english forms must be subj,obj,poss,refl"));
            };
            if forms.iter().any(|f| f.is_empty()) || japanese.trim().is_empty() {
                return Err(err("empty form"));
            }
            pairs.push(ParadigmPair {
                id: id.to_string(),
                source: Paradigm::english(category, subj, obj, poss, refl),
                target: Paradigm::japanese(category, japanese.trim()),
            });
        }
        Ok(Self { pairs })
    }

    pub fn get(&self, id: &str) -> Option<&ParadigmPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    fn locate(&self, side: Side, surface: &str) -> Option<(&ParadigmPair, Option<Role>)> {
        self.pairs.iter().find_map(|p| {
            let paradigm = match side {
                Side::Source => &p.source,
                Side::Target => &p.target,
            };
            paradigm.role_of(surface).map(|role| (p, role))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    fn code(self) -> &'static str {
        match self {
            Side::Source => "src",
            Side::Target => "tgt",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuggestionScope {
    /// Masculine and feminine pronouns plus source-side paradigm forms
    /// (they/them/their/themselves with the built-in set).
    #[default]
    GenderedOnly,
    AllPronouns,
}

impl FromStr for SuggestionScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gendered-only" | "gendered" => Ok(Self::GenderedOnly),
            "all-pronouns" | "all" => Ok(Self::AllPronouns),
            other => Err(format!("unknown scope `{other}` (expected gendered-only or all-pronouns)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionStatus {
    #[default]
    Pending,
    Accepted,
    Rejected,
    Edited,
}

impl FromStr for SuggestionStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pending" => Ok(Self::Pending),
            "accepted" => Ok(Self::Accepted),
            "rejected" => Ok(Self::Rejected),
            "edited" => Ok(Self::Edited),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderSuggestion {
    pub suggestion_id: String,
    pub pair_id: String,
    pub side: Side,
    pub language: String,
    pub span: Span,
    pub original: String,
    pub lexicon_surface: String,
    pub category: GenderCategory,
    /// Paradigm pair the surface belongs to, if any.
    pub paradigm_id: Option<String>,
    pub proposed: PlaceholderToken,
    /// The pronoun carries a clitic (`he's`), so expanding another paradigm
    /// may need verb agreement fixes.
    pub agreement_risk: bool,
    pub status: SuggestionStatus,
    pub edited_text: Option<String>,
}

pub fn suggestion_id(pair_id: &str, side: Side, span: Span) -> String {
    format!("{pair_id}.{}.{}-{}", side.code(), span.start, span.end)
}

fn followed_by_clitic(text: &str, span: Span) -> bool {
    let mut rest = text.chars().skip(span.end);
    matches!((rest.next(), rest.next()), (Some(a), Some(b)) if is_apostrophe(a) && b.is_alphabetic())
}

/// Suggestions for the occurrences already located in a pair.
pub fn suggest_from_occurrences(
    pair: &SentencePair,
    source_occurrences: &[PronounOccurrence],
    target_occurrences: &[PronounOccurrence],
    paradigms: &ParadigmSet,
    scope: SuggestionScope,
) -> Vec<PlaceholderSuggestion> {
    let mut indices: HashMap<String, u32> = HashMap::new();
    let mut out = Vec::new();
    let sides = [
        (Side::Source, &pair.source, source_occurrences),
        (Side::Target, &pair.target, target_occurrences),
    ];
    for (side, sentence, occurrences) in sides {
        for occ in occurrences {
            let located = paradigms.locate(side, &occ.lexicon_surface);
            let in_scope = match scope {
                SuggestionScope::AllPronouns => true,
                SuggestionScope::GenderedOnly => {
                    occ.category != GenderCategory::Ambiguous || (side == Side::Source && located.is_some())
                }
            };
            if !in_scope {
                continue;
            }
            let group = match located {
                Some((p, _)) => format!("paradigm:{}", p.id),
                None => format!("surface:{}:{}", side.code(), occ.lexicon_surface),
            };
            let next = indices.len() as u32 + 1;
            let index = *indices.entry(group).or_insert(next);
            let mut proposed = PlaceholderToken::new(index);
            if side == Side::Source {
                if let Some((_, Some(role))) = located {
                    proposed = proposed.with_role(role);
                }
            }
            out.push(PlaceholderSuggestion {
                suggestion_id: suggestion_id(&pair.pair_id, side, occ.span),
                pair_id: pair.pair_id.clone(),
                side,
                language: sentence.language.clone(),
                span: occ.span,
                original: occ.surface.clone(),
                lexicon_surface: occ.lexicon_surface.clone(),
                category: occ.category,
                paradigm_id: located.map(|(p, _)| p.id.clone()),
                proposed,
                agreement_risk: side == Side::Source && followed_by_clitic(&sentence.text, occ.span),
                status: SuggestionStatus::Pending,
                edited_text: None,
            });
        }
    }
    out
}

/// Proposes a placeholder for every in-scope pronoun occurrence in a pair.
pub fn suggest(
    pair: &SentencePair,
    classifier: &Classifier,
    paradigms: &ParadigmSet,
    scope: SuggestionScope,
) -> Vec<PlaceholderSuggestion> {
    let source = classifier.source_matcher().extract(&pair.source.text);
    let target = classifier.target_matcher().extract(&pair.target.text);
    suggest_from_occurrences(pair, &source, &target, paradigms, scope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionAction {
    Accept,
    Reject,
    Edit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub suggestion_id: String,
    pub action: DecisionAction,
    #[serde(default)]
    pub replacement: Option<String>,
    #[serde(default)]
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: String,
}

/// Replacement text must be a single line; any `[p` inside it must be a
/// well-formed placeholder.
pub fn validate_replacement(text: &str) -> Result<(), String> {
    if text.trim().is_empty() {
        return Err("replacement is empty".into());
    }
    if text.contains(['\t', '\n', '\r']) {
        return Err("replacement contains a tab or line break".into());
    }
    find_placeholders(text).map(|_| ()).map_err(|e| e.to_string())
}

impl ReviewDecision {
    pub fn validate(&self) -> Result<(), RewriteError> {
        let invalid = |reason: String| RewriteError::InvalidDecision {
            suggestion_id: self.suggestion_id.clone(),
            reason,
        };
        match (self.action, &self.replacement) {
            (DecisionAction::Edit, None) => Err(invalid("edit requires a replacement".into())),
            (DecisionAction::Edit, Some(text)) => validate_replacement(text).map_err(invalid),
            _ => Ok(()),
        }
    }

    pub fn status(&self) -> SuggestionStatus {
        match self.action {
            DecisionAction::Accept => SuggestionStatus::Accepted,
            DecisionAction::Reject => SuggestionStatus::Rejected,
            DecisionAction::Edit => SuggestionStatus::Edited,
        }
    }

    /// Applies this decision's verdict to a suggestion.
    pub fn apply_to(&self, suggestion: &mut PlaceholderSuggestion) {
        suggestion.status = self.status();
        suggestion.edited_text = match self.action {
            DecisionAction::Edit => self.replacement.clone(),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedSubstitution {
    pub suggestion_id: String,
    pub side: Side,
    pub span: Span,
    pub replacement: String,
    pub agreement_risk: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatedPair {
    pub pair_id: String,
    pub source_text: String,
    pub target_text: String,
    pub applied: Vec<AppliedSubstitution>,
}

fn substitute(text: &str, mut edits: Vec<(Span, &str)>) -> String {
    edits.sort_by_key(|(span, _)| std::cmp::Reverse(span.start));
    let mut out = text.to_string();
    for (span, replacement) in edits {
        out.replace_range(byte_range(text, span), replacement);
    }
    out
}

/// Replaces accepted and edited spans. `decisions` are applied in order over
/// the suggestions' current status, so the last decision per suggestion wins;
/// decisions for other pairs are ignored.
pub fn apply(
    pair: &SentencePair,
    suggestions: &[PlaceholderSuggestion],
    decisions: &[ReviewDecision],
) -> Result<TemplatedPair, RewriteError> {
    let mut current: Vec<PlaceholderSuggestion> = suggestions
        .iter()
        .filter(|s| s.pair_id == pair.pair_id)
        .cloned()
        .collect();
    let positions: HashMap<String, usize> = current
        .iter()
        .enumerate()
        .map(|(i, s)| (s.suggestion_id.clone(), i))
        .collect();
    for decision in decisions {
        if let Some(&i) = positions.get(&decision.suggestion_id) {
            decision.validate()?;
            decision.apply_to(&mut current[i]);
        }
    }

    let mut applied: Vec<AppliedSubstitution> = current
        .iter()
        .filter_map(|s| {
            let replacement = match s.status {
                SuggestionStatus::Accepted => s.proposed.render(),
                SuggestionStatus::Edited => s.edited_text.clone()?,
                _ => return None,
            };
            Some(AppliedSubstitution {
                suggestion_id: s.suggestion_id.clone(),
                side: s.side,
                span: s.span,
                replacement,
                agreement_risk: s.agreement_risk,
            })
        })
        .collect();
    applied.sort_by(|a, b| (a.side, a.span).cmp(&(b.side, b.span)));
    for w in applied.windows(2) {
        if w[0].side == w[1].side && w[0].span.overlaps(&w[1].span) {
            return Err(RewriteError::Overlap {
                pair_id: pair.pair_id.clone(),
                first: w[0].suggestion_id.clone(),
                second: w[1].suggestion_id.clone(),
            });
        }
    }

    let edits = |side: Side| {
        applied
            .iter()
            .filter(|a| a.side == side)
            .map(|a| (a.span, a.replacement.as_str()))
            .collect::<Vec<_>>()
    };
    Ok(TemplatedPair {
        pair_id: pair.pair_id.clone(),
        source_text: substitute(&pair.source.text, edits(Side::Source)),
        target_text: substitute(&pair.target.text, edits(Side::Target)),
        applied,
    })
}

fn opens_sentence(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn transparent(c: char) -> bool {
    c.is_whitespace() || matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}' | '(' | '[' | '\u{2014}' | '-')
}

/// Whether the next word after `prefix` starts a sentence.
fn at_sentence_start(prefix: &str) -> bool {
    let mut start = true;
    for c in prefix.chars() {
        if opens_sentence(c) {
            start = true;
        } else if !transparent(c) {
            start = false;
        }
    }
    start
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Title-cases the first word of every sentence, so `HE ran` and `he ran`
/// both read `He ran`. Only the leading run of letters is touched.
pub fn normalize_sentence_initial(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut start = true;
    let mut in_first_word = false;
    for c in text.chars() {
        if start && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            start = false;
            in_first_word = true;
            continue;
        }
        if in_first_word && c.is_alphabetic() {
            out.extend(c.to_lowercase());
            continue;
        }
        in_first_word = false;
        if opens_sentence(c) {
            start = true;
        } else if !transparent(c) {
            start = false;
        }
        out.push(c);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementFlag {
    pub side: Side,
    pub index: u32,
    pub form: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedPair {
    pub pair_id: String,
    pub source_text: String,
    pub target_text: String,
    /// Expansions followed by a clitic (`'s`, `'d`); verb agreement is left
    /// for a human to check.
    pub agreement_flags: Vec<AgreementFlag>,
}

/// Expands the placeholders of one side.
pub fn expand_text(
    text: &str,
    side: Side,
    assignment: &BTreeMap<u32, ParadigmPair>,
    flags: &mut Vec<AgreementFlag>,
) -> Result<String, RewriteError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (range, token) in find_placeholders(text)? {
        let pair = assignment.get(&token.index).ok_or(RewriteError::Unassigned(token.index))?;
        if let Some(list) = &token.list_id {
            if *list != pair.id {
                return Err(RewriteError::ListMismatch {
                    index: token.index,
                    expected: list.clone(),
                    found: pair.id.clone(),
                });
            }
        }
        let paradigm = match side {
            Side::Source => &pair.source,
            Side::Target => &pair.target,
        };
        let form = paradigm.form(token.role).ok_or_else(|| RewriteError::RoleMissing {
            index: token.index,
            paradigm: pair.id.clone(),
            role: token.role.map_or("base", Role::as_str).to_string(),
        })?;
        out.push_str(&text[last..range.start]);
        let english = matches!(paradigm.forms, ParadigmForms::English { .. });
        if english && at_sentence_start(&out) {
            out.push_str(&capitalize(form));
        } else {
            out.push_str(form);
        }
        let mut after = text[range.end..].chars();
        if matches!((after.next(), after.next()), (Some(a), Some(b)) if is_apostrophe(a) && b.is_alphabetic()) {
            flags.push(AgreementFlag {
                side,
                index: token.index,
                form: form.to_string(),
            });
        }
        last = range.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// Expands a templated pair with one paradigm pair per placeholder index.
pub fn expand(templated: &TemplatedPair, assignment: &BTreeMap<u32, ParadigmPair>) -> Result<ExpandedPair, RewriteError> {
    let mut flags = Vec::new();
    let source_text = expand_text(&templated.source_text, Side::Source, assignment, &mut flags)?;
    let target_text = expand_text(&templated.target_text, Side::Target, assignment, &mut flags)?;
    Ok(ExpandedPair {
        pair_id: templated.pair_id.clone(),
        source_text,
        target_text,
        agreement_flags: flags,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundtripDiff {
    pub side: Side,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub pair_id: String,
    pub passed: bool,
    /// Number of suggestions templated and restored.
    pub checked: usize,
    /// Suggestions whose surface belongs to no paradigm; left untouched.
    pub out_of_paradigm: Vec<PlaceholderSuggestion>,
    pub diffs: Vec<RoundtripDiff>,
    pub error: Option<String>,
}

/// Templates every paradigm pronoun in the pair, expands each index back with
/// its original paradigm, and compares with the original text (sentence
/// initial letters normalized).
pub fn roundtrip_check(pair: &SentencePair, classifier: &Classifier, paradigms: &ParadigmSet) -> RoundtripReport {
    let suggestions = suggest(pair, classifier, paradigms, SuggestionScope::AllPronouns);
    let (in_paradigm, out_of_paradigm): (Vec<_>, Vec<_>) =
        suggestions.into_iter().partition(|s| s.paradigm_id.is_some());

    let decisions: Vec<ReviewDecision> = in_paradigm
        .iter()
        .map(|s| ReviewDecision {
            suggestion_id: s.suggestion_id.clone(),
            action: DecisionAction::Accept,
            replacement: None,
            reviewer: "roundtrip".into(),
            timestamp: String::new(),
        })
        .collect();
    let assignment: BTreeMap<u32, ParadigmPair> = in_paradigm
        .iter()
        .filter_map(|s| {
            let id = s.paradigm_id.as_deref()?;
            Some((s.proposed.index, paradigms.get(id)?.clone()))
        })
        .collect();

    let mut report = RoundtripReport {
        pair_id: pair.pair_id.clone(),
        passed: false,
        checked: in_paradigm.len(),
        out_of_paradigm,
        diffs: Vec::new(),
        error: None,
    };
    let expanded = apply(pair, &in_paradigm, &decisions).and_then(|t| expand(&t, &assignment));
    match expanded {
        Ok(expanded) => {
            let sides = [
                (Side::Source, &pair.source.text, expanded.source_text),
                (Side::Target, &pair.target.text, expanded.target_text),
            ];
            for (side, original, actual) in sides {
                let expected = normalize_sentence_initial(original);
                let actual = normalize_sentence_initial(&actual);
                if expected != actual {
                    report.diffs.push(RoundtripDiff { side, expected, actual });
                }
            }
            report.passed = report.diffs.is_empty();
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}
