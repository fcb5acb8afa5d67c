//! Confusion matrix over category sets and the statistics derived from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{CategorySet, PairClassification, CATEGORY_SET_LABELS};
use crate::lexicon::GenderCategory;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("degenerate table")]
    DegenerateTable,
    #[error("Yates correction requires a 2x2 table, got {rows}x{cols}")]
    YatesNotTwoByTwo { rows: usize, cols: usize },
    #[error("contingency table needs at least 2 rows and 2 columns of equal length")]
    BadShape,
    #[error("matrix line {line}: {message}")]
    MatrixFormat { line: usize, message: String },
}

/// 8x8 pair counts: rows are English category sets, columns Japanese, both
/// in canonical index order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 8]; 8],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 8]; 8]) -> Self {
        Self { counts }
    }

    pub fn add(&mut self, en: CategorySet, ja: CategorySet) {
        self.counts[en.index()][ja.index()] += 1;
    }

    pub fn cell(&self, en: CategorySet, ja: CategorySet) -> u64 {
        self.counts[en.index()][ja.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..8).map(|i| self.counts[i][i]).sum()
    }

    pub fn merge(mut self, other: &ConfusionMatrix) -> Self {
        for (row, other_row) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (cell, o) in row.iter_mut().zip(other_row.iter()) {
                *cell += o;
            }
        }
        self
    }

    fn cells(&self) -> impl Iterator<Item = (CategorySet, CategorySet, u64)> + '_ {
        CategorySet::all().flat_map(move |en| CategorySet::all().map(move |ja| (en, ja, self.cell(en, ja))))
    }

    /// TSV with a header row of column labels and one labelled row per English
    /// category set.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("en\\ja");
        for label in CATEGORY_SET_LABELS {
            out.push('\t');
            out.push_str(label);
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(CATEGORY_SET_LABELS[i]);
            for count in row {
                out.push('\t');
                out.push_str(&count.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`ConfusionMatrix::to_tsv`]. Labels must
    /// appear in canonical order; the top-left header cell is free text.
    pub fn from_tsv(text: &str) -> Result<Self, StatsError> {
        let err = |line: usize, message: &str| StatsError::MatrixFormat {
            line,
            message: message.to_string(),
        };
        let mut lines = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));

        let (header_no, header) = lines.next().ok_or_else(|| err(1, "empty matrix file"))?;
        let labels: Vec<&str> = header.split('\t').skip(1).map(str::trim).collect();
        if labels != CATEGORY_SET_LABELS {
            return Err(err(header_no, "header must list None,A,F,FA,M,MA,FM,FMA"));
        }

        let mut counts = [[0u64; 8]; 8];
        let mut rows = 0;
        for (line_no, line) in lines {
            if rows == 8 {
                return Err(err(line_no, "more than 8 data rows"));
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 9 {
                return Err(err(line_no, "expected a label and 8 counts"));
            }
            if fields[0] != CATEGORY_SET_LABELS[rows] {
                return Err(err(line_no, &format!("expected row label {}", CATEGORY_SET_LABELS[rows])));
            }
            for (cell, field) in counts[rows].iter_mut().zip(&fields[1..]) {
                *cell = field
                    .replace(',', "")
                    .parse()
                    .map_err(|_| err(line_no, &format!("not a count: `{field}`")))?;
            }
            rows += 1;
        }
        if rows != 8 {
            return Err(err(header_no, "expected 8 data rows"));
        }
        Ok(Self { counts })
    }
}

pub fn confusion_matrix_sequential(classifications: &[PairClassification]) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::default();
    for c in classifications {
        matrix.add(c.en_set, c.ja_set);
    }
    matrix
}

#[cfg(feature = "parallel")]
pub fn confusion_matrix_parallel(classifications: &[PairClassification]) -> ConfusionMatrix {
    use rayon::prelude::*;
    classifications
        .par_chunks(4096)
        .map(confusion_matrix_sequential)
        .reduce(ConfusionMatrix::default, |a, b| a.merge(&b))
}

/// Counts each pair once at `[en_set][ja_set]`.
pub fn confusion_matrix(classifications: &[PairClassification]) -> ConfusionMatrix {
    #[cfg(feature = "parallel")]
    {
        confusion_matrix_parallel(classifications)
    }
    #[cfg(not(feature = "parallel"))]
    {
        confusion_matrix_sequential(classifications)
    }
}

/// Number of sentences on one side containing each category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub masculine: u64,
    pub feminine: u64,
    pub ambiguous: u64,
    pub non_masculine: u64,
}

impl CategoryCounts {
    pub fn get(&self, category: GenderCategory) -> u64 {
        match category {
            GenderCategory::Masculine => self.masculine,
            GenderCategory::Feminine => self.feminine,
            GenderCategory::Ambiguous => self.ambiguous,
        }
    }

    fn from_fn(f: impl Fn(GenderCategory) -> u64) -> Self {
        let (masculine, feminine, ambiguous) = (
            f(GenderCategory::Masculine),
            f(GenderCategory::Feminine),
            f(GenderCategory::Ambiguous),
        );
        Self {
            masculine,
            feminine,
            ambiguous,
            non_masculine: feminine + ambiguous,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresenceCounts {
    pub english: CategoryCounts,
    pub japanese: CategoryCounts,
}

pub fn presence_counts(matrix: &ConfusionMatrix) -> PresenceCounts {
    PresenceCounts {
        english: CategoryCounts::from_fn(|g| matrix.cells().filter(|(en, _, _)| en.contains(g)).map(|(_, _, n)| n).sum()),
        japanese: CategoryCounts::from_fn(|g| matrix.cells().filter(|(_, ja, _)| ja.contains(g)).map(|(_, _, n)| n).sum()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    #[serde(rename = "match")]
    pub matched: u64,
    pub mismatch: u64,
}

impl MatchCounts {
    fn plus(self, other: MatchCounts) -> MatchCounts {
        MatchCounts {
            matched: self.matched + other.matched,
            mismatch: self.mismatch + other.mismatch,
        }
    }
}

/// Per category: pairs with the category on both sides (match) or exactly
/// one side (mismatch). The `non_*` rows sum the other two categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchTable {
    pub masculine: MatchCounts,
    pub non_masculine: MatchCounts,
    pub feminine: MatchCounts,
    pub non_feminine: MatchCounts,
    pub ambiguous: MatchCounts,
    pub non_ambiguous: MatchCounts,
}

impl MatchTable {
    pub fn get(&self, category: GenderCategory) -> MatchCounts {
        match category {
            GenderCategory::Masculine => self.masculine,
            GenderCategory::Feminine => self.feminine,
            GenderCategory::Ambiguous => self.ambiguous,
        }
    }

    pub fn complement(&self, category: GenderCategory) -> MatchCounts {
        match category {
            GenderCategory::Masculine => self.non_masculine,
            GenderCategory::Feminine => self.non_feminine,
            GenderCategory::Ambiguous => self.non_ambiguous,
        }
    }
}

pub fn match_table(matrix: &ConfusionMatrix) -> MatchTable {
    let counts = |g: GenderCategory| {
        let mut out = MatchCounts::default();
        for (en, ja, n) in matrix.cells() {
            match (en.contains(g), ja.contains(g)) {
                (true, true) => out.matched += n,
                (true, false) | (false, true) => out.mismatch += n,
                (false, false) => {}
            }
        }
        out
    };
    let (m, f, a) = (
        counts(GenderCategory::Masculine),
        counts(GenderCategory::Feminine),
        counts(GenderCategory::Ambiguous),
    );
    MatchTable {
        masculine: m,
        non_masculine: f.plus(a),
        feminine: f,
        non_feminine: m.plus(a),
        ambiguous: a,
        non_ambiguous: m.plus(f),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalRate {
    pub matched: u64,
    pub total: u64,
    pub rate: Option<f64>,
}

/// Share of pairs whose two category sets are identical.
pub fn diagonal_rate(matrix: &ConfusionMatrix) -> DiagonalRate {
    let matched = matrix.diagonal();
    let total = matrix.total();
    DiagonalRate {
        matched,
        total,
        rate: (total > 0).then(|| matched as f64 / total as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: &[&str], col_labels: &[&str], cells: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows = cells.len();
        if rows < 2 || row_labels.len() != rows || cells.iter().any(|r| r.len() != col_labels.len()) || col_labels.len() < 2 {
            return Err(StatsError::BadShape);
        }
        Ok(Self {
            row_labels: row_labels.iter().map(|s| s.to_string()).collect(),
            col_labels: col_labels.iter().map(|s| s.to_string()).collect(),
            cells,
        })
    }

    /// Unlabelled table with generated `r{i}` / `c{j}` labels.
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows: Vec<String> = (0..cells.len()).map(|i| format!("r{i}")).collect();
        let cols: Vec<String> = (0..cells.first().map_or(0, Vec::len)).map(|j| format!("c{j}")).collect();
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        Self::new(&rows, &cols, cells)
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols()).map(|j| self.cells.iter().map(|r| r[j]).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub df: u64,
    pub n: u64,
    pub cramers_v: f64,
    pub yates_applied: bool,
}

/// Pearson's chi-square test of independence, optionally with Yates'
/// continuity correction (2x2 only).
///
/// The corrected statistic is `N (max(0, |ad - bc| - N/2))^2 / ((a+b)(c+d)(a+c)(b+d))`.
/// The correction is clamped at zero so it never exceeds `|ad - bc|`.
pub fn chi_square(table: &ContingencyTable, yates: bool) -> Result<ChiSquareResult, StatsError> {
    let (r, c) = (table.rows(), table.cols());
    if yates && (r, c) != (2, 2) {
        return Err(StatsError::YatesNotTwoByTwo { rows: r, cols: c });
    }
    let row_totals = table.row_totals();
    let col_totals = table.col_totals();
    if row_totals.contains(&0) || col_totals.contains(&0) {
        return Err(StatsError::DegenerateTable);
    }
    let n = table.total();
    let nf = n as f64;

    let chi2 = if yates {
        let [a, b] = [table.cells[0][0] as f64, table.cells[0][1] as f64];
        let [cc, d] = [table.cells[1][0] as f64, table.cells[1][1] as f64];
        let diff = ((a * d - b * cc).abs() - nf / 2.0).max(0.0);
        let denominator = (a + b) * (cc + d) * (a + cc) * (b + d);
        nf * diff * diff / denominator
    } else {
        let mut sum = 0.0;
        for (i, row) in table.cells.iter().enumerate() {
            for (j, &observed) in row.iter().enumerate() {
                let expected = row_totals[i] as f64 * col_totals[j] as f64 / nf;
                let delta = observed as f64 - expected;
                sum += delta * delta / expected;
            }
        }
        sum
    };

    let k = r.min(c) as f64 - 1.0;
    Ok(ChiSquareResult {
        chi2,
        df: ((r - 1) * (c - 1)) as u64,
        n,
        cramers_v: (chi2 / (nf * k)).sqrt(),
        yates_applied: yates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TestOutcome {
    Ok {
        #[serde(flatten)]
        result: ChiSquareResult,
        /// The plain Pearson statistic, reported alongside corrected tests.
        chi2_uncorrected: f64,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTest {
    pub id: String,
    pub description: String,
    pub table: ContingencyTable,
    pub outcome: TestOutcome,
}

impl BiasTest {
    pub fn result(&self) -> Option<&ChiSquareResult> {
        match &self.outcome {
            TestOutcome::Ok { result, .. } => Some(result),
            TestOutcome::Error { .. } => None,
        }
    }

    pub fn chi2_uncorrected(&self) -> Option<f64> {
        match &self.outcome {
            TestOutcome::Ok { chi2_uncorrected, .. } => Some(*chi2_uncorrected),
            TestOutcome::Error { .. } => None,
        }
    }
}

fn run_test(id: &str, description: &str, table: ContingencyTable, yates: bool) -> BiasTest {
    let outcome = match (chi_square(&table, yates), chi_square(&table, false)) {
        (Ok(result), Ok(plain)) => TestOutcome::Ok {
            result,
            chi2_uncorrected: plain.chi2,
        },
        (Err(e), _) | (_, Err(e)) => TestOutcome::Error { message: e.to_string() },
    };
    BiasTest {
        id: id.to_string(),
        description: description.to_string(),
        table,
        outcome,
    }
}

fn match_row(counts: MatchCounts) -> Vec<u64> {
    vec![counts.matched, counts.mismatch]
}

/// The four language/category tests over a confusion matrix:
///
/// * T1: language x {M, F, A} presence, plain statistic.
/// * T2: language x masculine/non-masculine presence, Yates.
/// * T3: masculine/non-masculine x match/mismatch, Yates.
/// * T4: feminine/non-feminine x match/mismatch, Yates.
pub fn bias_tests(matrix: &ConfusionMatrix) -> Vec<BiasTest> {
    let presence = presence_counts(matrix);
    let matches = match_table(matrix);
    let (en, ja) = (presence.english, presence.japanese);
    let langs = ["eng", "jpn"];
    let table = |rows: &[&str], cols: &[&str], cells| ContingencyTable::new(rows, cols, cells).expect("fixed shape");

    vec![
        run_test(
            "T1",
            "language x pronoun category presence",
            table(
                &langs,
                &["M", "F", "A"],
                vec![
                    vec![en.masculine, en.feminine, en.ambiguous],
                    vec![ja.masculine, ja.feminine, ja.ambiguous],
                ],
            ),
            false,
        ),
        run_test(
            "T2",
            "language x masculine/non-masculine presence",
            table(
                &langs,
                &["M", "non-M"],
                vec![vec![en.masculine, en.non_masculine], vec![ja.masculine, ja.non_masculine]],
            ),
            true,
        ),
        run_test(
            "T3",
            "masculine/non-masculine x translation match/mismatch",
            table(
                &["M", "non-M"],
                &["match", "mismatch"],
                vec![match_row(matches.masculine), match_row(matches.non_masculine)],
            ),
            true,
        ),
        run_test(
            "T4",
            "feminine/non-feminine x translation match/mismatch",
            table(
                &["F", "non-F"],
                &["match", "mismatch"],
                vec![match_row(matches.feminine), match_row(matches.non_feminine)],
            ),
            true,
        ),
    ]
}
