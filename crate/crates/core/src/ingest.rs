//! CSV ingestion and cleaning of academic class-record exports.
//!
//! The canonical export has nine columns:
//!
//! ```text
//! student_id,class_record_id,att_prelim,cp_prelim,exam_prelim,att_midterm,cp_midterm,exam_midterm,remark
//! ```
//!
//! Cleaning drops the two identifier columns, drops rows with a missing or
//! unparseable score, drops exact duplicate rows and maps the remark column
//! to a binary [`PassLabel`]. Nothing is imputed.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::ClassCounts;
use crate::Scalar;

pub const NUM_FEATURES: usize = 6;

/// Criteria columns in feature-index order (`X_0` .. `X_5`).
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "att_prelim",
    "cp_prelim",
    "exam_prelim",
    "att_midterm",
    "cp_midterm",
    "exam_midterm",
];

const LABEL_MAPPING: &str = "PASSED|PASS|1 -> 1, FAILED|FAIL|0 -> 0 (case-insensitive)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("empty input: no data rows")]
    EmptyInput,
    #[error("schema error: missing required column `{column}`")]
    MissingColumn { column: String },
    #[error("schema error: unexpected column `{column}`")]
    UnexpectedColumn { column: String },
    #[error("schema error: duplicate column `{column}`")]
    DuplicateColumn { column: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("parse error at data row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("parse error{}: {message}", fmt_row(*.row))]
    Csv { row: Option<usize>, message: String },
    #[error("label mapping error{}: unknown remark `{token}`", fmt_row(*.row))]
    LabelMapping { token: String, row: Option<usize> },
    #[error("range error at data row {row}: {column} = {value} is outside [0, 100]")]
    OutOfRange {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty dataset: no rows survived cleaning")]
    EmptyDataset,
}

fn fmt_row(row: Option<usize>) -> String {
    row.map(|r| format!(" at data row {r}")).unwrap_or_default()
}

impl IngestError {
    /// Short machine-readable token for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyInput => "empty_input",
            Self::MissingColumn { .. }
            | Self::UnexpectedColumn { .. }
            | Self::DuplicateColumn { .. }
            | Self::InvalidSchema(_) => "schema_error",
            Self::RaggedRow { .. } | Self::Csv { .. } => "parse_error",
            Self::LabelMapping { .. } => "label_mapping",
            Self::OutOfRange { .. } => "out_of_range",
            Self::EmptyDataset => "empty_dataset",
        }
    }

    /// 1-based data row (header excluded) the error refers to, if any.
    pub fn row(&self) -> Option<usize> {
        match self {
            Self::RaggedRow { row, .. } | Self::OutOfRange { row, .. } => Some(*row),
            Self::Csv { row, .. } | Self::LabelMapping { row, .. } => *row,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Identifier,
    Feature,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub role: ColumnRole,
    /// Position of the column in the canonical header.
    pub position: usize,
}

/// The set of columns an export must carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl Schema {
    /// Builds a schema from `(name, role)` pairs in canonical order.
    ///
    /// Exactly one label column and exactly the six criteria feature columns,
    /// in `FEATURE_NAMES` order, are required.
    pub fn new<S: Into<String>>(
        columns: impl IntoIterator<Item = (S, ColumnRole)>,
    ) -> Result<Self, IngestError> {
        let columns: Vec<ColumnSchema> = columns
            .into_iter()
            .enumerate()
            .map(|(position, (name, role))| ColumnSchema {
                name: name.into(),
                role,
                position,
            })
            .collect();

        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(IngestError::DuplicateColumn {
                    column: c.name.clone(),
                });
            }
        }
        let features: Vec<&str> = columns
            .iter()
            .filter(|c| c.role == ColumnRole::Feature)
            .map(|c| c.name.as_str())
            .collect();
        if features != FEATURE_NAMES {
            return Err(IngestError::InvalidSchema(format!(
                "feature columns must be exactly {} in that order, got {:?}",
                FEATURE_NAMES.join(","),
                features
            )));
        }
        let labels = columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .count();
        if labels != 1 {
            return Err(IngestError::InvalidSchema(format!(
                "exactly one label column required, got {labels}"
            )));
        }
        Ok(Self { columns })
    }

    /// The nine-column academic export layout.
    pub fn standard() -> Self {
        let mut cols = vec![
            ("student_id", ColumnRole::Identifier),
            ("class_record_id", ColumnRole::Identifier),
        ];
        cols.extend(FEATURE_NAMES.iter().map(|n| (*n, ColumnRole::Feature)));
        cols.push(("remark", ColumnRole::Label));
        Self::new(cols).expect("standard schema is valid")
    }

    /// Layout written by [`Dataset::to_csv`]: a row number, the six criteria
    /// and the remark.
    pub fn exported() -> Self {
        let mut cols = vec![("row_id", ColumnRole::Identifier)];
        cols.extend(FEATURE_NAMES.iter().map(|n| (*n, ColumnRole::Feature)));
        cols.push(("remark", ColumnRole::Label));
        Self::new(cols).expect("exported schema is valid")
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn header(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    fn label(&self) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Label)
            .expect("validated schema has a label")
    }

    /// Maps every schema column to its index in `header`.
    fn locate(&self, header: &[String]) -> Result<HashMap<&str, usize>, IngestError> {
        let mut index = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(IngestError::DuplicateColumn {
                    column: name.clone(),
                });
            }
        }
        for c in &self.columns {
            if !index.contains_key(c.name.as_str()) {
                return Err(IngestError::MissingColumn {
                    column: c.name.clone(),
                });
            }
        }
        if let Some(extra) = header
            .iter()
            .find(|h| !self.columns.iter().any(|c| &c.name == *h))
        {
            return Err(IngestError::UnexpectedColumn {
                column: extra.clone(),
            });
        }
        Ok(self
            .columns
            .iter()
            .map(|c| (c.name.as_str(), index[c.name.as_str()]))
            .collect())
    }
}

impl Default for Schema {
    fn default() -> Self {
        Self::standard()
    }
}

/// CSV content before cleaning. Cells are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub source: String,
}

/// Binary course outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum PassLabel {
    Fail = 0,
    Pass = 1,
}

impl PassLabel {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_pass(self) -> bool {
        self == Self::Pass
    }

    /// Remark token written to CSV exports.
    pub fn remark(self) -> &'static str {
        match self {
            Self::Fail => "FAILED",
            Self::Pass => "PASSED",
        }
    }
}

impl From<PassLabel> for u8 {
    fn from(l: PassLabel) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for PassLabel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Self::Fail),
            1 => Ok(Self::Pass),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<bool> for PassLabel {
    fn from(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

impl fmt::Display for PassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Maps a remark token to a label. Anything outside the fixed vocabulary is
/// rejected rather than guessed.
pub fn binarize_label(token: &str) -> Result<PassLabel, IngestError> {
    let t = token.trim();
    if ["PASSED", "PASS", "1"]
        .iter()
        .any(|p| t.eq_ignore_ascii_case(p))
    {
        Ok(PassLabel::Pass)
    } else if ["FAILED", "FAIL", "0"]
        .iter()
        .any(|p| t.eq_ignore_ascii_case(p))
    {
        Ok(PassLabel::Fail)
    } else {
        Err(IngestError::LabelMapping {
            token: t.to_string(),
            row: None,
        })
    }
}

/// The six criteria scores of one student, indexed `X_0` .. `X_5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureVector<T>(pub [T; NUM_FEATURES]);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: [T; NUM_FEATURES]) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn by_name(&self, name: &str) -> Option<T> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.0[i])
    }
}

impl<T: Scalar> TryFrom<&[T]> for FeatureVector<T> {
    type Error = usize;

    /// Fails with the offending length when the slice is not six long.
    fn try_from(values: &[T]) -> Result<Self, usize> {
        <[T; NUM_FEATURES]>::try_from(values)
            .map(Self)
            .map_err(|_| values.len())
    }
}

impl<T> AsRef<[T]> for FeatureVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

impl<T> Index<usize> for FeatureVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StudentRecord<T> {
    pub features: FeatureVector<T>,
    pub label: PassLabel,
}

impl<T: Scalar> StudentRecord<T> {
    pub fn new(features: [T; NUM_FEATURES], label: PassLabel) -> Self {
        Self {
            features: FeatureVector(features),
            label,
        }
    }
}

/// Accounting of what cleaning removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub source: String,
    pub dropped_columns: Vec<String>,
    pub input_rows: usize,
    pub output_rows: usize,
    pub rows_dropped_missing: usize,
    pub rows_dropped_duplicate: usize,
    pub label_mapping: String,
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source: {}", self.source)?;
        writeln!(f, "input rows: {}", self.input_rows)?;
        writeln!(f, "output records: {}", self.output_rows)?;
        writeln!(f, "dropped columns: {}", self.dropped_columns.join(", "))?;
        writeln!(
            f,
            "rows dropped (missing values): {}",
            self.rows_dropped_missing
        )?;
        writeln!(
            f,
            "rows dropped (duplicates): {}",
            self.rows_dropped_duplicate
        )?;
        write!(f, "label mapping: {}", self.label_mapping)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanOptions {
    /// Reject scores outside `[0, 100]`.
    pub range_validation: bool,
}

/// Modeling-ready data: cleaned records plus where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub records: Vec<StudentRecord<T>>,
    pub feature_names: Vec<String>,
    pub source: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(records: Vec<StudentRecord<T>>, source: impl Into<String>) -> Self {
        Self {
            records,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn features(&self) -> Vec<FeatureVector<T>> {
        self.records.iter().map(|r| r.features).collect()
    }

    pub fn labels(&self) -> Vec<PassLabel> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts::from_labels(self.records.iter().map(|r| r.label))
    }

    /// Same source and feature names, different records.
    pub fn with_records(&self, records: Vec<StudentRecord<T>>) -> Self {
        Self {
            records,
            feature_names: self.feature_names.clone(),
            source: self.source.clone(),
        }
    }

    /// Writes the dataset in the [`Schema::exported`] layout. Values are
    /// printed with the shortest text that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(Schema::exported().header())
            .expect("in-memory write");
        for (i, r) in self.records.iter().enumerate() {
            let mut row = Vec::with_capacity(NUM_FEATURES + 2);
            row.push((i + 1).to_string());
            row.extend(r.features.0.iter().map(|v| v.to_string()));
            row.push(r.label.remark().to_string());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Reads CSV text and checks its header against `schema`.
///
/// Header order may differ from the schema, but every schema column must be
/// present and nothing else. Row numbers in errors count data rows from 1.
pub fn parse_csv(text: &str, schema: &Schema, source: &str) -> Result<RawTable, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header: Vec<String> = match records.next() {
        None => return Err(IngestError::EmptyInput),
        Some(rec) => rec
            .map_err(|e| IngestError::Csv {
                row: None,
                message: e.to_string(),
            })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect(),
    };
    schema.locate(&header)?;

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Csv {
            row: Some(row),
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(IngestError::RaggedRow {
                row,
                expected: header.len(),
                found: rec.len(),
            });
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(RawTable {
        header,
        rows,
        source: source.to_string(),
    })
}

/// Period decimal separator only; non-finite values count as unparseable.
fn parse_score<T: Scalar>(cell: &str) -> Option<T> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse::<T>().ok().filter(|v| v.is_finite())
}

/// Drops identifier columns, incomplete rows and exact duplicates, and
/// binarizes the label.
///
/// Missing-value checks run before duplicate detection, so a row that is both
/// incomplete and a repeat is counted once, as missing. Duplicates compare
/// every schema column, identifiers included.
pub fn clean<T: Scalar>(
    raw: &RawTable,
    schema: &Schema,
    options: CleanOptions,
) -> Result<(Dataset<T>, CleaningReport), IngestError> {
    let at = schema.locate(&raw.header)?;
    let feature_idx: Vec<usize> = FEATURE_NAMES.iter().map(|n| at[n]).collect();
    let label_idx = at[schema.label().name.as_str()];
    let key_idx: Vec<usize> = schema.columns.iter().map(|c| at[c.name.as_str()]).collect();
    let hundred = T::from_u8(100).unwrap();

    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    let mut records = Vec::with_capacity(raw.rows.len());
    let mut missing = 0;
    let mut duplicates = 0;

    for (i, cells) in raw.rows.iter().enumerate() {
        let row = i + 1;
        if cells.len() != raw.header.len() {
            return Err(IngestError::RaggedRow {
                row,
                expected: raw.header.len(),
                found: cells.len(),
            });
        }
        let scores: Option<Vec<T>> = feature_idx
            .iter()
            .map(|&j| parse_score(&cells[j]))
            .collect();
        let label_cell = cells[label_idx].trim();
        let Some(scores) = scores.filter(|_| !label_cell.is_empty()) else {
            missing += 1;
            continue;
        };
        let key: Vec<&str> = key_idx.iter().map(|&j| cells[j].trim()).collect();
        if !seen.insert(key) {
            duplicates += 1;
            continue;
        }
        let label = binarize_label(label_cell).map_err(|_| IngestError::LabelMapping {
            token: label_cell.to_string(),
            row: Some(row),
        })?;
        if options.range_validation {
            for (k, v) in scores.iter().enumerate() {
                if *v < T::zero() || *v > hundred {
                    return Err(IngestError::OutOfRange {
                        row,
                        column: FEATURE_NAMES[k].to_string(),
                        value: cells[feature_idx[k]].trim().to_string(),
                    });
                }
            }
        }
        let features = <[T; NUM_FEATURES]>::try_from(scores).expect("six features");
        records.push(StudentRecord::new(features, label));
    }

    if records.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let report = CleaningReport {
        source: raw.source.clone(),
        dropped_columns: schema
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Identifier)
            .map(|c| c.name.clone())
            .collect(),
        input_rows: raw.rows.len(),
        output_rows: records.len(),
        rows_dropped_missing: missing,
        rows_dropped_duplicate: duplicates,
        label_mapping: LABEL_MAPPING.to_string(),
    };
    Ok((Dataset::new(records, raw.source.clone()), report))
}

/// `parse_csv` followed by `clean`.
pub fn load_csv<T: Scalar>(
    text: &str,
    schema: &Schema,
    source: &str,
    options: CleanOptions,
) -> Result<(Dataset<T>, CleaningReport), IngestError> {
    let raw = parse_csv(text, schema, source)?;
    clean(&raw, schema, options)
}
