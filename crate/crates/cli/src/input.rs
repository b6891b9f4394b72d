use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};

use gradecast::cart;
use gradecast::ingest::{load_csv, CleanOptions, CleaningReport, IngestError, Schema};
use gradecast::{Dataset, Tree};

use crate::{VectorArgs, EXIT_FAILURE, EXIT_USAGE};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or arguments.
    Usage(String),
    /// Anything that went wrong reading, cleaning, fitting or writing.
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "{m}\n\nFor more information, try '--help'."),
            Self::Failure(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Failure(e)
    }
}

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))
}

/// Loads either the raw nine-column export or a file written by `clean`.
pub fn load_dataset(path: &Path, range_check: bool) -> anyhow::Result<(Dataset, CleaningReport)> {
    let text = read_text(path)?;
    let source = path.display().to_string();
    let options = CleanOptions {
        range_validation: range_check,
    };
    let loaded = match load_csv(&text, &Schema::standard(), &source, options) {
        Err(e @ (IngestError::MissingColumn { .. } | IngestError::UnexpectedColumn { .. })) => {
            load_csv(&text, &Schema::exported(), &source, options).map_err(|_| e)
        }
        other => other,
    };
    loaded.with_context(|| format!("cannot load `{}`", path.display()))
}

pub fn load_model(path: &Path) -> anyhow::Result<Tree> {
    let text = read_text(path)?;
    cart::deserialize(&text).with_context(|| format!("invalid model file `{}`", path.display()))
}

/// The feature vector from `--feature` values or an `--input-row` file.
pub fn read_vector(args: &VectorArgs, names: &[String]) -> Result<Vec<f64>, CliError> {
    let values = match &args.input_row {
        Some(path) => read_row_file(path, names)?,
        None => args.features.clone(),
    };
    if values.len() != names.len() {
        return Err(usage(format!(
            "expected {} feature values ({}), got {}",
            names.len(),
            names.join(", "),
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(usage(format!(
            "feature {} is not a finite number",
            names[i]
        )));
    }
    Ok(values)
}

/// One data row, with or without a header. A header is recognised by
/// containing every feature name; other columns are then ignored.
fn read_row_file(path: &Path, names: &[String]) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.trim_start_matches('\u{feff}').as_bytes());
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for r in reader.records() {
        let r = r.with_context(|| format!("cannot parse `{}`", path.display()))?;
        if r.iter().any(|c| !c.is_empty()) {
            rows.push(r);
        }
    }
    let columns: Option<Vec<usize>> = rows.first().and_then(|h| {
        names
            .iter()
            .map(|n| h.iter().position(|c| c == n))
            .collect()
    });
    let data = if columns.is_some() {
        &rows[1..]
    } else {
        &rows[..]
    };
    if data.len() != 1 {
        return Err(usage(format!(
            "`{}` must hold exactly one data row, found {}",
            path.display(),
            data.len()
        )));
    }
    let row = &data[0];
    let cells: Vec<&str> = match &columns {
        Some(idx) => idx.iter().map(|&i| row.get(i).unwrap_or("")).collect(),
        None => row.iter().collect(),
    };
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse::<f64>().map_err(|_| {
                CliError::Failure(anyhow!(
                    "`{}`: value `{c}` in column {} is not a number",
                    path.display(),
                    i + 1
                ))
            })
        })
        .collect()
}
