//! Holdout splitting and classification metrics.
//!
//! The shuffle is a Fisher-Yates permutation (`rand::seq::SliceRandom`)
//! driven by ChaCha8 seeded from the 64-bit seed via `SeedableRng::seed_from_u64`.
//! Results are reproducible for a given seed and `Cargo.lock`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::{CartError, Predictor};
use crate::ingest::{Dataset, PassLabel};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("invalid split config: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Predict(#[from] CartError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Share of records held out, strictly between 0 and 1.
    pub test_fraction: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.25,
            seed: 0,
            shuffle: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.test_fraction > 0.0 && self.test_fraction < 1.0 {
            Ok(())
        } else {
            Err(EvalError::Config(format!(
                "test fraction must be in (0, 1), got {}",
                self.test_fraction
            )))
        }
    }

    /// `floor((1 - test_fraction) * n)`.
    ///
    /// Products within 1e-9 of an integer snap to it, so `0.1` of 10 holds
    /// out exactly one record despite binary rounding.
    pub fn train_size(&self, n: usize) -> usize {
        let exact = (1.0 - self.test_fraction) * n as f64;
        let nearest = exact.round();
        if (exact - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            exact.floor() as usize
        }
    }
}

/// Train and test index lists for `n` records.
pub fn split_indices(
    n: usize,
    config: &SplitConfig,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    config.validate()?;
    if n < 2 {
        return Err(EvalError::Domain(format!(
            "need at least 2 records to split, got {n}"
        )));
    }
    let n_train = config.train_size(n);
    if n_train == 0 || n_train == n {
        return Err(EvalError::Domain(format!(
            "test fraction {} leaves an empty partition of {n} records",
            config.test_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if config.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        order.shuffle(&mut rng);
    }
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Seeded holdout split. The two halves partition the input exactly.
pub fn train_test_split<T: Scalar>(
    data: &Dataset<T>,
    config: &SplitConfig,
) -> Result<(Dataset<T>, Dataset<T>), EvalError> {
    let (train, test) = split_indices(data.len(), config)?;
    let pick =
        |idx: &[usize]| data.with_records(idx.iter().map(|&i| data.records[i].clone()).collect());
    Ok((pick(&train), pick(&test)))
}

/// 2x2 counts with pass as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// Same matrix with fail treated as the positive class.
    pub fn swap_positive_class(&self) -> Self {
        Self::new(self.tp, self.fn_, self.fp, self.tn)
    }
}

/// `[[tn fp]\n [fn tp]]`, right-aligned like a printed integer array.
impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = [self.tn, self.fp, self.fn_, self.tp]
            .iter()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        write!(
            f,
            "[[{:>w$} {:>w$}]\n [{:>w$} {:>w$}]]",
            self.tn, self.fp, self.fn_, self.tp
        )
    }
}

pub fn confusion_matrix(
    y_true: &[PassLabel],
    y_pred: &[PassLabel],
) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Domain(format!(
            "label length mismatch: {} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(EvalError::Domain("no labels to compare".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (PassLabel::Fail, PassLabel::Fail) => cm.tn += 1,
            (PassLabel::Fail, PassLabel::Pass) => cm.fp += 1,
            (PassLabel::Pass, PassLabel::Fail) => cm.fn_ += 1,
            (PassLabel::Pass, PassLabel::Pass) => cm.tp += 1,
        }
    }
    Ok(cm)
}

/// A metric whose denominator was zero; its value is reported as 0.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degenerate {
    PrecisionUndefined,
    RecallUndefined,
    F1Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: Vec<Degenerate>,
    pub train_size: usize,
    pub test_size: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision, recall and F1 from a confusion matrix.
///
/// `train_size` is left at 0; [`evaluate`] fills it in.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvaluationReport, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::Domain("empty confusion matrix".into()));
    }
    let mut degenerate = Vec::new();
    let mut or_flag = |v: Option<f64>, flag| {
        v.unwrap_or_else(|| {
            degenerate.push(flag);
            0.0
        })
    };
    let precision = or_flag(ratio(cm.tp, cm.tp + cm.fp), Degenerate::PrecisionUndefined);
    let recall = or_flag(ratio(cm.tp, cm.tp + cm.fn_), Degenerate::RecallUndefined);
    // F1 inherits degeneracy from either input; the value is 0 in that case
    // anyway since tp = 0.
    let f1_ratio = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_)
        .filter(|_| cm.tp + cm.fp > 0 && cm.tp + cm.fn_ > 0);
    let f1 = or_flag(f1_ratio, Degenerate::F1Undefined);
    Ok(EvaluationReport {
        matrix: *cm,
        accuracy: (cm.tp + cm.tn) as f64 / cm.total() as f64,
        precision,
        recall,
        f1,
        degenerate,
        train_size: 0,
        test_size: cm.total(),
    })
}

/// Predicts every test record and scores the result.
pub fn evaluate<T: Scalar, P: Predictor<T>>(
    model: &P,
    train_size: usize,
    test: &Dataset<T>,
) -> Result<EvaluationReport, EvalError> {
    let y_pred = test
        .records
        .iter()
        .map(|r| model.predict(r.features.as_slice()).map(|p| p.label))
        .collect::<Result<Vec<_>, _>>()?;
    let cm = confusion_matrix(&test.labels(), &y_pred)?;
    let mut report = metrics(&cm)?;
    report.train_size = train_size;
    Ok(report)
}

impl EvaluationReport {
    /// The four metric lines, six decimals each.
    pub fn metrics_text(&self) -> String {
        format!(
            "Accuracy: {:.6}\nPrecision: {:.6}\nRecall: {:.6}\nF1 score: {:.6}\n",
            self.accuracy, self.precision, self.recall, self.f1
        )
    }

    pub fn matrix_text(&self) -> String {
        format!("Confusion Matrix : \n{}\n", self.matrix)
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.metrics_text())?;
        f.write_str(&self.matrix_text())?;
        for d in &self.degenerate {
            writeln!(
                f,
                "warning: {}",
                serde_json::to_value(d).unwrap().as_str().unwrap()
            )?;
        }
        Ok(())
    }
}
