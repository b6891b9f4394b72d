//! CART decision trees for the binary pass/fail target.
//!
//! Trees are grown greedily by recursive binary splitting. At every node each
//! feature's candidate thresholds (midpoints between consecutive distinct
//! values) are scored by the size-weighted impurity of the two children, and
//! the cheapest split wins, provided it actually lowers impurity. Records with
//! `value <= threshold` go left.

mod dot;
mod impurity;
mod model_file;
mod split;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PassLabel;

pub use dot::to_dot;
pub use impurity::{entropy, gini};
pub use model_file::{deserialize, serialize, FORMAT_VERSION};
pub use split::{best_split, candidate_thresholds, SplitCandidate};
pub use tree::{PathStep, Prediction, Predictor, Split, Tree, TreeNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CartError {
    #[error("empty training set")]
    EmptyDataset,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("model format error: {0}")]
    Format(String),
}

/// Per-class record counts at a node, serialized as `[fail, pass]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct ClassCounts {
    pub fail: usize,
    pub pass: usize,
}

impl ClassCounts {
    pub const fn new(fail: usize, pass: usize) -> Self {
        Self { fail, pass }
    }

    pub fn from_labels(labels: impl IntoIterator<Item = PassLabel>) -> Self {
        labels.into_iter().fold(Self::default(), |mut c, l| {
            c.add(l);
            c
        })
    }

    pub fn add(&mut self, label: PassLabel) {
        match label {
            PassLabel::Fail => self.fail += 1,
            PassLabel::Pass => self.pass += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.fail + self.pass
    }

    pub fn is_pure(&self) -> bool {
        self.fail == 0 || self.pass == 0
    }

    /// Fraction of passing records; `None` on an empty node.
    pub fn pass_fraction(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.pass as f64 / self.total() as f64)
    }

    /// Majority label. An even split predicts fail so that borderline
    /// students get flagged.
    pub fn majority(&self) -> PassLabel {
        PassLabel::from(self.pass > self.fail)
    }

    fn checked_sub(self, other: Self) -> Option<Self> {
        Some(Self::new(
            self.fail.checked_sub(other.fail)?,
            self.pass.checked_sub(other.pass)?,
        ))
    }
}

impl std::ops::Add for ClassCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.fail + rhs.fail, self.pass + rhs.pass)
    }
}

impl From<[usize; 2]> for ClassCounts {
    fn from([fail, pass]: [usize; 2]) -> Self {
        Self::new(fail, pass)
    }
}

impl From<ClassCounts> for [usize; 2] {
    fn from(c: ClassCounts) -> Self {
        [c.fail, c.pass]
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.fail, self.pass)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gini => "gini",
            Self::Entropy => "entropy",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = CartError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gini" => Ok(Self::Gini),
            "entropy" => Ok(Self::Entropy),
            other => Err(CartError::InvalidParams(format!(
                "unknown criterion `{other}` (expected gini or entropy)"
            ))),
        }
    }
}

/// Growth controls. The defaults grow the tree until leaves are pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub criterion: Criterion,
    /// `None` means unbounded.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), CartError> {
        if self.max_depth == Some(0) {
            return Err(CartError::InvalidParams(
                "max_depth must be a positive integer".into(),
            ));
        }
        if self.min_samples_split < 2 {
            return Err(CartError::InvalidParams(format!(
                "min_samples_split must be at least 2, got {}",
                self.min_samples_split
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(CartError::InvalidParams(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
