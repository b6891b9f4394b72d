//! Student pass/fail prediction from prelim and midterm criteria scores.
//!
//! The pipeline runs in the usual data-mining order:
//!
//! 1. [`ingest`] parses and cleans an academic CSV export into a [`Dataset`].
//! 2. [`eval::train_test_split`] makes a seeded holdout split.
//! 3. [`cart::Tree::fit`] grows a CART decision tree (Gini or entropy).
//! 4. [`eval`] scores the held-out fold with a confusion matrix and
//!    accuracy / precision / recall / F1.
//! 5. [`whatif`] answers "which criterion has to improve, and by how much,
//!    for this student to be predicted to pass".
//!
//! Everything numeric that touches feature values is generic over a
//! [`Scalar`] (`f32` or `f64`). The aliases at the crate root fix the scalar
//! to `f64`, which is what the CLI and the HTTP service use.

pub mod cart;
pub mod eval;
pub mod ingest;
pub mod scalar;
pub mod synth;
pub mod whatif;

mod error;

pub use error::Error;
pub use scalar::Scalar;

pub use cart::{ClassCounts, Criterion, HyperParams};
pub use eval::{ConfusionMatrix, EvaluationReport, SplitConfig};
pub use ingest::{PassLabel, FEATURE_NAMES, NUM_FEATURES};

/// Cleaned dataset with `f64` scores.
pub type Dataset = ingest::Dataset<f64>;
/// One student's six criteria scores plus label.
pub type StudentRecord = ingest::StudentRecord<f64>;
/// The six criteria scores of one student.
pub type FeatureVector = ingest::FeatureVector<f64>;
/// Fitted decision tree over `f64` features.
pub type Tree = cart::Tree<f64>;
pub type TreeNode = cart::TreeNode<f64>;
pub type Prediction = cart::Prediction<f64>;
pub type SplitCandidate = cart::SplitCandidate<f64>;
pub type WhatIfConfig = whatif::WhatIfConfig<f64>;
pub type Counterfactual = whatif::Counterfactual<f64>;
pub type WhatIfReport = whatif::WhatIfReport<f64>;

/// Single-precision variants, for callers that keep scores as `f32`.
pub mod f32 {
    pub type Dataset = crate::ingest::Dataset<f32>;
    pub type FeatureVector = crate::ingest::FeatureVector<f32>;
    pub type Tree = crate::cart::Tree<f32>;
    pub type Prediction = crate::cart::Prediction<f32>;
    pub type WhatIfConfig = crate::whatif::WhatIfConfig<f32>;
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
