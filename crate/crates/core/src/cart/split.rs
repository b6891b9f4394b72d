use serde::{Deserialize, Serialize};

use super::{ClassCounts, Criterion, HyperParams};
use crate::ingest::PassLabel;
use crate::Scalar;

/// A scored `(feature, threshold)` partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SplitCandidate<T> {
    pub feature: usize,
    pub threshold: T,
    /// Size-weighted mean impurity of the two children.
    pub weighted_impurity: T,
    /// Parent impurity minus `weighted_impurity`.
    pub gain: T,
    pub left: ClassCounts,
    pub right: ClassCounts,
}

/// Midpoints between consecutive distinct values, ascending.
pub fn candidate_thresholds<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
    sorted.dedup();
    sorted
        .windows(2)
        .map(|w| T::split_midpoint(w[0], w[1]))
        .collect()
}

/// Cheapest impurity-reducing split over all rows, or `None` when nothing
/// helps or the node is too small to split.
///
/// Equal costs resolve to the lowest feature index, then the lowest threshold.
pub fn best_split<T: Scalar, R: AsRef<[T]>>(
    rows: &[R],
    labels: &[PassLabel],
    params: &HyperParams,
) -> Option<SplitCandidate<T>> {
    let indices: Vec<usize> = (0..rows.len()).collect();
    let n_features = rows.first().map_or(0, |r| r.as_ref().len());
    best_split_among(
        rows,
        labels,
        &indices,
        n_features,
        params,
        GainRule::Positive,
    )
}

/// Whether a split must lower impurity to be accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GainRule {
    Positive,
    /// Accept the cheapest valid split even when it leaves impurity unchanged.
    /// Tree growth uses this so patterns like exclusive-or, where no single
    /// split helps but two do, can still be learned.
    AllowZero,
}

pub(crate) fn best_split_among<T: Scalar, R: AsRef<[T]>>(
    rows: &[R],
    labels: &[PassLabel],
    indices: &[usize],
    n_features: usize,
    params: &HyperParams,
    rule: GainRule,
) -> Option<SplitCandidate<T>> {
    let n = indices.len();
    if n < params.min_samples_split.max(2) {
        return None;
    }
    let parent = ClassCounts::from_labels(indices.iter().map(|&i| labels[i]));
    let parent_impurity: T = params.criterion.impurity_unchecked(parent);
    let tol = T::cost_tolerance();

    let mut best: Option<SplitCandidate<T>> = None;
    let mut column: Vec<(T, PassLabel)> = Vec::with_capacity(n);
    for feature in 0..n_features {
        column.clear();
        column.extend(
            indices
                .iter()
                .map(|&i| (rows[i].as_ref()[feature], labels[i])),
        );
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut left = ClassCounts::default();
        for k in 0..n - 1 {
            left.add(column[k].1);
            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo >= hi {
                continue;
            }
            let right = parent.checked_sub(left).expect("left is a subset");
            if left.total() < params.min_samples_leaf || right.total() < params.min_samples_leaf {
                continue;
            }
            let cost = weighted_cost(params.criterion, left, right);
            if best.is_none_or(|b| cost < b.weighted_impurity - tol) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: T::split_midpoint(lo, hi),
                    weighted_impurity: cost,
                    gain: parent_impurity - cost,
                    left,
                    right,
                });
            }
        }
    }
    match rule {
        GainRule::Positive => best.filter(|b| b.gain > tol),
        GainRule::AllowZero => best,
    }
}

fn weighted_cost<T: Scalar>(criterion: Criterion, left: ClassCounts, right: ClassCounts) -> T {
    let nl = T::from_count(left.total());
    let nr = T::from_count(right.total());
    let l: T = criterion.impurity_unchecked(left);
    let r: T = criterion.impurity_unchecked(right);
    (nl * l + nr * r) / (nl + nr)
}
