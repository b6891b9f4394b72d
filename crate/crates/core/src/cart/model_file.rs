//! Versioned JSON model files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "criterion": "gini",
//!   "hyperparameters": { "max_depth": null, "min_samples_split": 2, "min_samples_leaf": 1 },
//!   "feature_names": ["att_prelim", ...],
//!   "root": 0,
//!   "nodes": [
//!     { "id": 0, "depth": 0, "counts": [19, 42],
//!       "split": { "feature": 5, "threshold": 59.5 }, "left": 1, "right": 2 },
//!     ...
//!   ]
//! }
//! ```
//!
//! Node impurities are not stored; they are recomputed from the counts.

use serde::{Deserialize, Serialize};

use super::tree::{Split, Tree, TreeNode};
use super::{CartError, ClassCounts, Criterion, HyperParams};
use crate::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Hyperparameters {
    max_depth: Option<usize>,
    min_samples_split: usize,
    min_samples_leaf: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct NodeRecord<T> {
    id: usize,
    depth: usize,
    counts: ClassCounts,
    split: Option<Split<T>>,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct ModelFile<T> {
    format_version: u32,
    criterion: Criterion,
    hyperparameters: Hyperparameters,
    feature_names: Vec<String>,
    root: usize,
    nodes: Vec<NodeRecord<T>>,
}

/// Pretty-printed model text, newline terminated.
pub fn serialize<T: Scalar>(tree: &Tree<T>) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        criterion: tree.params.criterion,
        hyperparameters: Hyperparameters {
            max_depth: tree.params.max_depth,
            min_samples_split: tree.params.min_samples_split,
            min_samples_leaf: tree.params.min_samples_leaf,
        },
        feature_names: tree.feature_names.clone(),
        root: tree.root,
        nodes: tree
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                depth: n.depth,
                counts: n.counts,
                split: n.split,
                left: n.left,
                right: n.right,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    text
}

fn format_err(msg: impl Into<String>) -> CartError {
    CartError::Format(msg.into())
}

/// Parses and validates a model file. The error names the first problem found.
pub fn deserialize<T: Scalar>(text: &str) -> Result<Tree<T>, CartError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format_err(format!("malformed model: {e}")))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => return Err(format_err(format!("unknown format version {v}"))),
        None => return Err(format_err("missing format_version")),
    }
    let file: ModelFile<T> =
        serde_json::from_value(value).map_err(|e| format_err(format!("malformed model: {e}")))?;

    let params = HyperParams {
        criterion: file.criterion,
        max_depth: file.hyperparameters.max_depth,
        min_samples_split: file.hyperparameters.min_samples_split,
        min_samples_leaf: file.hyperparameters.min_samples_leaf,
    };
    params
        .validate()
        .map_err(|e| format_err(format!("hyperparameters: {e}")))?;

    let n_features = file.feature_names.len();
    if n_features == 0 {
        return Err(format_err("feature_names is empty"));
    }
    let n = file.nodes.len();
    if n == 0 {
        return Err(format_err("no nodes"));
    }
    if file.root >= n {
        return Err(format_err(format!("root id {} out of range", file.root)));
    }

    let mut parent: Vec<Option<usize>> = vec![None; n];
    for (i, node) in file.nodes.iter().enumerate() {
        if node.id != i {
            return Err(format_err(format!(
                "node id mismatch: entry {i} has id {}",
                node.id
            )));
        }
        if node.counts.total() == 0 {
            return Err(format_err(format!("node {i} has no samples")));
        }
        match (node.split, node.left, node.right) {
            (None, None, None) => {}
            (Some(split), Some(l), Some(r)) => {
                if split.feature >= n_features {
                    return Err(format_err(format!(
                        "node {i} splits on feature {} of {n_features}",
                        split.feature
                    )));
                }
                if !split.threshold.is_finite() {
                    return Err(format_err(format!("node {i} has a non-finite threshold")));
                }
                for child in [l, r] {
                    if child >= n {
                        return Err(format_err(format!(
                            "node {i} references missing child {child}"
                        )));
                    }
                    if child == file.root {
                        return Err(format_err(format!("node {i} points back at the root")));
                    }
                    if let Some(p) = parent[child].replace(i) {
                        return Err(format_err(format!(
                            "node {child} has two parents ({p} and {i})"
                        )));
                    }
                }
            }
            _ => {
                return Err(format_err(format!(
                    "node {i} must have a split and both children, or none"
                )))
            }
        }
    }

    let root = &file.nodes[file.root];
    if root.depth != 0 {
        return Err(format_err("root depth must be 0"));
    }
    // With one parent per non-root node, reaching every node from the root
    // rules out cycles.
    let mut seen = vec![false; n];
    let mut stack = vec![file.root];
    while let Some(i) = stack.pop() {
        seen[i] = true;
        let node = &file.nodes[i];
        if let (Some(l), Some(r)) = (node.left, node.right) {
            let (lc, rc) = (&file.nodes[l], &file.nodes[r]);
            if lc.counts + rc.counts != node.counts {
                return Err(format_err(format!(
                    "count conservation violated at node {i}: {} + {} != {}",
                    lc.counts, rc.counts, node.counts
                )));
            }
            for c in [lc, rc] {
                if c.depth != node.depth + 1 {
                    return Err(format_err(format!(
                        "depth mismatch: node {} has depth {}, parent {i} has depth {}",
                        c.id, c.depth, node.depth
                    )));
                }
            }
            stack.push(r);
            stack.push(l);
        }
    }
    if let Some(orphan) = seen.iter().position(|s| !s) {
        return Err(format_err(format!(
            "node {orphan} is not reachable from the root"
        )));
    }

    let nodes = file
        .nodes
        .into_iter()
        .map(|r| TreeNode {
            id: r.id,
            depth: r.depth,
            counts: r.counts,
            impurity: params.criterion.impurity_unchecked(r.counts),
            split: r.split,
            left: r.left,
            right: r.right,
        })
        .collect();
    Ok(Tree {
        nodes,
        root: file.root,
        params,
        feature_names: file.feature_names,
    })
}
