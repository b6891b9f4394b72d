use serde::{Deserialize, Serialize};

use super::split::{best_split_among, GainRule};
use super::{CartError, ClassCounts, HyperParams};
use crate::ingest::{Dataset, PassLabel};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Split<T> {
    pub feature: usize,
    pub threshold: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    pub id: usize,
    pub depth: usize,
    pub counts: ClassCounts,
    /// Impurity under the tree's criterion.
    pub impurity: T,
    pub split: Option<Split<T>>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl<T> TreeNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// A fitted binary classification tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    pub(super) nodes: Vec<TreeNode<T>>,
    pub(super) root: usize,
    pub(super) params: HyperParams,
    pub(super) feature_names: Vec<String>,
}

/// One routing decision on the way to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PathStep<T> {
    pub node: usize,
    pub feature: usize,
    pub threshold: T,
    pub went_left: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prediction<T> {
    pub label: PassLabel,
    /// Raw pass fraction of the leaf.
    pub pass_probability: f64,
    pub leaf: usize,
    pub path: Vec<PathStep<T>>,
}

/// Anything that maps a feature vector to a pass/fail prediction.
pub trait Predictor<T: Scalar> {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &[T]) -> Result<Prediction<T>, CartError>;
}

impl<T: Scalar> Tree<T> {
    /// Grows a tree on `rows` (one feature slice per record) and `labels`.
    ///
    /// Node ids are assigned in pre-order, root first, so identical inputs
    /// always produce identical trees.
    pub fn fit<R: AsRef<[T]>>(
        rows: &[R],
        labels: &[PassLabel],
        feature_names: Vec<String>,
        params: HyperParams,
    ) -> Result<Self, CartError> {
        params.validate()?;
        if rows.is_empty() {
            return Err(CartError::EmptyDataset);
        }
        if rows.len() != labels.len() {
            return Err(CartError::Domain(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(CartError::Domain("no feature columns".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            check_vector(r.as_ref(), n_features).map_err(|e| match e {
                CartError::Domain(m) => CartError::Domain(format!("record {i}: {m}")),
                other => other,
            })?;
        }

        struct Pending {
            indices: Vec<usize>,
            depth: usize,
            parent: Option<(usize, bool)>,
        }

        let mut nodes: Vec<TreeNode<T>> = Vec::new();
        let mut stack = vec![Pending {
            indices: (0..rows.len()).collect(),
            depth: 0,
            parent: None,
        }];
        while let Some(p) = stack.pop() {
            let id = nodes.len();
            if let Some((parent, is_left)) = p.parent {
                let slot = if is_left {
                    &mut nodes[parent].left
                } else {
                    &mut nodes[parent].right
                };
                *slot = Some(id);
            }
            let counts = ClassCounts::from_labels(p.indices.iter().map(|&i| labels[i]));
            let impurity = params.criterion.impurity_unchecked(counts);
            let may_split = !counts.is_pure()
                && p.indices.len() >= params.min_samples_split
                && params.max_depth.is_none_or(|d| p.depth < d);
            let split = if may_split {
                best_split_among(
                    rows,
                    labels,
                    &p.indices,
                    n_features,
                    &params,
                    GainRule::AllowZero,
                )
            } else {
                None
            };
            nodes.push(TreeNode {
                id,
                depth: p.depth,
                counts,
                impurity,
                split: split.map(|s| Split {
                    feature: s.feature,
                    threshold: s.threshold,
                }),
                left: None,
                right: None,
            });
            if let Some(s) = split {
                let (left, right): (Vec<usize>, Vec<usize>) = p
                    .indices
                    .iter()
                    .partition(|&&i| rows[i].as_ref()[s.feature] <= s.threshold);
                // Right is pushed first so the left subtree is numbered first.
                stack.push(Pending {
                    indices: right,
                    depth: p.depth + 1,
                    parent: Some((id, false)),
                });
                stack.push(Pending {
                    indices: left,
                    depth: p.depth + 1,
                    parent: Some((id, true)),
                });
            }
        }

        Ok(Self {
            nodes,
            root: 0,
            params,
            feature_names,
        })
    }

    pub fn fit_dataset(data: &Dataset<T>, params: HyperParams) -> Result<Self, CartError> {
        Self::fit(
            &data.features(),
            &data.labels(),
            data.feature_names.clone(),
            params,
        )
    }

    /// Routes `x` to its leaf and reports the leaf's pass fraction.
    pub fn predict(&self, x: &[T]) -> Result<Prediction<T>, CartError> {
        check_vector(x, self.feature_names.len())?;
        let mut path = Vec::new();
        let mut node = &self.nodes[self.root];
        while let (Some(split), Some(l), Some(r)) = (node.split, node.left, node.right) {
            let went_left = x[split.feature] <= split.threshold;
            path.push(PathStep {
                node: node.id,
                feature: split.feature,
                threshold: split.threshold,
                went_left,
            });
            node = &self.nodes[if went_left { l } else { r }];
        }
        Ok(Prediction {
            label: node.counts.majority(),
            pass_probability: node.counts.pass_fraction().expect("nonempty leaf"),
            leaf: node.id,
            path,
        })
    }

    pub fn predict_labels<R: AsRef<[T]>>(&self, rows: &[R]) -> Result<Vec<PassLabel>, CartError> {
        rows.iter()
            .map(|r| self.predict(r.as_ref()).map(|p| p.label))
            .collect()
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&TreeNode<T>> {
        self.nodes.get(id)
    }

    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[self.root]
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode<T>> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Depth of the deepest node.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Features that appear in at least one split, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| n.split.map(|s| s.feature))
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

impl<T: Scalar> Predictor<T> for Tree<T> {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>, CartError> {
        Tree::predict(self, x)
    }
}

fn check_vector<T: Scalar>(x: &[T], n_features: usize) -> Result<(), CartError> {
    if x.len() != n_features {
        return Err(CartError::Domain(format!(
            "expected {n_features} features, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(CartError::Domain(format!("feature {i} is not finite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use PassLabel::{Fail, Pass};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn all_pass_is_single_leaf() {
        let rows = [[1.0], [2.0], [3.0]];
        let t = Tree::fit(&rows, &[Pass; 3], names(1), HyperParams::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.root().counts, ClassCounts::new(0, 3));
        let p = t.predict(&[42.0]).unwrap();
        assert_eq!(p.label, Pass);
        assert_eq!(p.pass_probability, 1.0);
        assert!(p.path.is_empty());
    }

    #[test]
    fn four_points_give_one_split() {
        let rows = [[1.0], [2.0], [3.0], [4.0]];
        let t = Tree::fit(
            &rows,
            &[Fail, Fail, Pass, Pass],
            names(1),
            HyperParams::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.depth(), 1);
        assert_eq!(
            t.root().split,
            Some(Split {
                feature: 0,
                threshold: 2.5
            })
        );
        assert_eq!(t.root().left, Some(1));
        assert_eq!(t.root().right, Some(2));
        assert_eq!(t.nodes()[1].counts, ClassCounts::new(2, 0));
        assert_eq!(t.nodes()[2].counts, ClassCounts::new(0, 2));
        // Boundary value goes left.
        assert_eq!(t.predict(&[2.5]).unwrap().label, Fail);
        assert_eq!(t.predict(&[2.5000001]).unwrap().label, Pass);
    }

    #[test]
    fn exclusive_or_needs_depth_two() {
        let rows = [
            [0.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0],
            [0.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0],
        ];
        let labels = [Fail, Fail, Pass, Pass, Fail, Fail, Pass, Pass];
        // No single threshold lowers impurity on this layout.
        assert!(super::super::best_split(&rows, &labels, &HyperParams::default()).is_none());
        let t = Tree::fit(&rows, &labels, names(2), HyperParams::default()).unwrap();
        assert_eq!(t.depth(), 2);
        assert_eq!(
            t.root().split,
            Some(Split {
                feature: 0,
                threshold: 0.5
            })
        );
        assert_eq!(t.predict_labels(&rows).unwrap(), labels);
    }

    #[test]
    fn preorder_ids() {
        let rows = [[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]];
        let labels = [Fail, Pass, Fail, Pass, Pass, Pass];
        let t = Tree::fit(&rows, &labels, names(1), HyperParams::default()).unwrap();
        let mut order = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            order.push(id);
            let n = &t.nodes()[id];
            if let (Some(l), Some(r)) = (n.left, n.right) {
                stack.push(r);
                stack.push(l);
            }
        }
        assert_eq!(order, (0..t.len()).collect::<Vec<_>>());
    }

    #[test]
    fn max_depth_caps_growth() {
        let rows: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let labels: Vec<PassLabel> = (0..10).map(|i| PassLabel::from(i % 2 == 0)).collect();
        let p = HyperParams {
            max_depth: Some(2),
            ..Default::default()
        };
        let t = Tree::fit(&rows, &labels, names(1), p).unwrap();
        assert!(t.depth() <= 2);
    }

    #[test]
    fn leaf_fraction_is_reported() {
        // One leaf with counts (1, 30), the other (13, 2).
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..31 {
            rows.push([80.0]);
            labels.push(PassLabel::from(i != 0));
        }
        for i in 0..15 {
            rows.push([40.0]);
            labels.push(PassLabel::from(i < 2));
        }
        let t = Tree::fit(&rows, &labels, names(1), HyperParams::default()).unwrap();
        let hi = t.predict(&[90.0]).unwrap();
        assert_eq!(hi.label, Pass);
        assert!((hi.pass_probability - 30.0 / 31.0).abs() < 1e-15);
        assert!((hi.pass_probability - 0.9677).abs() < 1e-4);
        let lo = t.predict(&[10.0]).unwrap();
        assert_eq!(lo.label, Fail);
        assert!((lo.pass_probability - 2.0 / 15.0).abs() < 1e-15);
        assert_eq!(lo.path.len(), 1);
        assert!(lo.path[0].went_left);
    }

    #[test]
    fn tied_leaf_predicts_fail_at_half() {
        let rows = [[1.0], [1.0]];
        let t = Tree::fit(&rows, &[Fail, Pass], names(1), HyperParams::default()).unwrap();
        let p = t.predict(&[1.0]).unwrap();
        assert_eq!(p.label, Fail);
        assert_eq!(p.pass_probability, 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty: [[f64; 1]; 0] = [];
        assert_eq!(
            Tree::fit(&empty, &[], names(1), HyperParams::default()).unwrap_err(),
            CartError::EmptyDataset
        );
        let rows = [[1.0], [f64::NAN]];
        assert!(matches!(
            Tree::fit(&rows, &[Pass, Fail], names(1), HyperParams::default()),
            Err(CartError::Domain(_))
        ));
        let t = Tree::fit(&[[1.0]], &[Pass], names(1), HyperParams::default()).unwrap();
        assert!(matches!(
            t.predict(&[f64::INFINITY]),
            Err(CartError::Domain(_))
        ));
        assert!(matches!(t.predict(&[1.0, 2.0]), Err(CartError::Domain(_))));
    }
}
