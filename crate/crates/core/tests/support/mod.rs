//! Brute-force oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls into the split search, tree growth or what-if search
//! being checked; impurities and partitions are recomputed from scratch.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use gradecast::cart::Tree;
use gradecast::{Criterion, PassLabel};

/// Small random dataset: `rows[i][f]` integers in `0..=max_value`.
#[derive(Debug, Clone)]
pub struct SmallData {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<PassLabel>,
}

impl SmallData {
    pub fn random(
        rng: &mut ChaCha8Rng,
        max_rows: usize,
        max_features: usize,
        max_value: u32,
    ) -> Self {
        let n = rng.random_range(2..=max_rows);
        let d = rng.random_range(1..=max_features);
        let rows = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| f64::from(rng.random_range(0..=max_value)))
                    .collect()
            })
            .collect();
        let labels = (0..n)
            .map(|_| PassLabel::from(rng.random_bool(0.5)))
            .collect();
        Self { rows, labels }
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.n_features()).map(|i| format!("x{i}")).collect()
    }

    /// No two rows share features but differ in label.
    pub fn label_consistent(&self) -> bool {
        for i in 0..self.rows.len() {
            for j in i + 1..self.rows.len() {
                if self.rows[i] == self.rows[j] && self.labels[i] != self.labels[j] {
                    return false;
                }
            }
        }
        true
    }
}

pub fn oracle_impurity(criterion: Criterion, fail: usize, pass: usize) -> f64 {
    let n = (fail + pass) as f64;
    let props = [fail as f64 / n, pass as f64 / n];
    match criterion {
        Criterion::Gini => 1.0 - props.iter().map(|p| p * p).sum::<f64>(),
        Criterion::Entropy => {
            -props
                .iter()
                .filter(|p| **p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>()
                / std::f64::consts::LN_2
        }
    }
}

fn counts(labels: impl Iterator<Item = PassLabel>) -> (usize, usize) {
    labels.fold(
        (0, 0),
        |(f, p), l| if l.is_pass() { (f, p + 1) } else { (f + 1, p) },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub cost: f64,
}

/// Every `(feature, midpoint)` pair with its weighted child impurity, in
/// feature-then-threshold order.
pub fn enumerate_splits(
    data: &SmallData,
    criterion: Criterion,
    min_leaf: usize,
) -> Vec<OracleSplit> {
    let mut out = Vec::new();
    for f in 0..data.n_features() {
        let mut vals: Vec<f64> = data.rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left = counts(
                data.rows
                    .iter()
                    .zip(&data.labels)
                    .filter(|(r, _)| r[f] <= t)
                    .map(|(_, l)| *l),
            );
            let right = counts(
                data.rows
                    .iter()
                    .zip(&data.labels)
                    .filter(|(r, _)| r[f] > t)
                    .map(|(_, l)| *l),
            );
            let (nl, nr) = (left.0 + left.1, right.0 + right.1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let cost = (nl as f64 * oracle_impurity(criterion, left.0, left.1)
                + nr as f64 * oracle_impurity(criterion, right.0, right.1))
                / (nl + nr) as f64;
            out.push(OracleSplit {
                feature: f,
                threshold: t,
                cost,
            });
        }
    }
    out
}

/// Minimal-cost split with strictly positive gain; the first candidate in
/// enumeration order wins ties.
pub fn oracle_best_split(
    data: &SmallData,
    criterion: Criterion,
    min_leaf: usize,
) -> Option<OracleSplit> {
    const TIE: f64 = 1e-12;
    let all = enumerate_splits(data, criterion, min_leaf);
    let min = all.iter().map(|s| s.cost).fold(f64::INFINITY, f64::min);
    let (f, p) = counts(data.labels.iter().copied());
    let parent = oracle_impurity(criterion, f, p);
    if parent - min <= TIE {
        return None;
    }
    all.into_iter().find(|s| s.cost <= min + TIE)
}

/// Structural checks on a fitted tree against its training data.
pub fn check_tree(
    tree: &Tree<f64>,
    data: &SmallData,
    max_depth: Option<usize>,
) -> Result<(), String> {
    let nodes = tree.nodes();
    let (f, p) = counts(data.labels.iter().copied());
    let root = tree.root();
    if (root.counts.fail, root.counts.pass) != (f, p) {
        return Err(format!(
            "root counts {:?} != training ({f}, {p})",
            root.counts
        ));
    }
    for n in nodes {
        match (n.split, n.left, n.right) {
            (Some(_), Some(l), Some(r)) => {
                let (lc, rc) = (nodes[l].counts, nodes[r].counts);
                if lc.fail + rc.fail != n.counts.fail || lc.pass + rc.pass != n.counts.pass {
                    return Err(format!("count conservation fails at node {}", n.id));
                }
                if nodes[l].depth != n.depth + 1 || nodes[r].depth != n.depth + 1 {
                    return Err(format!("depth off at node {}", n.id));
                }
            }
            (None, None, None) => {}
            _ => return Err(format!("node {} is half split", n.id)),
        }
        if let Some(d) = max_depth {
            if n.depth > d {
                return Err(format!("node {} at depth {} exceeds {d}", n.id, n.depth));
            }
        }
    }
    // Route every record by hand and tally leaf arrivals.
    let mut arrivals = vec![(0usize, 0usize); nodes.len()];
    for (row, label) in data.rows.iter().zip(&data.labels) {
        let mut id = tree.root_id();
        while let Some(s) = nodes[id].split {
            id = if row[s.feature] <= s.threshold {
                nodes[id].left.unwrap()
            } else {
                nodes[id].right.unwrap()
            };
        }
        if label.is_pass() {
            arrivals[id].1 += 1;
        } else {
            arrivals[id].0 += 1;
        }
    }
    for n in nodes {
        let got = arrivals[n.id];
        if n.is_leaf() && got != (n.counts.fail, n.counts.pass) {
            return Err(format!(
                "leaf {} holds {:?} but {got:?} routed there",
                n.id, n.counts
            ));
        }
        if !n.is_leaf() && got != (0, 0) {
            return Err(format!("records stopped at internal node {}", n.id));
        }
    }
    if max_depth.is_none() && tree.params().min_samples_leaf == 1 && data.label_consistent() {
        let preds = tree.predict_labels(&data.rows).map_err(|e| e.to_string())?;
        if preds != data.labels {
            return Err("training accuracy below 100% on label-consistent data".into());
        }
    }
    Ok(())
}

/// Grid multiples `k` per feature for one counterfactual.
pub type GridPoint = Vec<usize>;

/// Exhaustive what-if grid search.
///
/// Returns `(features, multiples)` for each expected suggestion, in the
/// expected order: per-feature minima, and for `depth == 2` each pair's
/// Pareto-minimal flip with the smallest total.
pub fn oracle_whatif(
    passes: &dyn Fn(&[f64]) -> bool,
    x: &[f64],
    step: f64,
    caps: &[f64],
    mutable: &[usize],
    depth: usize,
) -> Vec<(Vec<usize>, GridPoint)> {
    let d = x.len();
    let limits: Vec<usize> = (0..d)
        .map(|f| {
            if !mutable.contains(&f) {
                return 0;
            }
            let mut k = 0;
            while x[f] + (k + 1) as f64 * step <= caps[f] {
                k += 1;
            }
            k
        })
        .collect();

    // Every grid point over the mutable features.
    let mut flips: Vec<GridPoint> = Vec::new();
    let mut point = vec![0usize; d];
    loop {
        let moved: Vec<f64> = (0..d).map(|f| x[f] + point[f] as f64 * step).collect();
        if point.iter().any(|&k| k > 0) && passes(&moved) {
            flips.push(point.clone());
        }
        let mut f = 0;
        while f < d {
            if point[f] < limits[f] {
                point[f] += 1;
                break;
            }
            point[f] = 0;
            f += 1;
        }
        if f == d {
            break;
        }
    }

    let support = |p: &GridPoint| -> Vec<usize> { (0..d).filter(|&f| p[f] > 0).collect() };
    let dominated = |p: &GridPoint| flips.iter().any(|q| q != p && (0..d).all(|f| q[f] <= p[f]));
    let mut out: Vec<(Vec<usize>, GridPoint)> = Vec::new();
    for f in 0..d {
        if let Some(best) = flips
            .iter()
            .filter(|p| support(p) == vec![f])
            .min_by_key(|p| p[f])
        {
            out.push((vec![f], best.clone()));
        }
    }
    if depth == 2 {
        for f in 0..d {
            for g in f + 1..d {
                let best = flips
                    .iter()
                    .filter(|p| support(p) == vec![f, g] && !dominated(p))
                    .min_by_key(|p| (p[f] + p[g], p[f]));
                if let Some(best) = best {
                    out.push((vec![f, g], best.clone()));
                }
            }
        }
    }
    out.sort_by_key(|(feats, p)| (p.iter().sum::<usize>(), feats.clone()));
    out
}
