//! Criteria indicators: the smallest score improvements that turn a
//! predicted fail into a predicted pass.
//!
//! The search walks a grid of whole `step` multiples upward from the
//! student's current scores and asks the predictor at each point, so it
//! works for any [`Predictor`], not just trees. Only increases are
//! considered; every criterion is a score where higher is better.
//!
//! With `depth = 2` feature pairs are searched as well. A pair is only
//! reported when neither of its two changes would flip the outcome on its
//! own at the same or a smaller delta.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::{CartError, Prediction, Predictor};
use crate::Scalar;

/// Upper bound on grid points searched per feature.
pub const MAX_GRID_POINTS: usize = 1_000_000;
/// Upper bound on grid points searched per feature pair.
pub const MAX_PAIR_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhatIfError {
    #[error("invalid what-if config: {0}")]
    Config(String),
    #[error(transparent)]
    Predict(#[from] CartError),
}

/// Missing fields take their [`Default`] values when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct WhatIfConfig<T> {
    /// Grid spacing in score points.
    pub step: T,
    /// Highest allowed value per feature.
    pub caps: Vec<T>,
    /// Features the student can change.
    pub mutable: Vec<usize>,
    /// 1 for single-criterion advice, 2 to include pairs.
    pub depth: usize,
}

impl<T: Scalar> WhatIfConfig<T> {
    /// Step 1, caps of 100, every feature mutable, single-feature search.
    pub fn for_features(n: usize) -> Self {
        Self {
            step: T::one(),
            caps: vec![T::from_u8(100).unwrap(); n],
            mutable: (0..n).collect(),
            depth: 1,
        }
    }

    fn validate(&self, x: &[T]) -> Result<(), WhatIfError> {
        let bad = |m: String| Err(WhatIfError::Config(m));
        if !(self.step.is_finite() && self.step > T::zero()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if self.caps.len() != x.len() {
            return bad(format!(
                "expected {} caps, got {}",
                x.len(),
                self.caps.len()
            ));
        }
        if self.caps.iter().any(|c| !c.is_finite()) {
            return bad("caps must be finite".into());
        }
        if !(1..=2).contains(&self.depth) {
            return bad(format!(
                "combination depth must be 1 or 2, got {}",
                self.depth
            ));
        }
        for &f in &self.mutable {
            if f >= x.len() {
                return bad(format!("mutable feature {f} out of range"));
            }
            if self.caps[f] < x[f] {
                return bad(format!(
                    "cap {} for feature {f} is below its current value {}",
                    self.caps[f], x[f]
                ));
            }
        }
        Ok(())
    }

    /// Largest `k` with `x + k * step <= cap`.
    fn max_steps(&self, current: T, feature: usize) -> Result<usize, WhatIfError> {
        let cap = self.caps[feature];
        let approx = ((cap - current) / self.step).floor();
        let mut k = approx.to_usize().unwrap_or(usize::MAX);
        if k > MAX_GRID_POINTS {
            return Err(WhatIfError::Config(format!(
                "step {} is too fine: more than {MAX_GRID_POINTS} grid points for feature {feature}",
                self.step
            )));
        }
        while current + T::from_count(k + 1) * self.step <= cap {
            k += 1;
        }
        while k > 0 && current + T::from_count(k) * self.step > cap {
            k -= 1;
        }
        Ok(k)
    }
}

impl<T: Scalar> Default for WhatIfConfig<T> {
    fn default() -> Self {
        Self::for_features(crate::NUM_FEATURES)
    }
}

/// A set of score increases under which the model predicts pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Counterfactual<T> {
    /// Increase per feature; zero where untouched.
    pub deltas: Vec<T>,
    /// Changed features, ascending.
    pub features: Vec<usize>,
    /// Sum of `deltas`.
    pub total: T,
    /// Sum of grid multiples; orders suggestions exactly.
    pub grid_steps: usize,
    pub prediction: Prediction<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WhatIfResult<T> {
    pub already_pass: bool,
    /// False when no cap-respecting change flips the outcome.
    pub reachable: bool,
    pub suggestions: Vec<Counterfactual<T>>,
}

/// Grid multiple and counterfactual for the cheapest single-feature flip.
type Single<T> = (usize, Counterfactual<T>);

struct Search<'a, T, P> {
    model: &'a P,
    x: &'a [T],
    config: &'a WhatIfConfig<T>,
}

impl<T: Scalar, P: Predictor<T>> Search<'_, T, P> {
    fn try_steps(
        &self,
        steps: &[(usize, usize)],
    ) -> Result<Option<Counterfactual<T>>, WhatIfError> {
        let mut deltas = vec![T::zero(); self.x.len()];
        let mut moved = self.x.to_vec();
        for &(f, k) in steps {
            deltas[f] = T::from_count(k) * self.config.step;
            moved[f] = self.x[f] + deltas[f];
        }
        let prediction = self.model.predict(&moved)?;
        if !prediction.label.is_pass() {
            return Ok(None);
        }
        Ok(Some(Counterfactual {
            total: deltas.iter().fold(T::zero(), |a, &d| a + d),
            deltas,
            features: steps.iter().map(|&(f, _)| f).collect(),
            grid_steps: steps.iter().map(|&(_, k)| k).sum(),
            prediction,
        }))
    }

    /// Smallest single-feature change for each mutable feature.
    fn singles(&self, features: &[usize]) -> Result<Vec<Option<Single<T>>>, WhatIfError> {
        let mut out = Vec::with_capacity(features.len());
        for &f in features {
            let k_max = self.config.max_steps(self.x[f], f)?;
            let mut found = None;
            for k in 1..=k_max {
                if let Some(cf) = self.try_steps(&[(f, k)])? {
                    found = Some((k, cf));
                    break;
                }
            }
            out.push(found);
        }
        Ok(out)
    }
}

fn sorted_mutable<T>(config: &WhatIfConfig<T>) -> Vec<usize> {
    let mut m = config.mutable.clone();
    m.sort_unstable();
    m.dedup();
    m
}

/// Minimal improvements that flip the prediction to pass, smallest total
/// first (ties: lowest feature indices first).
///
/// A student already predicted to pass gets one all-zero suggestion.
pub fn suggest<T: Scalar, P: Predictor<T>>(
    model: &P,
    x: &[T],
    config: &WhatIfConfig<T>,
) -> Result<WhatIfResult<T>, WhatIfError> {
    let base = model.predict(x)?;
    config.validate(x)?;
    if base.label.is_pass() {
        return Ok(WhatIfResult {
            already_pass: true,
            reachable: true,
            suggestions: vec![Counterfactual {
                deltas: vec![T::zero(); x.len()],
                features: Vec::new(),
                total: T::zero(),
                grid_steps: 0,
                prediction: base,
            }],
        });
    }

    let search = Search { model, x, config };
    let mutable = sorted_mutable(config);
    let singles = search.singles(&mutable)?;
    let single_min: Vec<Option<usize>> = singles
        .iter()
        .map(|s| s.as_ref().map(|(k, _)| *k))
        .collect();
    let mut suggestions: Vec<Counterfactual<T>> =
        singles.into_iter().flatten().map(|(_, cf)| cf).collect();

    if config.depth == 2 {
        for i in 0..mutable.len() {
            for j in i + 1..mutable.len() {
                let (f, g) = (mutable[i], mutable[j]);
                // A pair that includes a change already sufficient alone is
                // not minimal, so each side stays strictly below its single
                // minimum.
                let cap_f = config
                    .max_steps(x[f], f)?
                    .min(single_min[i].map_or(usize::MAX, |m| m - 1));
                let cap_g = config
                    .max_steps(x[g], g)?
                    .min(single_min[j].map_or(usize::MAX, |m| m - 1));
                if cap_f == 0 || cap_g == 0 {
                    continue;
                }
                if cap_f.saturating_mul(cap_g) > MAX_PAIR_GRID_POINTS {
                    return Err(WhatIfError::Config(format!(
                        "step {} is too fine for pair search on features {f} and {g}",
                        config.step
                    )));
                }
                'totals: for total in 2..=cap_f + cap_g {
                    let lo = total.saturating_sub(cap_g).max(1);
                    let hi = (total - 1).min(cap_f);
                    for a in lo..=hi {
                        if let Some(cf) = search.try_steps(&[(f, a), (g, total - a)])? {
                            suggestions.push(cf);
                            break 'totals;
                        }
                    }
                }
            }
        }
    }

    suggestions.sort_by(|a, b| {
        a.grid_steps
            .cmp(&b.grid_steps)
            .then_with(|| a.features.cmp(&b.features))
    });
    Ok(WhatIfResult {
        already_pass: false,
        reachable: !suggestions.is_empty(),
        suggestions,
    })
}

/// Per-criterion minimal delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CriterionRank<T> {
    pub feature: usize,
    /// `None` when no cap-respecting increase of this feature alone flips
    /// the prediction.
    pub delta: Option<T>,
}

/// Every feature with its smallest flipping delta, ascending; features that
/// cannot flip the outcome (including immutable ones) come last.
pub fn rank_criteria<T: Scalar, P: Predictor<T>>(
    model: &P,
    x: &[T],
    config: &WhatIfConfig<T>,
) -> Result<Vec<CriterionRank<T>>, WhatIfError> {
    let base = model.predict(x)?;
    config.validate(x)?;
    if base.label.is_pass() {
        return Ok((0..x.len())
            .map(|feature| CriterionRank {
                feature,
                delta: Some(T::zero()),
            })
            .collect());
    }
    let search = Search { model, x, config };
    let mutable = sorted_mutable(config);
    let singles = search.singles(&mutable)?;
    let mut reachable: Vec<(usize, usize, T)> = Vec::new();
    for (&f, s) in mutable.iter().zip(&singles) {
        if let Some((k, cf)) = s {
            reachable.push((*k, f, cf.deltas[f]));
        }
    }
    reachable.sort_by_key(|&(k, f, _)| (k, f));
    let mut ranks: Vec<CriterionRank<T>> = reachable
        .iter()
        .map(|&(_, feature, d)| CriterionRank {
            feature,
            delta: Some(d),
        })
        .collect();
    ranks.extend(
        (0..x.len())
            .filter(|f| !reachable.iter().any(|r| r.1 == *f))
            .map(|feature| CriterionRank {
                feature,
                delta: None,
            }),
    );
    Ok(ranks)
}

/// One changed criterion within a suggestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Change<T> {
    pub feature: usize,
    pub name: String,
    pub current: T,
    pub required: T,
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SuggestionView<T> {
    pub rank: usize,
    pub changes: Vec<Change<T>>,
    pub total: T,
    pub pass_probability: f64,
}

/// Display-ready what-if answer shared by the CLI and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WhatIfReport<T> {
    pub current: Vec<T>,
    pub base: Prediction<T>,
    pub already_pass: bool,
    pub reachable: bool,
    pub suggestions: Vec<SuggestionView<T>>,
    pub table: String,
}

impl<T: Scalar> WhatIfReport<T> {
    pub fn new(
        feature_names: &[String],
        x: &[T],
        base: Prediction<T>,
        result: &WhatIfResult<T>,
    ) -> Self {
        let suggestions: Vec<SuggestionView<T>> = result
            .suggestions
            .iter()
            .enumerate()
            .map(|(i, cf)| SuggestionView {
                rank: i + 1,
                changes: cf
                    .features
                    .iter()
                    .map(|&f| Change {
                        feature: f,
                        name: feature_names
                            .get(f)
                            .cloned()
                            .unwrap_or_else(|| format!("X_{f}")),
                        current: x[f],
                        required: x[f] + cf.deltas[f],
                        delta: cf.deltas[f],
                    })
                    .collect(),
                total: cf.total,
                pass_probability: cf.prediction.pass_probability,
            })
            .collect();
        let table = render_table(&suggestions, result.reachable);
        Self {
            current: x.to_vec(),
            base,
            already_pass: result.already_pass,
            reachable: result.reachable,
            suggestions,
            table,
        }
    }
}

/// Suggestion rows: rank, feature, current value, required value, delta and
/// the pass probability after the change. Multi-feature suggestions take one
/// row per feature under the same rank.
pub fn render_table<T: Scalar>(suggestions: &[SuggestionView<T>], reachable: bool) -> String {
    let mut out = format!(
        "{:<5} {:<14} {:>10} {:>10} {:>10} {:>9}\n",
        "rank", "feature", "current", "required", "delta", "p(pass)"
    );
    if !reachable {
        out.push_str("no reachable improvement within caps\n");
        return out;
    }
    for s in suggestions {
        if s.changes.is_empty() {
            let _ = writeln!(
                out,
                "{:<5} {:<14} {:>10} {:>10} {:>10} {:>9.6}",
                s.rank, "(none)", "-", "-", 0, s.pass_probability
            );
        }
        for c in &s.changes {
            let _ = writeln!(
                out,
                "{:<5} {:<14} {:>10} {:>10} {:>10} {:>9.6}",
                s.rank,
                c.name,
                c.current.to_string(),
                c.required.to_string(),
                c.delta.to_string(),
                s.pass_probability
            );
        }
    }
    out
}

/// `suggest` plus rendering.
pub fn report<T: Scalar, P: Predictor<T>>(
    model: &P,
    feature_names: &[String],
    x: &[T],
    config: &WhatIfConfig<T>,
) -> Result<WhatIfReport<T>, WhatIfError> {
    let base = model.predict(x)?;
    let result = suggest(model, x, config)?;
    Ok(WhatIfReport::new(feature_names, x, base, &result))
}
