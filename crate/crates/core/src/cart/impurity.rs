use super::{CartError, ClassCounts, Criterion};
use crate::Scalar;

/// Gini impurity `1 - p_fail^2 - p_pass^2`.
pub fn gini<T: Scalar>(counts: ClassCounts) -> Result<T, CartError> {
    nonempty(counts)?;
    Ok(gini_unchecked(counts))
}

/// Shannon entropy in bits, with `0 * log 0 = 0`.
pub fn entropy<T: Scalar>(counts: ClassCounts) -> Result<T, CartError> {
    nonempty(counts)?;
    Ok(entropy_unchecked(counts))
}

fn nonempty(counts: ClassCounts) -> Result<(), CartError> {
    if counts.total() == 0 {
        Err(CartError::Domain("impurity of an empty node".into()))
    } else {
        Ok(())
    }
}

pub(crate) fn gini_unchecked<T: Scalar>(counts: ClassCounts) -> T {
    let n = T::from_count(counts.total());
    let f = T::from_count(counts.fail) / n;
    let p = T::from_count(counts.pass) / n;
    T::one() - (f * f + p * p)
}

pub(crate) fn entropy_unchecked<T: Scalar>(counts: ClassCounts) -> T {
    let n = T::from_count(counts.total());
    [counts.fail, counts.pass]
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = T::from_count(c) / n;
            -p * p.log2()
        })
        .fold(T::zero(), |acc, x| acc + x)
}

impl Criterion {
    pub fn impurity<T: Scalar>(self, counts: ClassCounts) -> Result<T, CartError> {
        nonempty(counts)?;
        Ok(self.impurity_unchecked(counts))
    }

    pub(crate) fn impurity_unchecked<T: Scalar>(self, counts: ClassCounts) -> T {
        match self {
            Self::Gini => gini_unchecked(counts),
            Self::Entropy => entropy_unchecked(counts),
        }
    }
}
