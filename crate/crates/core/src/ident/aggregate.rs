use std::collections::BTreeMap;

use crate::scalar::{total_cmp, Scalar};
use crate::signal::ConditionKey;

use super::{IdentError, IdentResult, Result};

/// Mean and sample standard deviation; `sd` is `None` for a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread<T> {
    pub mean: T,
    pub sd: Option<T>,
}

impl<T: Scalar> Spread<T> {
    /// Values are sorted first so the result is independent of input order.
    pub fn of(values: &[T]) -> Result<Self> {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| total_cmp(*a, *b));
        let first = *sorted.first().ok_or(IdentError::EmptyGroup)?;
        let n = T::from_usize_lossy(sorted.len());
        // anchored at the first value so that identical inputs average exactly
        let mean = first + sorted.iter().map(|&v| v - first).sum::<T>() / n;
        let sd = (sorted.len() > 1).then(|| {
            let ss: T = sorted.iter().map(|&v| (v - mean) * (v - mean)).sum();
            (ss / (n - T::one())).sqrt()
        });
        Ok(Self { mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary<T> {
    pub condition: ConditionKey,
    pub n: usize,
    pub k: Spread<T>,
    pub c: Spread<T>,
    pub zeta: Spread<T>,
    pub peak_force: Spread<T>,
}

/// Per-condition summaries in [`ConditionKey`] order.
pub fn aggregate<T: Scalar>(results: &[IdentResult<T>]) -> Result<Vec<ConditionSummary<T>>> {
    if results.is_empty() {
        return Err(IdentError::EmptyGroup);
    }
    let mut groups: BTreeMap<ConditionKey, Vec<&IdentResult<T>>> = BTreeMap::new();
    for r in results {
        groups.entry(r.condition).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(condition, rs)| {
            let column = |f: fn(&IdentResult<T>) -> T| Spread::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            Ok(ConditionSummary {
                condition,
                n: rs.len(),
                k: column(|r| r.k)?,
                c: column(|r| r.c)?,
                zeta: column(|r| r.zeta)?,
                peak_force: column(|r| r.peak_force)?,
            })
        })
        .collect()
}
