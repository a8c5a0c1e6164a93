//! Rank-based tests: Kruskal–Wallis with Steel–Dwass pairwise comparisons
//! for independent groups, Friedman with Bonferroni-corrected Wilcoxon
//! signed-rank comparisons for paired treatments, and a permutation oracle
//! that re-derives any of their p-values by Monte Carlo.
//!
//! Everything here is `f64`. p-values are kept at full precision; rounding
//! happens only in [`format_p`].

mod friedman;
mod kruskal;
mod permutation;
mod rank;
mod steel_dwass;
mod wilcoxon;

use serde::Serialize;
use thiserror::Error;

pub use friedman::{friedman, friedman_statistic, friedman_with, FriedmanMethod, EXACT_LIMIT};
pub use kruskal::{kruskal_wallis, kruskal_wallis_statistic};
pub use permutation::{permutation_oracle, steel_dwass_monte_carlo, OracleData, MIN_DRAWS};
pub use rank::{rank_with_ties, Ranking};
pub use steel_dwass::{pair_statistic, ptukey_upper, steel_dwass};
pub use wilcoxon::{pairwise_wilcoxon, signed_rank_exact_cdf, wilcoxon_signed_rank, EXACT_MAX_N};

/// Significance level used throughout unless a caller overrides it.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {group} has {len} observations, need at least {min}")]
    TooFewObservations { group: usize, len: usize, min: usize },
    #[error("non-finite value at position {0}")]
    NonFiniteInput(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("blocks must all have {expected} treatments (block {block} has {got})")]
    IncompleteBlocks { block: usize, expected: usize, got: usize },
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("alpha must lie in (0, 1] and m >= 1 (got alpha = {alpha}, m = {m})")]
    InvalidAlpha { alpha: f64, m: usize },
    #[error("need at least {min} Monte Carlo draws, got {got}")]
    TooFewDraws { got: usize, min: usize },
    #[error("exact enumeration of {0} arrangements is not feasible")]
    EnumerationTooLarge(f64),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    KruskalWallis,
    SteelDwassPair,
    Friedman,
    WilcoxonSignedRank,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::KruskalWallis => "kruskal_wallis",
            TestKind::SteelDwassPair => "steel_dwass_pair",
            TestKind::Friedman => "friedman",
            TestKind::WilcoxonSignedRank => "wilcoxon_signed_rank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    LargeSample,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::LargeSample => "large_sample",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p: f64,
    pub alpha: f64,
    pub significant: bool,
    pub method: Method,
    pub mc_se: Option<f64>,
}

impl StatResult {
    pub(crate) fn new(test: TestKind, statistic: f64, p: f64, method: Method) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self { test, statistic, p, alpha: DEFAULT_ALPHA, significant: p < DEFAULT_ALPHA, method, mc_se: None }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.significant = self.p < alpha;
        self
    }

    pub(crate) fn with_mc_se(mut self, se: f64) -> Self {
        self.mc_se = Some(se);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    /// Indices into [`PairwiseTable::labels`], `a < b`.
    pub a: usize,
    pub b: usize,
    pub result: StatResult,
}

/// One result per unordered pair of groups, in lexicographic `(a, b)` order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTable {
    pub labels: Vec<String>,
    pub pairs: Vec<PairResult>,
}

impl PairwiseTable {
    pub(crate) fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> Result<StatResult>) -> Result<Self> {
        let g = labels.len();
        let mut pairs = Vec::with_capacity(g * (g.saturating_sub(1)) / 2);
        for a in 0..g {
            for b in a + 1..g {
                pairs.push(PairResult { a, b, result: f(a, b)? });
            }
        }
        Ok(Self { labels, pairs })
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&StatResult> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| p.a == a && p.b == b).map(|p| &p.result)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        for p in &mut self.pairs {
            p.result = p.result.with_alpha(alpha);
        }
        self
    }
}

/// `alpha / m`.
pub fn bonferroni(alpha: f64, m: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) || m == 0 {
        return Err(StatsError::InvalidAlpha { alpha, m });
    }
    Ok(alpha / m as f64)
}

/// p-value to four decimals; values below 0.001 print as `< 0.0010`.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< 0.0010".to_string()
    } else {
        format!("{p:.4}")
    }
}

/// Significance level truncated to three decimals (0.05/6 prints as 0.008).
pub fn format_alpha(alpha: f64) -> String {
    format!("{:.3}", (alpha * 1000.0 + 1e-9).floor() / 1000.0)
}

pub(crate) fn check_groups(groups: &[Vec<f64>], min_len: usize) -> Result<()> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for (group, g) in groups.iter().enumerate() {
        if g.len() < min_len {
            return Err(StatsError::TooFewObservations { group, len: g.len(), min: min_len });
        }
    }
    Ok(())
}

pub(crate) fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// Comparison slack for "statistic at least as extreme as observed" when both
/// sides come from floating-point sums over the same values.
pub(crate) fn at_least(stat: f64, observed: f64) -> bool {
    stat >= observed - 1e-9 * observed.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_levels() {
        assert!((bonferroni(0.05, 6).unwrap() - 0.008333333333333333).abs() < 1e-15);
        assert_eq!(bonferroni(0.05, 1).unwrap(), 0.05);
        assert!((bonferroni(0.05, 3).unwrap() - 0.0166667).abs() < 1e-6);
        assert!(bonferroni(0.0, 3).is_err());
        assert!(bonferroni(0.05, 0).is_err());
        assert!(bonferroni(1.5, 2).is_err());
    }

    #[test]
    fn reporting_formats() {
        assert_eq!(format_alpha(bonferroni(0.05, 6).unwrap()), "0.008");
        assert_eq!(format_alpha(0.05), "0.050");
        assert_eq!(format_p(2.0 / 1024.0), "0.0020");
        assert_eq!(format_p(0.0004), "< 0.0010");
        assert_eq!(format_p(1.0), "1.0000");
    }

    #[test]
    fn significance_follows_alpha() {
        let r = StatResult::new(TestKind::Friedman, 1.0, 0.01, Method::Exact);
        assert!(r.significant);
        assert!(!r.with_alpha(0.008).significant);
        assert_eq!(StatResult::new(TestKind::Friedman, 1.0, 1.0 + 1e-16, Method::Exact).p, 1.0);
    }

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-11);
        assert_eq!(normal_sf(0.0), 0.5);
    }
}
