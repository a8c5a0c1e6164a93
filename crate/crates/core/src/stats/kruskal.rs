use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{check_groups, rank_with_ties, Method, Result, StatResult, TestKind};

/// Tie-corrected H. Returns 0 when every pooled value is identical.
pub fn kruskal_wallis_statistic(groups: &[Vec<f64>]) -> Result<f64> {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let ranking = rank_with_ties(&pooled)?;
    Ok(h_from_ranks(groups.iter().map(Vec::len), &ranking.ranks, ranking.tie_sum()))
}

pub(crate) fn h_from_ranks(sizes: impl Iterator<Item = usize>, ranks: &[f64], tie_sum: f64) -> f64 {
    let n = ranks.len() as f64;
    let correction = 1.0 - tie_sum / (n * n * n - n);
    if correction <= 0.0 {
        return 0.0;
    }
    let mut start = 0;
    let mut acc = 0.0;
    for len in sizes {
        let r: f64 = ranks[start..start + len].iter().sum();
        acc += r * r / len as f64;
        start += len;
    }
    let h = (12.0 / (n * (n + 1.0)) * acc - 3.0 * (n + 1.0)) / correction;
    h.max(0.0)
}

/// H with the chi-square (groups − 1 df) upper tail.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<StatResult> {
    check_groups(groups, 2)?;
    let h = kruskal_wallis_statistic(groups)?;
    let df = (groups.len() - 1) as f64;
    let p = if h == 0.0 { 1.0 } else { ChiSquared::new(df).expect("df >= 1").sf(h) };
    Ok(StatResult::new(TestKind::KruskalWallis, h, p, Method::LargeSample))
}
