use super::{bonferroni, normal_sf, rank_with_ties, Method, PairwiseTable, Result, StatResult, StatsError, TestKind};

/// Largest tie-free sample handled by the exact distribution.
pub const EXACT_MAX_N: usize = 25;

/// `P(W+ ≤ w)` for `n` untied ranks, by counting subsets of `{1..n}` per sum.
pub fn signed_rank_exact_cdf(n: usize, w: f64) -> f64 {
    let counts = subset_sum_counts(n);
    let total = (1u64 << n) as f64;
    let below: u64 = counts.iter().enumerate().take_while(|(s, _)| *s as f64 <= w + 1e-9).map(|(_, &c)| c).sum();
    below as f64 / total
}

fn subset_sum_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// Two-sided signed-rank test of `x - y`. Zero differences are dropped.
/// Exact when the remaining |differences| are untied and `n ≤ 25`; otherwise
/// normal approximation with continuity and tie corrections.
/// The reported statistic is `W+`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatResult> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        if x.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        return Err(StatsError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranking = rank_with_ties(&abs)?;
    let w_plus: f64 = diffs.iter().zip(&ranking.ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;

    if ranking.tie_sizes.is_empty() && n <= EXACT_MAX_N {
        let counts = subset_sum_counts(n);
        let total = (1u64 << n) as f64;
        let w = w_plus.round() as usize;
        let lower: u64 = counts[..=w].iter().sum();
        let upper: u64 = counts[w..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total).min(1.0);
        return Ok(StatResult::new(TestKind::WilcoxonSignedRank, w_plus, p, Method::Exact));
    }

    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ranking.tie_sum() / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(StatResult::new(TestKind::WilcoxonSignedRank, w_plus, p, Method::LargeSample))
}

/// Signed-rank tests between every pair of paired treatments, judged at the
/// Bonferroni level `alpha / C(k, 2)`.
pub fn pairwise_wilcoxon(treatments: &[Vec<f64>], alpha: f64) -> Result<PairwiseTable> {
    let k = treatments.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    let level = bonferroni(alpha, k * (k - 1) / 2)?;
    let labels = (1..=k).map(|i| i.to_string()).collect();
    PairwiseTable::from_fn(labels, |a, b| match wilcoxon_signed_rank(&treatments[a], &treatments[b]) {
        Ok(r) => Ok(r.with_alpha(level)),
        // no differing pair at all: nothing to detect
        Err(StatsError::AllZeroDifferences) => {
            Ok(StatResult::new(TestKind::WilcoxonSignedRank, 0.0, 1.0, Method::Exact).with_alpha(level))
        }
        Err(e) => Err(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_p(ranks: &[f64], w_obs: f64) -> f64 {
        let n = ranks.len();
        let (mut lo, mut hi) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= w_obs + 1e-9 {
                lo += 1;
            }
            if w >= w_obs - 1e-9 {
                hi += 1;
            }
        }
        (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn all_positive_ten() {
        let x: Vec<f64> = (1..=10).map(|i| 100.0 + i as f64).collect();
        let y: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.statistic, 55.0);
        assert_eq!(r.p, 2.0 / 1024.0);
        assert_eq!(crate::stats::format_p(r.p), "0.0020");
    }

    #[test]
    fn symmetric_differences() {
        let x = [1.0, -1.0, 2.5, -2.5, 4.0, -4.0];
        let r = wilcoxon_signed_rank(&x, &[0.0; 6]).unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn zeros_dropped_and_errors() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 3.0);
        assert_eq!(r.p, 0.5);
        assert_eq!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(1, 2)));
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::AllZeroDifferences));
    }

    #[test]
    fn ties_use_normal_approximation() {
        let x = [1.0, 1.0, 2.0, 3.0, -1.0];
        let r = wilcoxon_signed_rank(&x, &[0.0; 5]).unwrap();
        assert_eq!(r.method, Method::LargeSample);
        // ranks |d|: 1,1,1 -> 2 ; 2 -> 4 ; 3 -> 5. W+ = 2+2+4+5 = 13, mean 7.5,
        // var = 5·6·11/24 - 24/48 = 13.25
        let z = (13.0f64 - 7.5 - 0.5) / 13.25f64.sqrt();
        assert!((r.p - 2.0 * normal_sf(z)).abs() < 1e-14);
    }

    #[test]
    fn cdf_endpoints() {
        assert_eq!(signed_rank_exact_cdf(10, 0.0), 1.0 / 1024.0);
        assert_eq!(signed_rank_exact_cdf(10, 55.0), 1.0);
        assert_eq!(signed_rank_exact_cdf(4, 4.0), 7.0 / 16.0);
    }

    #[test]
    fn exact_matches_enumeration_for_every_statistic() {
        for n in 1..=12 {
            let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
            let max = n * (n + 1) / 2;
            for w in 0..=max {
                // build signs producing W+ = w greedily from the largest rank
                let mut remaining = w;
                let mut d: Vec<f64> = Vec::new();
                for r in (1..=n).rev() {
                    if remaining >= r {
                        remaining -= r;
                        d.push(r as f64);
                    } else {
                        d.push(-(r as f64));
                    }
                }
                assert_eq!(remaining, 0);
                let got = wilcoxon_signed_rank(&d, &vec![0.0; n]).unwrap();
                assert_eq!(got.statistic, w as f64);
                assert!((got.p - brute_force_p(&ranks, w as f64)).abs() < 1e-12, "n={n} w={w}");
            }
        }
    }

    #[test]
    fn pairwise_uses_bonferroni() {
        let t: Vec<Vec<f64>> = (0..4).map(|i| (0..10).map(|j| (i * 100 + j * (i + 1)) as f64).collect()).collect();
        let table = pairwise_wilcoxon(&t, 0.05).unwrap();
        assert_eq!(table.pairs.len(), 6);
        for p in &table.pairs {
            assert_eq!(p.result.p, 2.0 / 1024.0);
            assert!((p.result.alpha - 0.05 / 6.0).abs() < 1e-15);
            assert!(p.result.significant);
        }
    }

    proptest! {
        #[test]
        fn p_in_unit_interval_and_sign_symmetric(d in prop::collection::vec(-50i32..50, 1..30)) {
            let x: Vec<f64> = d.iter().map(|&v| v as f64).collect();
            let zeros = vec![0.0; x.len()];
            if let Ok(r) = wilcoxon_signed_rank(&x, &zeros) {
                prop_assert!((0.0..=1.0).contains(&r.p));
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                let s = wilcoxon_signed_rank(&neg, &zeros).unwrap();
                prop_assert!((s.p - r.p).abs() < 1e-12);
            }
        }
    }
}
