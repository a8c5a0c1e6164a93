use super::{check_groups, normal_cdf, rank_with_ties, Method, PairwiseTable, Result, StatResult, TestKind};

/// Standardized rank sum of `x` within the pooled pair, tie-corrected.
/// Zero when the pair has no rank variance (all values equal).
pub fn pair_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranking = rank_with_ties(&pooled)?;
    Ok(standardized(&ranking.ranks, x.len()))
}

pub(crate) fn standardized(ranks: &[f64], n1: usize) -> f64 {
    let n = ranks.len() as f64;
    let (a, b) = (n1 as f64, n - n1 as f64);
    let r: f64 = ranks[..n1].iter().sum();
    let sum_sq: f64 = ranks.iter().map(|r| r * r).sum();
    let var = a * b / (n * (n - 1.0)) * (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0);
    if var <= 1e-12 * n * n {
        return 0.0;
    }
    (r - a * (n + 1.0) / 2.0) / var.sqrt()
}

const QUAD_LO: f64 = -9.0;
const QUAD_HI: f64 = 9.0;
const QUAD_PANELS: usize = 4000;

/// Upper tail `P(Q ≥ q)` of the studentized range of `k` standard normals
/// (infinite degrees of freedom).
///
/// Integrates `k φ(z) [Φ(z)^(k-1) - (Φ(z) - Φ(z-q))^(k-1)]` by composite
/// Simpson; written as a difference so small tails keep their relative accuracy.
pub fn ptukey_upper(q: f64, k: usize) -> f64 {
    assert!(k >= 2, "studentized range needs k >= 2");
    if !(q > 0.0) {
        return 1.0;
    }
    if q.is_infinite() {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let f = |z: f64| {
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let upper = normal_cdf(z);
        let lower = normal_cdf(z - q);
        phi * (upper.powi(km1) - (upper - lower).powi(km1))
    };
    let h = (QUAD_HI - QUAD_LO) / QUAD_PANELS as f64;
    let mut acc = f(QUAD_LO) + f(QUAD_HI);
    for i in 1..QUAD_PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(QUAD_LO + h * i as f64);
    }
    (k as f64 * acc * h / 3.0).clamp(0.0, 1.0)
}

/// All pairwise Steel–Dwass comparisons. Each pair's p is the
/// studentized-range tail at `√2 |t|` for the full number of groups.
pub fn steel_dwass(groups: &[Vec<f64>]) -> Result<PairwiseTable> {
    check_groups(groups, 2)?;
    let k = groups.len();
    let labels = (1..=k).map(|i| i.to_string()).collect();
    PairwiseTable::from_fn(labels, |a, b| {
        let t = pair_statistic(&groups[a], &groups[b])?;
        let p = ptukey_upper(std::f64::consts::SQRT_2 * t.abs(), k);
        Ok(StatResult::new(TestKind::SteelDwassPair, t, p, Method::LargeSample))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_sf;
    use proptest::prelude::*;

    #[test]
    fn two_group_range_is_scaled_normal() {
        // Q for k = 2 is √2 |Z|, so P(Q ≥ q) = 2 (1 - Φ(q/√2))
        for &q in &[0.1, 0.5, 1.0, 2.77, 4.0, 6.0] {
            let exact = 2.0 * normal_sf(q / std::f64::consts::SQRT_2);
            assert!((ptukey_upper(q, 2) - exact).abs() < 1e-10, "q = {q}");
        }
    }

    // Published upper 5% and 1% points of the studentized range at df = ∞.
    #[test]
    fn tabulated_quantiles() {
        for &(k, q05, q01) in &[(3, 3.314, 4.120), (4, 3.633, 4.403), (5, 3.858, 4.603), (10, 4.474, 5.157)] {
            assert!((ptukey_upper(q05, k) - 0.05).abs() < 3e-4, "k = {k}: {}", ptukey_upper(q05, k));
            assert!((ptukey_upper(q01, k) - 0.01).abs() < 1e-4, "k = {k}: {}", ptukey_upper(q01, k));
        }
    }

    // Monte Carlo check of the k = 3 integral itself.
    #[test]
    fn range_of_three_normals_by_simulation() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let q = 2.5;
        let hits = (0..n)
            .filter(|_| {
                let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let range = z.iter().cloned().fold(f64::MIN, f64::max) - z.iter().cloned().fold(f64::MAX, f64::min);
                range >= q
            })
            .count();
        let p_hat = hits as f64 / n as f64;
        let se = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
        assert!((ptukey_upper(q, 3) - p_hat).abs() < 4.0 * se);
    }

    #[test]
    fn tail_is_monotone() {
        let mut prev = 1.0;
        for i in 1..80 {
            let p = ptukey_upper(i as f64 * 0.1, 4);
            assert!(p <= prev);
            prev = p;
        }
        assert_eq!(ptukey_upper(0.0, 3), 1.0);
    }

    #[test]
    fn identical_pair_among_three() {
        let g = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![10.0, 11.0, 12.0, 13.0, 14.0]];
        let t = steel_dwass(&g).unwrap();
        let r = t.get(0, 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p, 1.0);
        assert_eq!(t.pairs.len(), 3);
    }

    #[test]
    fn fully_separated_ten_vs_ten() {
        let g: Vec<Vec<f64>> = (0..3).map(|i| (0..10).map(|j| (i * 10 + j) as f64).collect()).collect();
        let t = steel_dwass(&g).unwrap();
        let r = t.get(0, 2).unwrap();
        assert!(r.p < 0.001, "{}", r.p);
        // R = 55, E = 105, V = 175 for 10 vs 10 without ties
        assert!((r.statistic + 50.0 / 175f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tie_corrected_variance() {
        // pooled [1,1 | 1,2]: ranks [2,2 | 2,4], Σr² = 28, V = 4/12 (28 - 25) = 1
        assert!((pair_statistic(&[1.0, 1.0], &[1.0, 2.0]).unwrap() - (4.0 - 5.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn relabeling_permutes_pairs(g in prop::collection::vec(prop::collection::vec(-9i32..9, 2..6), 3..5)) {
            let groups: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect();
            let base = steel_dwass(&groups).unwrap();
            let mut rev = groups.clone();
            rev.reverse();
            let flipped = steel_dwass(&rev).unwrap();
            let k = groups.len();
            for p in &base.pairs {
                let q = flipped.get(k - 1 - p.a, k - 1 - p.b).unwrap();
                prop_assert!((q.p - p.result.p).abs() < 1e-12);
                prop_assert!((q.statistic.abs() - p.result.statistic.abs()).abs() < 1e-12);
            }
        }
    }
}
