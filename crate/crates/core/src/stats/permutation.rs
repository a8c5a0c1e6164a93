use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::friedman::BlockRanks;
use super::kruskal::h_from_ranks;
use super::steel_dwass::standardized;
use super::{at_least, check_groups, rank_with_ties, Method, PairwiseTable, Result, StatResult, StatsError, TestKind};

pub const MIN_DRAWS: usize = 1_000;
pub(crate) const DEFAULT_DRAWS: usize = 100_000;

/// Data for a permutation test, tagged by the test whose null it samples.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleData {
    /// Independent groups; draws reassign pooled values to groups.
    KruskalWallis(Vec<Vec<f64>>),
    /// `n_blocks × k`; draws permute treatments within each block.
    Friedman(Vec<Vec<f64>>),
    /// Paired samples; draws flip the sign of each nonzero difference.
    Wilcoxon { x: Vec<f64>, y: Vec<f64> },
}

/// Draw `d` uses its own ChaCha8 stream under `seed`, so the outcome does not
/// depend on how draws are scheduled across threads.
fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw as u64);
    rng
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_DRAWS {
        return Err(StatsError::TooFewDraws { got: draws, min: MIN_DRAWS });
    }
    Ok(())
}

fn estimate(hits: usize, draws: usize) -> (f64, f64) {
    let p = (1 + hits) as f64 / (draws + 1) as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

enum Null {
    Groups { ranks: Vec<f64>, sizes: Vec<usize>, tie_sum: f64 },
    Blocks(BlockRanks),
    Signs { ranks: Vec<f64>, mean: f64 },
}

impl Null {
    fn new(data: &OracleData) -> Result<Self> {
        Ok(match data {
            OracleData::KruskalWallis(groups) => {
                check_groups(groups, 2)?;
                let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
                let r = rank_with_ties(&pooled)?;
                let tie_sum = r.tie_sum();
                Null::Groups { ranks: r.ranks, sizes: groups.iter().map(Vec::len).collect(), tie_sum }
            }
            OracleData::Friedman(blocks) => Null::Blocks(BlockRanks::new(blocks)?),
            OracleData::Wilcoxon { x, y } => {
                if x.len() != y.len() {
                    return Err(StatsError::LengthMismatch(x.len(), y.len()));
                }
                let abs: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).filter(|d| *d != 0.0).collect();
                if abs.is_empty() {
                    return Err(StatsError::AllZeroDifferences);
                }
                let n = abs.len() as f64;
                Null::Signs { ranks: rank_with_ties(&abs)?.ranks, mean: n * (n + 1.0) / 4.0 }
            }
        })
    }

    /// Observed extremity: H, Friedman Q, or |W+ − E W+|.
    fn observed(&self, data: &OracleData) -> f64 {
        match (self, data) {
            (Null::Groups { ranks, sizes, tie_sum }, _) => h_from_ranks(sizes.iter().copied(), ranks, *tie_sum),
            (Null::Blocks(br), _) => br.observed(),
            (Null::Signs { ranks, mean }, OracleData::Wilcoxon { x, y }) => (w_plus(x, y, ranks) - mean).abs(),
            _ => unreachable!("null built from the same data"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, scratch: &mut Vec<f64>) -> f64 {
        match self {
            Null::Groups { ranks, sizes, tie_sum } => {
                scratch.clear();
                scratch.extend_from_slice(ranks);
                scratch.shuffle(rng);
                h_from_ranks(sizes.iter().copied(), scratch, *tie_sum)
            }
            Null::Blocks(br) => {
                scratch.clear();
                scratch.resize(br.k, 0.0);
                let mut row = Vec::with_capacity(br.k);
                for ranks in &br.ranks {
                    row.clear();
                    row.extend_from_slice(ranks);
                    row.shuffle(rng);
                    scratch.iter_mut().zip(&row).for_each(|(s, r)| *s += r);
                }
                br.statistic_from_sums(scratch)
            }
            Null::Signs { ranks, mean } => {
                let w: f64 = ranks.iter().filter(|_| rng.random::<bool>()).sum();
                (w - mean).abs()
            }
        }
    }
}

fn w_plus(x: &[f64], y: &[f64], ranks: &[f64]) -> f64 {
    let d = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0);
    d.zip(ranks).filter(|(d, _)| *d > 0.0).map(|(_, r)| r).sum()
}

/// `(p̂, mc_se)` for the observed extremity of `data` under its permutation null.
pub(crate) fn monte_carlo_count(draws: usize, seed: u64, data: &OracleData, observed: f64) -> Result<(f64, f64)> {
    check_draws(draws)?;
    let null = Null::new(data)?;
    let hits = (0..draws)
        .into_par_iter()
        .map_init(Vec::new, |scratch, d| at_least(null.draw(&mut draw_rng(seed, d), scratch), observed) as usize)
        .sum();
    Ok(estimate(hits, draws))
}

/// Monte Carlo p-value `(1 + #{T* ≥ T}) / (draws + 1)` with its standard error.
/// The reported statistic is the one the exact or large-sample test reports
/// (H, Friedman Q, or W+).
pub fn permutation_oracle(data: &OracleData, draws: usize, seed: u64) -> Result<StatResult> {
    check_draws(draws)?;
    let null = Null::new(data)?;
    let observed = null.observed(data);
    let (test, statistic) = match (&null, data) {
        (Null::Groups { .. }, _) => (TestKind::KruskalWallis, observed),
        (Null::Blocks(_), _) => (TestKind::Friedman, observed),
        (Null::Signs { ranks, .. }, OracleData::Wilcoxon { x, y }) => {
            (TestKind::WilcoxonSignedRank, w_plus(x, y, ranks))
        }
        _ => unreachable!(),
    };
    let (p, se) = monte_carlo_count(draws, seed, data, observed)?;
    Ok(StatResult::new(test, statistic, p, Method::MonteCarlo).with_mc_se(se))
}

/// Steel–Dwass by permutation: pooled values are reassigned to groups, and
/// each pair's `|t|` is compared with the largest `|t|` over all pairs of the
/// permuted data.
pub fn steel_dwass_monte_carlo(groups: &[Vec<f64>], draws: usize, seed: u64) -> Result<PairwiseTable> {
    check_groups(groups, 2)?;
    check_draws(draws)?;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    // global ranks preserve every within-pair ordering and tie
    let ranks = rank_with_ties(&pooled)?.ranks;
    let mut offsets = vec![0];
    for g in groups {
        offsets.push(offsets.last().unwrap() + g.len());
    }
    let max_abs_t = |values: &[f64], buf: &mut Vec<f64>| {
        let mut best: f64 = 0.0;
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                best = best.max(pair_t(values, &offsets, a, b, buf).abs());
            }
        }
        best
    };
    let maxima: Vec<f64> = (0..draws)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(perm, buf): &mut (Vec<f64>, Vec<f64>), d| {
                perm.clear();
                perm.extend_from_slice(&ranks);
                perm.shuffle(&mut draw_rng(seed, d));
                max_abs_t(perm, buf)
            },
        )
        .collect();
    let labels = (1..=groups.len()).map(|i| i.to_string()).collect();
    let mut buf = Vec::new();
    PairwiseTable::from_fn(labels, |a, b| {
        let t = pair_t(&ranks, &offsets, a, b, &mut buf);
        let hits = maxima.iter().filter(|&&m| at_least(m, t.abs())).count();
        let (p, se) = estimate(hits, draws);
        Ok(StatResult::new(TestKind::SteelDwassPair, t, p, Method::MonteCarlo).with_mc_se(se))
    })
}

fn pair_t(values: &[f64], offsets: &[usize], a: usize, b: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend_from_slice(&values[offsets[a]..offsets[a + 1]]);
    buf.extend_from_slice(&values[offsets[b]..offsets[b + 1]]);
    let ranks = rank_with_ties(buf).expect("finite, non-empty").ranks;
    standardized(&ranks, offsets[a + 1] - offsets[a])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{kruskal_wallis_statistic, steel_dwass};

    // Every distinct assignment of the 9 pooled values to three labelled
    // groups of 3: 9!/(3!3!3!) = 1680.
    fn kw_exact_fraction(groups: &[Vec<f64>]) -> f64 {
        let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
        let observed = kruskal_wallis_statistic(groups).unwrap();
        let (mut hits, mut total) = (0usize, 0usize);
        let idx: Vec<usize> = (0..9).collect();
        for a in combos(&idx, 3) {
            let rest: Vec<usize> = idx.iter().copied().filter(|i| !a.contains(i)).collect();
            for b in combos(&rest, 3) {
                let c: Vec<usize> = rest.iter().copied().filter(|i| !b.contains(i)).collect();
                let g: Vec<Vec<f64>> = [&a, &b, &c].iter().map(|s| s.iter().map(|&i| pooled[i]).collect()).collect();
                total += 1;
                if at_least(kruskal_wallis_statistic(&g).unwrap(), observed) {
                    hits += 1;
                }
            }
        }
        assert_eq!(total, 1680);
        hits as f64 / total as f64
    }

    fn combos(items: &[usize], r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            for mut tail in combos(&items[i + 1..], r - 1) {
                tail.insert(0, items[i]);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn kruskal_wallis_against_full_enumeration() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let exact = kw_exact_fraction(&g);
        assert!((exact - 6.0 / 1680.0).abs() < 1e-15);
        let r = permutation_oracle(&OracleData::KruskalWallis(g), 100_000, 3).unwrap();
        assert!((r.p - exact).abs() < 3.0 * r.mc_se.unwrap() + 1e-5, "{} vs {exact}", r.p);
        assert!((r.statistic - 7.2).abs() < 1e-12);
    }

    #[test]
    fn kruskal_wallis_with_ties_against_enumeration() {
        let g = vec![vec![1.0, 1.0, 2.0], vec![2.0, 3.0, 3.0], vec![1.0, 4.0, 5.0]];
        let exact = kw_exact_fraction(&g);
        let r = permutation_oracle(&OracleData::KruskalWallis(g), 50_000, 9).unwrap();
        assert!((r.p - exact).abs() < 4.0 * r.mc_se.unwrap(), "{} vs {exact}", r.p);
    }

    #[test]
    fn identical_groups_are_null() {
        let g = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        let r = permutation_oracle(&OracleData::KruskalWallis(g.clone()), 10_000, 1).unwrap();
        assert!(r.p > 1.0 - 3.0 * r.mc_se.unwrap().max(1e-4));
        let blocks = vec![vec![5.0, 5.0, 5.0]; 6];
        assert_eq!(permutation_oracle(&OracleData::Friedman(blocks), 2_000, 1).unwrap().p, 1.0);
        let sd = steel_dwass_monte_carlo(&g, 2_000, 4).unwrap();
        assert!(sd.pairs.iter().all(|p| p.result.p == 1.0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let data = OracleData::Wilcoxon { x: vec![1.0, 2.5, -0.5, 4.0, 3.0, 2.0], y: vec![0.0; 6] };
        let a = permutation_oracle(&data, 5_000, 42).unwrap();
        let b = permutation_oracle(&data, 5_000, 42).unwrap();
        assert_eq!(a, b);
        let c = permutation_oracle(&data, 5_000, 43).unwrap();
        assert_ne!(a.p, c.p);
    }

    #[test]
    fn wilcoxon_sign_flips_match_exact() {
        let x = [1.1, 2.3, -0.4, 3.7, 5.2, -1.9, 2.8, 4.4];
        let exact = crate::stats::wilcoxon_signed_rank(&x, &[0.0; 8]).unwrap();
        let mc = permutation_oracle(&OracleData::Wilcoxon { x: x.to_vec(), y: vec![0.0; 8] }, 100_000, 5).unwrap();
        assert!((mc.p - exact.p).abs() < 3.0 * mc.mc_se.unwrap(), "{} vs {}", mc.p, exact.p);
        assert_eq!(mc.statistic, exact.statistic);
    }

    #[test]
    fn friedman_within_block_shuffles_match_exact() {
        let blocks = vec![
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 2.0],
            vec![2.0, 1.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![3.0, 1.0, 2.0],
        ];
        let exact = crate::stats::friedman(&blocks).unwrap();
        let mc = permutation_oracle(&OracleData::Friedman(blocks), 100_000, 8).unwrap();
        assert!((mc.p - exact.p).abs() < 3.0 * mc.mc_se.unwrap(), "{} vs {}", mc.p, exact.p);
    }

    #[test]
    fn steel_dwass_permutation_orders_like_asymptotic() {
        let g = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![3.0, 4.0, 5.0, 6.0, 7.0], vec![8.0, 9.0, 10.0, 11.0, 12.0]];
        let mc = steel_dwass_monte_carlo(&g, 20_000, 2).unwrap();
        let asym = steel_dwass(&g).unwrap();
        for (m, a) in mc.pairs.iter().zip(&asym.pairs) {
            assert_eq!(m.result.statistic, a.result.statistic);
        }
        assert!(mc.get(0, 2).unwrap().p < mc.get(0, 1).unwrap().p);
    }

    #[test]
    fn too_few_draws() {
        let g = OracleData::KruskalWallis(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(permutation_oracle(&g, 999, 0), Err(StatsError::TooFewDraws { got: 999, min: 1000 }));
    }
}
