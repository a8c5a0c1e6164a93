use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::permutation::{monte_carlo_count, DEFAULT_DRAWS};
use super::{at_least, rank_with_ties, Method, Result, StatResult, StatsError, TestKind};

/// Largest number of within-block arrangements, `(k!)^n`, enumerated exactly.
pub const EXACT_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FriedmanMethod {
    /// Exact when `(k!)^n ≤ 10⁶`, otherwise Monte Carlo with 10⁵ draws (seed 0).
    #[default]
    Auto,
    Exact,
    /// Chi-square with `k − 1` degrees of freedom.
    LargeSample,
    MonteCarlo {
        draws: usize,
        seed: u64,
    },
}

pub(crate) struct BlockRanks {
    pub ranks: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    denominator: f64,
}

impl BlockRanks {
    pub fn new(blocks: &[Vec<f64>]) -> Result<Self> {
        let n = blocks.len();
        if n < 2 {
            return Err(StatsError::TooFewObservations { group: 0, len: n, min: 2 });
        }
        let k = blocks[0].len();
        if k < 2 {
            return Err(StatsError::TooFewGroups(k));
        }
        let mut ranks = Vec::with_capacity(n);
        let mut tie_sum = 0.0;
        for (block, row) in blocks.iter().enumerate() {
            if row.len() != k {
                return Err(StatsError::IncompleteBlocks { block, expected: k, got: row.len() });
            }
            let r = rank_with_ties(row)?;
            tie_sum += r.tie_sum();
            ranks.push(r.ranks);
        }
        let kf = k as f64;
        let denominator = 1.0 - tie_sum / (n as f64 * (kf * kf * kf - kf));
        Ok(Self { ranks, n, k, denominator })
    }

    pub fn statistic_from_sums(&self, sums: &[f64]) -> f64 {
        if self.denominator <= 1e-12 {
            return 0.0;
        }
        let (n, k) = (self.n as f64, self.k as f64);
        let ss: f64 = sums.iter().map(|r| r * r).sum();
        ((12.0 / (n * k * (k + 1.0)) * ss - 3.0 * n * (k + 1.0)) / self.denominator).max(0.0)
    }

    pub fn observed(&self) -> f64 {
        let mut sums = vec![0.0; self.k];
        for row in &self.ranks {
            sums.iter_mut().zip(row).for_each(|(s, r)| *s += r);
        }
        self.statistic_from_sums(&sums)
    }

    fn arrangements(&self) -> f64 {
        (1..=self.k).map(|i| i as f64).product::<f64>().powi(self.n as i32)
    }
}

/// Tie-corrected Friedman chi-square statistic for an `n_blocks × k` matrix.
pub fn friedman_statistic(blocks: &[Vec<f64>]) -> Result<f64> {
    Ok(BlockRanks::new(blocks)?.observed())
}

pub fn friedman(blocks: &[Vec<f64>]) -> Result<StatResult> {
    friedman_with(blocks, FriedmanMethod::Auto)
}

pub fn friedman_with(blocks: &[Vec<f64>], method: FriedmanMethod) -> Result<StatResult> {
    let br = BlockRanks::new(blocks)?;
    let q = br.observed();
    let method = match method {
        FriedmanMethod::Auto if br.arrangements() <= EXACT_LIMIT => FriedmanMethod::Exact,
        FriedmanMethod::Auto => FriedmanMethod::MonteCarlo { draws: DEFAULT_DRAWS, seed: 0 },
        m => m,
    };
    let result = |p, m| StatResult::new(TestKind::Friedman, q, p, m);
    if q == 0.0 {
        let m = match method {
            FriedmanMethod::Exact => Method::Exact,
            FriedmanMethod::LargeSample => Method::LargeSample,
            _ => Method::MonteCarlo,
        };
        return Ok(result(1.0, m));
    }
    Ok(match method {
        FriedmanMethod::Exact => {
            if br.arrangements() > EXACT_LIMIT {
                return Err(StatsError::EnumerationTooLarge(br.arrangements()));
            }
            result(exact_p(&br, q), Method::Exact)
        }
        FriedmanMethod::LargeSample => {
            result(ChiSquared::new((br.k - 1) as f64).expect("k >= 2").sf(q), Method::LargeSample)
        }
        FriedmanMethod::MonteCarlo { draws, seed } => {
            let (p, se) = monte_carlo_count(draws, seed, &super::OracleData::Friedman(blocks.to_vec()), q)?;
            result(p, Method::MonteCarlo).with_mc_se(se)
        }
        FriedmanMethod::Auto => unreachable!(),
    })
}

/// Fraction of all within-block rank arrangements whose statistic is at
/// least `observed`.
fn exact_p(br: &BlockRanks, observed: f64) -> f64 {
    let perms: Vec<Vec<Vec<f64>>> = br.ranks.iter().map(|r| permutations(r)).collect();
    let mut sums = vec![0.0; br.k];
    let mut hits = 0u64;
    let mut total = 0u64;
    walk(br, &perms, 0, &mut sums, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

fn walk(
    br: &BlockRanks,
    perms: &[Vec<Vec<f64>>],
    block: usize,
    sums: &mut [f64],
    observed: f64,
    hits: &mut u64,
    total: &mut u64,
) {
    if block == perms.len() {
        *total += 1;
        if at_least(br.statistic_from_sums(sums), observed) {
            *hits += 1;
        }
        return;
    }
    for p in &perms[block] {
        sums.iter_mut().zip(p).for_each(|(s, r)| *s += r);
        walk(br, perms, block + 1, sums, observed, hits, total);
        sums.iter_mut().zip(p).for_each(|(s, r)| *s -= r);
    }
}

/// Every ordering of `items` (duplicates kept, so each of the `k!` is equally weighted).
fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_orderings_reach_maximum() {
        let blocks: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 10.0 + i as f64, 30.0 + i as f64]).collect();
        assert!((friedman_statistic(&blocks).unwrap() - 20.0).abs() < 1e-12);
        let r = friedman(&blocks).unwrap();
        // (3!)^10 > 10⁶, so Auto falls back to Monte Carlo
        assert_eq!(r.method, Method::MonteCarlo);
        assert!(r.p < 0.001);
        let ls = friedman_with(&blocks, FriedmanMethod::LargeSample).unwrap();
        assert!((ls.p - (-10.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tied_blocks_give_zero() {
        let blocks = vec![vec![2.0, 2.0, 2.0]; 5];
        let r = friedman(&blocks).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
    }

    #[test]
    fn exact_small_design_against_large_sample() {
        let blocks = vec![vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0], vec![2.0, 1.0, 3.0], vec![1.0, 2.0, 3.0]];
        let exact = friedman(&blocks).unwrap();
        assert_eq!(exact.method, Method::Exact);
        let ls = friedman_with(&blocks, FriedmanMethod::LargeSample).unwrap();
        assert!((exact.p - ls.p).abs() < 0.05, "{} vs {}", exact.p, ls.p);
        // sums 5, 8, 11: Q = 12/48 · 210 - 48 = 4.5
        assert!((exact.statistic - 4.5).abs() < 1e-12);
    }

    // k = 2: Q counts sign disagreements, so the exact p is a binomial tail.
    #[test]
    fn two_treatments_reduce_to_sign_test() {
        let blocks: Vec<Vec<f64>> = (0..8).map(|i| if i < 7 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }).collect();
        let r = friedman(&blocks).unwrap();
        let tail = (1.0 + 8.0 + 1.0 + 8.0) / 256.0; // P(X ≤ 1) + P(X ≥ 7), X ~ Bin(8, 1/2)
        assert!((r.p - tail).abs() < 1e-15, "{}", r.p);
    }

    #[test]
    fn errors() {
        assert!(matches!(friedman(&[vec![1.0, 2.0]]), Err(StatsError::TooFewObservations { .. })));
        assert!(matches!(friedman(&[vec![1.0, 2.0], vec![1.0]]), Err(StatsError::IncompleteBlocks { block: 1, .. })));
        let big: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0, 2.0, 3.0]).collect();
        assert!(matches!(friedman_with(&big, FriedmanMethod::Exact), Err(StatsError::EnumerationTooLarge(_))));
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(&[1.0, 2.0, 3.0]).len(), 6);
        assert_eq!(permutations(&[1.5, 1.5]).len(), 2);
    }
}
