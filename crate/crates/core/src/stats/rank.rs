use super::{Result, StatsError};

/// Average ranks (1-based) and the sizes of every tie group larger than one.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub ranks: Vec<f64>,
    pub tie_sizes: Vec<usize>,
}

impl Ranking {
    /// `Σ (t³ - t)` over tie groups.
    pub fn tie_sum(&self) -> f64 {
        self.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum()
    }
}

pub fn rank_with_ties(values: &[f64]) -> Result<Ranking> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteInput(i));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        if end - start > 1 {
            tie_sizes.push(end - start);
        }
        start = end;
    }
    Ok(Ranking { ranks, tie_sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]).unwrap().ranks, vec![1.0, 2.0, 3.0]);
        let r = rank_with_ties(&[5.0, 5.0, 9.0]).unwrap();
        assert_eq!(r.ranks, vec![1.5, 1.5, 3.0]);
        assert_eq!(r.tie_sizes, vec![2]);
        assert_eq!(rank_with_ties(&[7.0; 4]).unwrap().ranks, vec![2.5; 4]);
        assert_eq!(rank_with_ties(&[3.0, -1.0, 3.0, 0.0]).unwrap().ranks, vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(rank_with_ties(&[]), Err(StatsError::EmptyInput));
        assert_eq!(rank_with_ties(&[1.0, f64::NAN]), Err(StatsError::NonFiniteInput(1)));
    }

    proptest! {
        #[test]
        fn ranks_sum_to_triangular(v in prop::collection::vec(-5i32..5, 1..40)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let r = rank_with_ties(&v).unwrap();
            let n = v.len() as f64;
            prop_assert_eq!(r.ranks.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
            // brute-force: rank = #less + (#equal + 1) / 2
            for (i, &x) in v.iter().enumerate() {
                let less = v.iter().filter(|&&y| y < x).count() as f64;
                let equal = v.iter().filter(|&&y| y == x).count() as f64;
                prop_assert_eq!(r.ranks[i], less + (equal + 1.0) / 2.0);
            }
        }
    }
}
