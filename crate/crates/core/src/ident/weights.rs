use crate::scalar::Scalar;
use crate::signal::PeakList;

use super::{IdentError, Result};

/// Weight added per newton of |F| at each post-peak extremum.
pub const WEIGHT_GAIN: f64 = 0.05;

/// Base of the weight update at an extremum `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// `w(s) = w(s - 1) + 0.05 |F(s)|`: adjacent extrema compound.
    #[default]
    Compounding,
    /// `w(s) = 1 + 0.05 |F(s)|`.
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Σ w (F_meas - F_sim)²
    #[default]
    Squared,
    /// Σ w |F_meas - F_sim|
    Absolute,
}

/// Per-sample residual weights over a measured series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub weights: Vec<T>,
    pub first_positive: usize,
    pub peak_steps: Vec<usize>,
}

/// Unit weights up to and including `s_p`; every later extremum raises its
/// own weight by `0.05 |F|`. Extrema are visited in increasing order so the
/// compounding mode reads already-updated neighbours.
pub fn build_weights<T: Scalar>(measured: &[T], peaks: &PeakList<T>, mode: WeightMode) -> Result<WeightVector<T>> {
    let first_positive = peaks.first_positive_peak()?;
    if let Some(index) = peaks.indices().chain(std::iter::once(first_positive)).find(|&i| i >= measured.len()) {
        return Err(IdentError::PeakMismatch { index, len: measured.len() });
    }
    let gain = T::lit(WEIGHT_GAIN);
    let mut weights = vec![T::one(); measured.len()];
    let mut peak_steps = Vec::new();
    for peak in peaks.after_first_positive() {
        let s = peak.index;
        let base = match mode {
            WeightMode::Compounding => weights[s - 1],
            WeightMode::Reset => T::one(),
        };
        weights[s] = base + gain * measured[s].abs();
        peak_steps.push(s);
    }
    Ok(WeightVector { weights, first_positive, peak_steps })
}

/// Weighted residual between equally long measured and simulated windows.
pub fn weighted_error<T: Scalar>(measured: &[T], simulated: &[T], weights: &[T], mode: ErrorMode) -> Result<T> {
    if measured.len() != simulated.len() || measured.len() != weights.len() {
        return Err(IdentError::LengthMismatch {
            measured: measured.len(),
            simulated: simulated.len(),
            weights: weights.len(),
        });
    }
    let terms = measured.iter().zip(simulated).zip(weights);
    Ok(match mode {
        ErrorMode::Squared => terms.map(|((&m, &s), &w)| w * (m - s) * (m - s)).sum(),
        ErrorMode::Absolute => terms.map(|((&m, &s), &w)| w * (m - s).abs()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::detect_peaks_in;
    use proptest::prelude::*;

    fn weights_for(values: &[f64], mode: WeightMode) -> WeightVector<f64> {
        let peaks = detect_peaks_in(values, 0.0).unwrap();
        build_weights(values, &peaks, mode).unwrap()
    }

    #[test]
    fn no_post_peak_extrema_means_unit_weights() {
        let v = [0.0, 5.0, 10.0, 6.0, 3.0, 1.0, 0.0];
        let w = weights_for(&v, WeightMode::Compounding);
        assert_eq!(w.first_positive, 2);
        assert!(w.weights.iter().all(|&x| x == 1.0));
        assert!(w.peak_steps.is_empty());
    }

    #[test]
    fn single_negative_extremum() {
        let v = [0.0, 20.0, 0.0, -10.0, 0.0, 0.0];
        let w = weights_for(&v, WeightMode::Compounding);
        assert_eq!(w.peak_steps, vec![3]);
        assert_eq!(w.weights, vec![1.0, 1.0, 1.0, 1.5, 1.0, 1.0]);
    }

    // Adjacent extrema at s and s+1 with |F| = 10: literal recursion gives
    // w(s) = 1 + 0.5 = 1.5 and w(s+1) = w(s) + 0.5 = 2.0.
    #[test]
    fn adjacent_extrema_compound() {
        let v = [0.0, 20.0, 0.0, -10.0, 10.0, 0.0];
        let w = weights_for(&v, WeightMode::Compounding);
        assert_eq!(w.peak_steps, vec![3, 4]);
        assert_eq!(w.weights[3], 1.5);
        assert_eq!(w.weights[4], 2.0);
        let r = weights_for(&v, WeightMode::Reset);
        assert_eq!(r.weights[4], 1.5);
    }

    #[test]
    fn peak_outside_series_is_mismatch() {
        let long = [0.0, 20.0, 0.0, -10.0, 0.0, 0.0];
        let peaks = detect_peaks_in(&long, 0.0).unwrap();
        assert!(matches!(
            build_weights(&long[..3], &peaks, WeightMode::Compounding),
            Err(IdentError::PeakMismatch { index: 3, len: 3 })
        ));
    }

    #[test]
    fn error_definitions() {
        let m = [1.0, 2.0, 3.0];
        assert_eq!(weighted_error(&m, &m, &[1.0; 3], ErrorMode::Squared).unwrap(), 0.0);
        let s = [1.5, 2.5, 3.5];
        assert_eq!(weighted_error(&m, &s, &[1.0; 3], ErrorMode::Squared).unwrap(), 3.0 * 0.25);
        assert_eq!(weighted_error(&m, &s, &[2.0; 3], ErrorMode::Squared).unwrap(), 1.5);
        assert_eq!(weighted_error(&m, &s, &[1.0; 3], ErrorMode::Absolute).unwrap(), 1.5);
        assert!(matches!(
            weighted_error(&m, &s[..2], &[1.0; 3], ErrorMode::Squared),
            Err(IdentError::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn weights_at_least_one_and_unit_before_peak(v in prop::collection::vec(-30.0f64..30.0, 5..80)) {
            let peaks = detect_peaks_in(&v, 0.0).unwrap();
            if let Ok(w) = build_weights(&v, &peaks, WeightMode::Compounding) {
                prop_assert!(w.weights.iter().all(|&x| x >= 1.0));
                prop_assert!(w.weights[..=w.first_positive].iter().all(|&x| x == 1.0));
                for (s, &x) in w.weights.iter().enumerate() {
                    if !w.peak_steps.contains(&s) {
                        prop_assert_eq!(x, 1.0);
                    }
                }
            }
        }

        #[test]
        fn weight_mass_grows_with_peak_magnitude(v in prop::collection::vec(-30.0f64..30.0, 5..80), gain in 1.0f64..3.0) {
            let peaks = detect_peaks_in(&v, 0.0).unwrap();
            if let Ok(w) = build_weights(&v, &peaks, WeightMode::Compounding) {
                // scaling the post-peak samples scales every |F(s_pm)| up
                let mut louder = v.clone();
                louder[w.first_positive + 1..].iter_mut().for_each(|x| *x *= gain);
                let w2 = build_weights(&louder, &peaks, WeightMode::Compounding).unwrap();
                let mass = |w: &WeightVector<f64>| w.weights.iter().sum::<f64>();
                prop_assert!(mass(&w2) >= mass(&w));
                // and dropping the last post-peak extremum never adds mass
                if let Some(&last) = w.peak_steps.last() {
                    let mut fewer = v.clone();
                    fewer[last] = fewer[last - 1];
                    let p2 = detect_peaks_in(&fewer, 0.0).unwrap();
                    if p2.first_positive_peak().ok() == Some(w.first_positive) && p2.len() < peaks.len() {
                        let w3 = build_weights(&fewer, &p2, WeightMode::Compounding).unwrap();
                        prop_assert!(mass(&w3) <= mass(&w) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn uniform_scaling_preserves_argmin(
            m in prop::collection::vec(-5.0f64..5.0, 8),
            cands in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 8), 2..6),
            w in prop::collection::vec(1.0f64..3.0, 8),
            scale in 0.1f64..10.0,
        ) {
            let scaled: Vec<f64> = w.iter().map(|x| x * scale).collect();
            let argmin = |w: &[f64]| {
                cands.iter().enumerate()
                    .map(|(i, c)| (weighted_error(&m, c, w, ErrorMode::Squared).unwrap(), i))
                    .min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1
            };
            prop_assert_eq!(argmin(&w), argmin(&scaled));
        }
    }
}
