use crate::scalar::Scalar;

use super::{IdentError, Result};

/// Log-uniform `(k, c)` lattice. Point `n` (1-based) on an axis with
/// exponents `[lo, hi]` is `10^(lo + (hi - lo)(n - 1)/(n_points - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_points: usize,
    pub k_exp: [f64; 2],
    pub c_exp: [f64; 2],
}

impl Default for GridSpec {
    /// 400 points per axis, k in [1e3, 1e7] N/m, c in [1, 1e4] N·s/m.
    fn default() -> Self {
        Self { n_points: 400, k_exp: [3.0, 7.0], c_exp: [0.0, 4.0] }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(IdentError::InvalidGrid(format!("n_points must be >= 2, got {}", self.n_points)));
        }
        for (axis, [lo, hi]) in [("k", self.k_exp), ("c", self.c_exp)] {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(IdentError::InvalidGrid(format!(
                    "{axis} exponents must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_points * self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    fn axis_value<T: Scalar>(&self, [lo, hi]: [f64; 2], n: usize) -> T {
        let exponent =
            T::lit(lo) + T::lit(hi - lo) * T::from_usize_lossy(n - 1) / T::from_usize_lossy(self.n_points - 1);
        T::lit(10.0).powf(exponent)
    }

    /// Ratio between consecutive k values.
    pub fn k_step_ratio(&self) -> f64 {
        10f64.powf((self.k_exp[1] - self.k_exp[0]) / (self.n_points - 1) as f64)
    }

    pub fn c_step_ratio(&self) -> f64 {
        10f64.powf((self.c_exp[1] - self.c_exp[0]) / (self.n_points - 1) as f64)
    }
}

/// Lattice point `(k, c)` for 1-based indices.
pub fn grid_params<T: Scalar>(n_k: usize, n_c: usize, spec: &GridSpec) -> Result<(T, T)> {
    spec.validate()?;
    for (axis, index) in [("k", n_k), ("c", n_c)] {
        if index < 1 || index > spec.n_points {
            return Err(IdentError::IndexOutOfRange { axis, index, n_points: spec.n_points });
        }
    }
    Ok((spec.axis_value(spec.k_exp, n_k), spec.axis_value(spec.c_exp, n_c)))
}
