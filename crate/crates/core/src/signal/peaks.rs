use crate::scalar::Scalar;

use super::{Result, SignalError, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A local extremum. `Positive` marks a maximum, `Negative` a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub index: usize,
    pub polarity: Polarity,
    pub prominence: T,
}

/// Interior extrema of a series in increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakList<T> {
    peaks: Vec<Peak<T>>,
    first_positive: Option<usize>,
}

impl<T: Scalar> PeakList<T> {
    pub fn peaks(&self) -> &[Peak<T>] {
        &self.peaks
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.peaks.iter().map(|p| p.index)
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    /// `s_p`: index of the first maximum whose sample value is positive.
    pub fn first_positive_peak(&self) -> Result<usize> {
        self.first_positive.ok_or(SignalError::NoPositivePeak { trial: None })
    }

    /// Peaks strictly after `s_p`.
    pub fn after_first_positive(&self) -> &[Peak<T>] {
        match self.first_positive {
            Some(sp) => {
                let start = self.peaks.partition_point(|p| p.index <= sp);
                &self.peaks[start..]
            }
            None => &[],
        }
    }

    /// Keeps only peaks with prominence at least `min_prominence`, recomputing `s_p`.
    pub fn filtered(&self, min_prominence: T, values: &[T]) -> Self {
        let peaks: Vec<_> = self.peaks.iter().copied().filter(|p| p.prominence >= min_prominence).collect();
        let first_positive = first_positive_of(&peaks, values);
        Self { peaks, first_positive }
    }

    /// Re-anchors `s_p` at `index`, which must be a listed maximum with a
    /// positive sample value.
    pub fn anchored_at(mut self, index: usize, values: &[T]) -> Result<Self> {
        let ok = self.peaks.iter().any(|p| {
            p.index == index && p.polarity == Polarity::Positive && values.get(index).is_some_and(|v| *v > T::zero())
        });
        if !ok {
            return Err(SignalError::NoPositivePeak { trial: None });
        }
        self.first_positive = Some(index);
        Ok(self)
    }
}

fn first_positive_of<T: Scalar>(peaks: &[Peak<T>], values: &[T]) -> Option<usize> {
    peaks.iter().find(|p| p.polarity == Polarity::Positive && values[p.index] > T::zero()).map(|p| p.index)
}

/// Finds interior local extrema by sign change of the first difference.
/// A plateau counts once, at its first sample. Extrema with prominence
/// below `min_prominence` are dropped.
pub fn detect_peaks<T: Scalar>(series: &TimeSeries<T>, min_prominence: T) -> Result<PeakList<T>> {
    detect_peaks_in(series.values(), min_prominence)
}

pub(crate) fn detect_peaks_in<T: Scalar>(values: &[T], min_prominence: T) -> Result<PeakList<T>> {
    if values.len() < 3 {
        return Err(SignalError::TooShort { len: values.len(), min: 3 });
    }
    if !(min_prominence >= T::zero()) {
        return Err(SignalError::InvalidSeries("min_prominence must be >= 0".into()));
    }
    let n = values.len();
    let mut peaks = Vec::new();
    let mut start = 1;
    while start < n - 1 {
        let v = values[start];
        let mut end = start;
        while end + 1 < n && values[end + 1] == v {
            end += 1;
        }
        if end + 1 >= n {
            break;
        }
        let left = values[start - 1];
        let right = values[end + 1];
        let polarity = if left < v && right < v {
            Some(Polarity::Positive)
        } else if left > v && right > v {
            Some(Polarity::Negative)
        } else {
            None
        };
        if let Some(polarity) = polarity {
            let prominence = prominence(values, start, end, polarity);
            if prominence >= min_prominence {
                peaks.push(Peak { index: start, polarity, prominence });
            }
        }
        start = end + 1;
    }
    let first_positive = first_positive_of(&peaks, values);
    Ok(PeakList { peaks, first_positive })
}

/// `s_p` without building the full list: first maximum with a positive value
/// and prominence at least `min_prominence`.
pub(crate) fn first_positive_peak_in<T: Scalar>(values: &[T], min_prominence: T) -> Option<usize> {
    let n = values.len();
    let mut start = 1;
    while start + 1 < n {
        let v = values[start];
        let mut end = start;
        while end + 1 < n && values[end + 1] == v {
            end += 1;
        }
        if end + 1 >= n {
            return None;
        }
        if v > T::zero()
            && values[start - 1] < v
            && values[end + 1] < v
            && prominence(values, start, end, Polarity::Positive) >= min_prominence
        {
            return Some(start);
        }
        start = end + 1;
    }
    None
}

/// Topographic prominence of the plateau `[start, end]`: its height above the
/// higher of the two lowest points reached before a strictly higher sample
/// (or the series boundary) on either side. Minima use the mirrored rule.
fn prominence<T: Scalar>(values: &[T], start: usize, end: usize, polarity: Polarity) -> T {
    let sign = match polarity {
        Polarity::Positive => T::one(),
        Polarity::Negative => -T::one(),
    };
    let v = sign * values[start];
    let mut left_base = v;
    for &x in values[..start].iter().rev() {
        let x = sign * x;
        if x > v {
            break;
        }
        left_base = left_base.min(x);
    }
    let mut right_base = v;
    for &x in &values[end + 1..] {
        let x = sign * x;
        if x > v {
            break;
        }
        right_base = right_base.min(x);
    }
    v - left_base.max(right_base)
}
