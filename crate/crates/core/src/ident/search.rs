use std::cmp::Ordering;

use rayon::prelude::*;

use crate::scalar::{total_cmp, Scalar};
use crate::signal::{detect_peaks_in, first_positive_peak_in, SignalError, TrialRecord};
use crate::smd::{resample, sample_response_into, simulate_response, SmdParams, SolverConfig, SolverMethod};

use super::{
    build_weights, damping_ratio, grid_params, weighted_error, Evaluator, GridSpec, IdentConfig, IdentError,
    IdentResult, ModelConstants, Result,
};

/// One evaluated lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<T> {
    pub error: T,
    pub zeta: T,
    pub k: T,
    pub c: T,
    pub grid_index: (usize, usize),
}

fn rank<T: Scalar>(a: &Candidate<T>, b: &Candidate<T>) -> Ordering {
    total_cmp(a.error, b.error)
        .then_with(|| total_cmp(a.zeta, b.zeta))
        .then_with(|| total_cmp(a.k, b.k))
        .then_with(|| a.grid_index.cmp(&b.grid_index))
}

fn better<T: Scalar>(a: Candidate<T>, b: Candidate<T>) -> Candidate<T> {
    if rank(&b, &a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Minimum under (error, ζ, k). The order is total, so the result does not
/// depend on iteration order.
pub fn select_best<T: Scalar>(candidates: impl IntoIterator<Item = Candidate<T>>) -> Option<Candidate<T>> {
    candidates.into_iter().reduce(better)
}

/// Everything about the measured trial that the lattice search reuses.
struct Prepared<T> {
    dt: T,
    drop_height: T,
    first_peak: usize,
    onset: usize,
    measured: Vec<T>,
    weights: Vec<T>,
    search_samples: usize,
    prominence_fraction: T,
}

impl<T: Scalar> Prepared<T> {
    fn new(trial: &TrialRecord<T>, model: &ModelConstants<T>, config: &IdentConfig<T>) -> Result<Self> {
        validate_config(model, config)?;
        let values = trial.force.values();
        let dt = trial.force.dt();
        let scale = max_abs(values);
        let first_peak = first_positive_peak_in(values, config.peak_prominence_fraction * scale)
            .ok_or(SignalError::NoPositivePeak { trial: Some(trial.trial_index) })?;
        let peaks = detect_peaks_in(values, config.weight_prominence)?
            .anchored_at(first_peak, values)
            .map_err(|_| SignalError::NoPositivePeak { trial: Some(trial.trial_index) })?;
        let weights = build_weights(values, &peaks, config.weight_mode)?;

        let threshold = config.onset_fraction * values[first_peak];
        let mut onset = first_peak;
        while onset > 0 && values[onset - 1] > threshold {
            onset -= 1;
        }
        let len = samples(config.window, dt).max(1);
        let end = (onset + len).min(values.len());
        Ok(Self {
            dt,
            drop_height: T::lit(trial.condition.drop_height_m()),
            first_peak,
            onset,
            measured: values[onset..end].to_vec(),
            weights: weights.weights[onset..end].to_vec(),
            search_samples: samples(config.peak_search, dt).max(2),
            prominence_fraction: config.peak_prominence_fraction,
        })
    }

    fn sim_len(&self) -> usize {
        self.search_samples + self.measured.len()
    }

    /// Simulated samples over the comparison window, registered so that the
    /// simulated first positive peak lands on the measured one. `None` when
    /// the simulation shows no usable peak within the search horizon.
    fn register(&self, sim: &[T], out: &mut Vec<T>) -> Option<()> {
        let peak = first_positive_peak_in(sim, self.prominence_fraction * max_abs(sim))?;
        if peak >= self.search_samples {
            return None;
        }
        out.clear();
        let shift = peak as isize - self.first_peak as isize;
        out.extend((0..self.measured.len()).map(|i| {
            let j = (self.onset + i) as isize + shift;
            // before simulated contact the model transmits no force
            if j < 0 {
                T::zero()
            } else {
                sim[j as usize]
            }
        }));
        Some(())
    }
}

fn validate_config<T: Scalar>(model: &ModelConstants<T>, config: &IdentConfig<T>) -> Result<()> {
    let check = |field: &'static str, value: T| {
        if value > T::zero() && value.is_finite() {
            Ok(())
        } else {
            Err(IdentError::NonPositiveInput { field, value: value.to_f64_lossy() })
        }
    };
    check("mass", model.mass)?;
    check("gravity", model.gravity)?;
    check("pulse_duration", model.pulse_duration)?;
    check("window", config.window)?;
    check("peak_search", config.peak_search)?;
    if config.window < model.pulse_duration {
        return Err(IdentError::InvalidConfig(format!(
            "window {} shorter than the pulse duration {}",
            config.window, model.pulse_duration
        )));
    }
    for (name, value) in
        [("onset_fraction", config.onset_fraction), ("peak_prominence_fraction", config.peak_prominence_fraction)]
    {
        if !(value >= T::zero() && value < T::one()) {
            return Err(IdentError::InvalidConfig(format!("{name} must lie in [0, 1), got {value}")));
        }
    }
    if !(config.weight_prominence >= T::zero()) {
        return Err(IdentError::InvalidConfig(format!(
            "weight_prominence must be >= 0, got {}",
            config.weight_prominence
        )));
    }
    if let Evaluator::Rk4 { step } = config.evaluator {
        check("rk4 step", step)?;
    }
    Ok(())
}

fn samples<T: Scalar>(seconds: T, dt: T) -> usize {
    (seconds / dt).round().to_usize().unwrap_or(0)
}

fn max_abs<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn simulate_into<T: Scalar>(
    params: &SmdParams<T>,
    prep: &Prepared<T>,
    evaluator: Evaluator<T>,
    out: &mut Vec<T>,
) -> Result<()> {
    let n = prep.sim_len();
    match evaluator {
        Evaluator::ClosedForm => sample_response_into(params, prep.dt, n, out)?,
        Evaluator::Rk4 { step } => {
            let solver = SolverConfig {
                step,
                method: SolverMethod::Rk4Fixed,
                duration: (prep.dt * T::from_usize_lossy(n)).max(params.pulse_duration),
            };
            let fine = simulate_response(params, &solver)?;
            let coarse = resample(&fine, prep.dt)?;
            out.clear();
            out.extend(coarse.values().iter().copied().take(n));
            out.resize(n, T::zero());
        }
    }
    Ok(())
}

struct Scratch<T> {
    sim: Vec<T>,
    aligned: Vec<T>,
}

fn evaluate<T: Scalar>(
    n_k: usize,
    n_c: usize,
    spec: &GridSpec,
    model: &ModelConstants<T>,
    config: &IdentConfig<T>,
    prep: &Prepared<T>,
    scratch: &mut Scratch<T>,
) -> Result<Candidate<T>> {
    let (k, c) = grid_params(n_k, n_c, spec)?;
    let params = model.params(k, c, prep.drop_height);
    simulate_into(&params, prep, config.evaluator, &mut scratch.sim)?;
    let error = match prep.register(&scratch.sim, &mut scratch.aligned) {
        Some(()) => weighted_error(&prep.measured, &scratch.aligned, &prep.weights, config.error_mode)?,
        None => T::infinity(),
    };
    let error = if error.is_nan() { T::infinity() } else { error };
    Ok(Candidate { error, zeta: damping_ratio(model.mass, k, c)?, k, c, grid_index: (n_k, n_c) })
}

/// Exhaustive lattice search for one trial. `trial` is expected to be
/// offset-corrected. Lattice points are evaluated in parallel and reduced
/// with [`select_best`].
pub fn identify<T: Scalar>(
    trial: &TrialRecord<T>,
    spec: &GridSpec,
    model: &ModelConstants<T>,
    config: &IdentConfig<T>,
) -> Result<IdentResult<T>> {
    spec.validate()?;
    let prep = Prepared::new(trial, model, config)?;
    let n = spec.n_points;
    let best = (0..n * n)
        .into_par_iter()
        .map_init(
            || Scratch { sim: Vec::with_capacity(prep.sim_len()), aligned: Vec::with_capacity(prep.measured.len()) },
            |scratch, i| evaluate(i / n + 1, i % n + 1, spec, model, config, &prep, scratch),
        )
        .try_reduce_with(|a, b| Ok(better(a, b)))
        .transpose()?
        .filter(|c| c.error.is_finite())
        .ok_or(IdentError::EmptyGrid)?;
    Ok(IdentResult {
        condition: trial.condition,
        trial_index: trial.trial_index,
        k: best.k,
        c: best.c,
        zeta: best.zeta,
        error: best.error,
        grid_index: best.grid_index,
        peak_force: prep.measured[prep.first_peak - prep.onset],
        first_peak_index: prep.first_peak,
        onset_index: prep.onset,
    })
}

/// Measured and registered simulated force over the comparison window.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay<T> {
    /// Seconds relative to the measured first positive peak.
    pub time: Vec<T>,
    pub measured: Vec<T>,
    pub simulated: Vec<T>,
    pub weights: Vec<T>,
}

/// Re-creates the comparison the search made for `(k, c)`.
pub fn fitted_overlay<T: Scalar>(
    trial: &TrialRecord<T>,
    k: T,
    c: T,
    model: &ModelConstants<T>,
    config: &IdentConfig<T>,
) -> Result<Overlay<T>> {
    let prep = Prepared::new(trial, model, config)?;
    let params = model.params(k, c, prep.drop_height);
    params.validate()?;
    let mut scratch = Scratch { sim: Vec::new(), aligned: Vec::new() };
    simulate_into(&params, &prep, config.evaluator, &mut scratch.sim)?;
    prep.register(&scratch.sim, &mut scratch.aligned).ok_or(IdentError::EmptyGrid)?;
    let time = (0..prep.measured.len())
        .map(|i| (T::from_usize_lossy(prep.onset + i) - T::from_usize_lossy(prep.first_peak)) * prep.dt)
        .collect();
    Ok(Overlay { time, measured: prep.measured, simulated: scratch.aligned, weights: prep.weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{ConditionKey, FootType, TimeSeries, Unit};
    use crate::smd::sample_response;

    const DT: f64 = 1.0 / 300.0;
    const MASS: f64 = 1.2;

    fn trial_from(force: Vec<f64>) -> TrialRecord<f64> {
        let n = force.len();
        let condition = ConditionKey::new(FootType::Flat, 0.0, 0.0, 100.0).unwrap();
        TrialRecord::new(
            condition,
            1,
            TimeSeries::new(force, DT, Unit::Newton).unwrap(),
            TimeSeries::new(vec![0.0; n], DT, Unit::Millimeter).unwrap(),
        )
        .unwrap()
    }

    // A record with `lead` zero samples before contact, then the model response.
    fn synthetic(k: f64, c: f64, lead: usize, total: usize) -> TrialRecord<f64> {
        let params = ModelConstants::new(MASS).params(k, c, 0.1);
        let mut force = vec![0.0; lead];
        force.extend(sample_response(&params, DT, total - lead).unwrap());
        trial_from(force)
    }

    fn small_grid() -> GridSpec {
        GridSpec { n_points: 40, ..GridSpec::default() }
    }

    #[test]
    fn recovers_on_lattice_truth() {
        let spec = small_grid();
        for &(nk, nc) in &[(20, 10), (28, 5), (33, 17), (12, 3)] {
            let (k, c) = grid_params::<f64>(nk, nc, &spec).unwrap();
            let trial = synthetic(k, c, 100, 400);
            let r = identify(&trial, &spec, &ModelConstants::new(MASS), &IdentConfig::default()).unwrap();
            assert_eq!(r.grid_index, (nk, nc));
            assert_eq!(r.error, 0.0);
            assert_eq!((r.k, r.c), (k, c));
            assert!((r.zeta - c / (2.0 * (MASS * k).sqrt())).abs() <= 1e-12 * r.zeta);
            assert!(r.onset_index <= r.first_peak_index && r.onset_index >= 100);
        }
    }

    #[test]
    fn best_is_the_exhaustive_minimum() {
        let spec = GridSpec { n_points: 15, ..GridSpec::default() };
        let trial = synthetic(4.2e4, 37.0, 60, 300);
        let model = ModelConstants::new(MASS);
        let config = IdentConfig::default();
        let r = identify(&trial, &spec, &model, &config).unwrap();
        let prep = Prepared::new(&trial, &model, &config).unwrap();
        let mut scratch = Scratch { sim: Vec::new(), aligned: Vec::new() };
        let mut errors = Vec::new();
        for nk in 1..=15 {
            for nc in 1..=15 {
                errors.push(evaluate(nk, nc, &spec, &model, &config, &prep, &mut scratch).unwrap().error);
            }
        }
        let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(r.error, min);
    }

    #[test]
    fn repeated_runs_agree() {
        let spec = small_grid();
        let trial = synthetic(2.0e5, 150.0, 80, 400);
        let model = ModelConstants::new(MASS);
        let a = identify(&trial, &spec, &model, &IdentConfig::default()).unwrap();
        for _ in 0..3 {
            assert_eq!(identify(&trial, &spec, &model, &IdentConfig::default()).unwrap(), a);
        }
    }

    #[test]
    fn tie_break_prefers_smaller_zeta_then_k() {
        let cand = |error: f64, zeta: f64, k: f64, i: usize| Candidate { error, zeta, k, c: 1.0, grid_index: (i, i) };
        let pool = [cand(1.0, 0.5, 10.0, 1), cand(1.0, 0.2, 20.0, 2), cand(1.0, 0.2, 5.0, 3), cand(2.0, 0.0, 1.0, 4)];
        let mut order: Vec<usize> = (0..pool.len()).collect();
        for _ in 0..24 {
            let best = select_best(order.iter().map(|&i| pool[i])).unwrap();
            assert_eq!(best.grid_index, (3, 3));
            order.rotate_left(1);
            order.swap(0, 2);
        }
        let par = pool.to_vec().into_par_iter().reduce_with(better).unwrap();
        assert_eq!(par.grid_index, (3, 3));
    }

    #[test]
    fn nan_error_never_wins() {
        let a = Candidate { error: f64::NAN, zeta: 0.0, k: 1.0, c: 1.0, grid_index: (1, 1) };
        let b = Candidate { error: 1e9, zeta: 1.0, k: 2.0, c: 1.0, grid_index: (2, 1) };
        assert_eq!(select_best([a, b]).unwrap().grid_index, (2, 1));
        assert_eq!(select_best([b, a]).unwrap().grid_index, (2, 1));
    }

    #[test]
    fn flat_record_has_no_peak() {
        let trial = trial_from(vec![0.0; 300]);
        let err = identify(&trial, &small_grid(), &ModelConstants::new(MASS), &IdentConfig::default()).unwrap_err();
        assert!(matches!(err, IdentError::Signal(SignalError::NoPositivePeak { trial: Some(1) })));
    }

    #[test]
    fn short_window_is_rejected() {
        let trial = synthetic(1e5, 50.0, 50, 300);
        let config = IdentConfig { window: 0.01, ..IdentConfig::default() };
        assert!(matches!(
            identify(&trial, &small_grid(), &ModelConstants::new(MASS), &config),
            Err(IdentError::InvalidConfig(_))
        ));
    }

    #[test]
    fn overlay_of_truth_is_exact() {
        let spec = small_grid();
        let (k, c) = grid_params::<f64>(25, 12, &spec).unwrap();
        let trial = synthetic(k, c, 90, 400);
        let o = fitted_overlay(&trial, k, c, &ModelConstants::new(MASS), &IdentConfig::default()).unwrap();
        assert_eq!(o.measured, o.simulated);
        assert_eq!(o.measured.len(), 45);
        assert!(o.time[0] <= 0.0 && o.time.contains(&0.0));
    }

    #[test]
    fn rk4_evaluator_agrees_on_truth() {
        let spec = GridSpec { n_points: 20, ..GridSpec::default() };
        let (k, c) = grid_params::<f64>(10, 6, &spec).unwrap();
        let trial = synthetic(k, c, 70, 300);
        let config = IdentConfig { evaluator: Evaluator::Rk4 { step: 1.0 / 30000.0 }, ..IdentConfig::default() };
        let r = identify(&trial, &spec, &ModelConstants::new(MASS), &config).unwrap();
        assert_eq!(r.grid_index, (10, 6));
        assert!(r.error < 1e-6 * r.peak_force * r.peak_force);
    }

    #[test]
    fn f32_search_runs() {
        let spec = GridSpec { n_points: 20, ..GridSpec::default() };
        let (k, c) = grid_params::<f32>(11, 7, &spec).unwrap();
        let params = ModelConstants::new(MASS as f32).params(k, c, 0.1);
        let mut force = vec![0.0f32; 50];
        force.extend(sample_response(&params, DT as f32, 250).unwrap());
        let condition = ConditionKey::new(FootType::Soft, 0.0, 0.0, 100.0).unwrap();
        let trial = TrialRecord::new(
            condition,
            2,
            TimeSeries::new(force, DT as f32, Unit::Newton).unwrap(),
            TimeSeries::new(vec![0.0f32; 300], DT as f32, Unit::Millimeter).unwrap(),
        )
        .unwrap();
        let r = identify(&trial, &spec, &ModelConstants::new(MASS as f32), &IdentConfig::default()).unwrap();
        assert_eq!(r.grid_index, (11, 7));
    }
}
