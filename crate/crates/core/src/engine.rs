//! The optimization loop: transition maps, step schedules, stopping rules
//! and evaluation bookkeeping.

use crate::genfun::GeneratingPair;
use crate::matrix::norm2;
use crate::rng::SplitMix64;
use crate::sequence::{ExplorationMatrix, MapParameters};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("dimension mismatch: x has {x_dim} components, W expects {expected}")]
    DimensionMismatch { x_dim: usize, expected: usize },
    #[error("step size must be positive, got {h}")]
    NonPositiveStep { h: f64 },
    #[error("objective has no gradient oracle")]
    GradientUnavailable,
    #[error("generating pair evaluation failed: {0}")]
    GenFun(#[from] crate::genfun::GenFunError),
}

/// Black-box objective with evaluation accounting and an optional exact
/// gradient used only by verification routines.
pub struct ObjectivePort {
    f: Box<dyn FnMut(&[f64]) -> f64 + Send>,
    gradient: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + Send>>,
    eval_count: u64,
    noise: Option<(f64, SplitMix64)>,
}

impl ObjectivePort {
    pub fn new(f: impl FnMut(&[f64]) -> f64 + Send + 'static) -> Self {
        Self {
            f: Box::new(f),
            gradient: None,
            eval_count: 0,
            noise: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + 'static) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    /// Additive Gaussian observation noise with a fixed seed. Off by
    /// default; runs stay reproducible for a fixed seed.
    pub fn with_noise(mut self, std_dev: f64, seed: u64) -> Self {
        self.noise = Some((std_dev, SplitMix64::new(seed)));
        self
    }

    /// Evaluate the objective; increments the counter exactly once.
    pub fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.eval_count += 1;
        let mut v = (self.f)(x);
        if let Some((std, rng)) = &mut self.noise {
            v += *std * rng.normal();
        }
        v
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Exact gradient for verification; does not touch the counter.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }
}

/// Step-size schedule: constant, or harmonically decreasing but constant
/// within each period of length `m` (`h_k = h0 / (floor(k/m) + 1)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant { h0: f64 },
    Harmonic { h0: f64, m: usize },
}

impl Schedule {
    pub fn constant(h0: f64) -> Self {
        Schedule::Constant { h0 }
    }

    pub fn h_at(&self, k: usize) -> f64 {
        match *self {
            Schedule::Constant { h0 } => h0,
            Schedule::Harmonic { h0, m } => h0 / ((k / m) as f64 + 1.0),
        }
    }
}

/// Harmonic schedule constructor: keeps `h` constant over each m-period so
/// the m-step composition argument stays intact, while the per-period step
/// sums diverge and their squares converge.
pub fn harmonic_schedule(h0: f64, m: usize) -> Schedule {
    assert!(h0 > 0.0 && m >= 1);
    Schedule::Harmonic { h0, m }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    MaxEvals,
    JThreshold,
    Stalled,
    Diverged,
}

impl StopReason {
    pub fn tag(&self) -> &'static str {
        match self {
            StopReason::MaxIters => "max_iters",
            StopReason::MaxEvals => "max_evals",
            StopReason::JThreshold => "j_threshold",
            StopReason::Stalled => "stalled",
            StopReason::Diverged => "diverged",
        }
    }
}

/// Disjunction of stop criteria. Defaults: 10^4 iterations, stall
/// tolerance `1e-6 sqrt(n)` over 5 consecutive periods.
#[derive(Debug, Clone)]
pub struct StopCriteria {
    pub max_iters: usize,
    pub max_evals: Option<u64>,
    pub j_threshold: Option<f64>,
    pub stall_tol: Option<f64>,
    pub stall_patience: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            max_evals: None,
            j_threshold: None,
            stall_tol: None,
            stall_patience: 5,
        }
    }
}

impl StopCriteria {
    pub fn max_iters(n: usize) -> Self {
        Self {
            max_iters: n,
            ..Self::default()
        }
    }

    fn effective_stall_tol(&self, n: usize) -> f64 {
        self.stall_tol.unwrap_or(1e-6 * (n as f64).sqrt())
    }
}

/// Trajectory record of one run.
///
/// `iterates` holds `x_0 ... x_K` (one entry per loop-top visit, including
/// the final state) and `objective_values` the matching `J(x_k)`. Each of
/// the `K` transition steps consumes `evals_per_iter` evaluations; one
/// extra evaluation records the final iterate, so
/// `eval_count = K * evals_per_iter + 1`.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub iterates: Vec<Vec<f64>>,
    pub objective_values: Vec<f64>,
    pub h_trace: Vec<f64>,
    pub evals_per_iter: u32,
    pub stop_reason: StopReason,
    pub eval_count: u64,
}

impl RunRecord {
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn final_iterate(&self) -> &[f64] {
        self.iterates.last().expect("run records at least x0")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_values.last().expect("run records at least x0")
    }

    /// CSV export: header `k,x_1,...,x_n,J,h,evals_cum`, one row per
    /// recorded iterate.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let n = self.iterates.first().map_or(0, Vec::len);
        let cols: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        writeln!(out, "k,{},J,h,evals_cum", cols.join(","))?;
        let epi = u64::from(self.evals_per_iter);
        for (k, (x, j)) in self.iterates.iter().zip(&self.objective_values).enumerate() {
            let coords: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            let evals_cum = k as u64 * epi + 1;
            writeln!(
                out,
                "{k},{},{},{},{evals_cum}",
                coords.join(","),
                j,
                self.h_trace[k]
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// A single transition map application.
///
/// With `l = k mod m` and `Y(z) = [f(z) I  g(z) I]`:
/// `x_hat = x + sqrt(h) Y(J(x)) w_l` and the step returns
/// `x + sqrt(h) (alpha1 Y(J(x)) + alpha2 Y(J(x_hat))) w_l`.
/// `J(x)` is evaluated once and reused; when `alpha2 = 0` the probe at
/// `x_hat` is skipped, so the call costs one evaluation instead of two.
pub fn transition_step(
    x: &[f64],
    k: usize,
    w: &ExplorationMatrix,
    pair: &GeneratingPair,
    params: &MapParameters,
    h: f64,
    objective: &mut ObjectivePort,
) -> Result<Vec<f64>, EngineError> {
    let jx = objective.evaluate(x);
    if !jx.is_finite() {
        return Err(EngineError::NonFiniteObjective { iteration: k });
    }
    step_with_cached_value(x, jx, k, w, pair, params, h, objective)
}

/// Transition step reusing an already-evaluated `J(x)`.
#[allow(clippy::too_many_arguments)]
fn step_with_cached_value(
    x: &[f64],
    jx: f64,
    k: usize,
    w: &ExplorationMatrix,
    pair: &GeneratingPair,
    params: &MapParameters,
    h: f64,
    objective: &mut ObjectivePort,
) -> Result<Vec<f64>, EngineError> {
    let n = w.n();
    if x.len() != n {
        return Err(EngineError::DimensionMismatch {
            x_dim: x.len(),
            expected: n,
        });
    }
    if !(h > 0.0) {
        return Err(EngineError::NonPositiveStep { h });
    }
    let col = w.column(k % w.m);
    let (u, v) = col.split_at(n);
    let sqrt_h = h.sqrt();

    let (f0, g0, _, _) = pair.evaluate(jx)?;
    if params.alpha2() == 0.0 {
        let a = params.alpha1() + params.alpha2();
        return Ok((0..n).map(|i| x[i] + sqrt_h * a * (f0 * u[i] + g0 * v[i])).collect());
    }

    let x_hat: Vec<f64> = (0..n)
        .map(|i| x[i] + sqrt_h * (f0 * u[i] + g0 * v[i]))
        .collect();
    let j_hat = objective.evaluate(&x_hat);
    if !j_hat.is_finite() {
        return Err(EngineError::NonFiniteObjective { iteration: k });
    }
    let (f1, g1, _, _) = pair.evaluate(j_hat)?;
    let (a1, a2) = (params.alpha1(), params.alpha2());
    Ok((0..n)
        .map(|i| {
            x[i] + sqrt_h * (a1 * (f0 * u[i] + g0 * v[i]) + a2 * (f1 * u[i] + g1 * v[i]))
        })
        .collect())
}

/// Everything a run needs besides the objective and the start point.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub schedule: Schedule,
    pub stop: StopCriteria,
}

/// Run the optimization loop until a stop criterion fires.
///
/// A non-finite objective value aborts with a partial record and
/// `StopReason::Diverged` rather than an error.
pub fn run(
    w: &ExplorationMatrix,
    pair: &GeneratingPair,
    params: &MapParameters,
    settings: &RunSettings,
    objective: &mut ObjectivePort,
    x0: &[f64],
) -> Result<RunRecord, EngineError> {
    let n = w.n();
    if x0.len() != n {
        return Err(EngineError::DimensionMismatch {
            x_dim: x0.len(),
            expected: n,
        });
    }
    let evals_per_iter: u32 = if params.alpha2() == 0.0 { 1 } else { 2 };
    let stall_tol = settings.stop.effective_stall_tol(n);
    let m = w.m;

    let mut record = RunRecord {
        iterates: Vec::new(),
        objective_values: Vec::new(),
        h_trace: Vec::new(),
        evals_per_iter,
        stop_reason: StopReason::MaxIters,
        eval_count: 0,
    };

    let mut x = x0.to_vec();
    let mut k = 0usize;
    let mut stall_periods = 0usize;
    loop {
        let h = settings.schedule.h_at(k);
        let jx = objective.evaluate(&x);
        record.iterates.push(x.clone());
        record.objective_values.push(jx);
        record.h_trace.push(h);
        if !jx.is_finite() {
            record.stop_reason = StopReason::Diverged;
            break;
        }

        // Stall detection compares iterates one period apart.
        if k >= m && k.is_multiple_of(m) {
            let prev = &record.iterates[k - m];
            let dist = norm2(
                &x.iter()
                    .zip(prev.iter())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            if dist < stall_tol {
                stall_periods += 1;
            } else {
                stall_periods = 0;
            }
        }

        let stop = if k >= settings.stop.max_iters {
            Some(StopReason::MaxIters)
        } else if settings
            .stop
            .max_evals
            .is_some_and(|cap| objective.eval_count() >= cap)
        {
            Some(StopReason::MaxEvals)
        } else if settings.stop.j_threshold.is_some_and(|thr| jx <= thr) {
            Some(StopReason::JThreshold)
        } else if stall_periods >= settings.stop.stall_patience {
            Some(StopReason::Stalled)
        } else {
            None
        };
        if let Some(reason) = stop {
            record.stop_reason = reason;
            break;
        }

        match step_with_cached_value(&x, jx, k, w, pair, params, h, objective) {
            Ok(next) => x = next,
            Err(EngineError::NonFiniteObjective { .. }) => {
                record.stop_reason = StopReason::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        k += 1;
    }
    record.eval_count = objective.eval_count();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives;
    use crate::sequence::reference_coordinate_sequence;

    #[test]
    fn harmonic_schedule_values() {
        let s = harmonic_schedule(1.0, 4);
        let expect = [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(s.h_at(k), *e);
        }
        assert_eq!(s.h_at(16), 1.0 / 5.0);
        // Constant within each period.
        for p in 0..6 {
            let h = s.h_at(p * 4);
            for k in p * 4..(p + 1) * 4 {
                assert_eq!(s.h_at(k), h);
            }
        }
    }

    #[test]
    fn step_with_constant_f_kills_v_term() {
        // f = 1, g = -z with J == 0: g(0) = 0, so only the u part moves.
        let w = reference_coordinate_sequence(1);
        let pair = crate::genfun::GeneratingPair::h4_const_lin(1.0, 1.0).unwrap();
        let params = MapParameters::two_point();
        let mut port = ObjectivePort::new(|_| 0.0);
        let x1 = transition_step(&[0.0], 0, &w, &pair, &params, 0.04, &mut port).unwrap();
        // Column 0 is (u, v) = (1, 0): x1 = 0 + sqrt(h) (a1 + a2) * 1.
        assert!((x1[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_point_sin_step_at_origin() {
        // f = sin, g = cos, J = x^2, x = 0, k = 0, h = 0.04:
        // column 0 is (1, 0), so x1 = 0 + 0.2 sin(0) = 0.
        let w = reference_coordinate_sequence(1);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        let params = MapParameters::single_point();
        let mut port = ObjectivePort::new(|x: &[f64]| x[0] * x[0]);
        let x1 = transition_step(&[0.0], 0, &w, &pair, &params, 0.04, &mut port).unwrap();
        assert_eq!(x1[0], 0.0);
        assert_eq!(port.eval_count(), 1);
    }

    #[test]
    fn eval_counts_per_scheme() {
        let w = reference_coordinate_sequence(1);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        let mut port = ObjectivePort::new(|x: &[f64]| x[0] * x[0]);
        transition_step(&[0.3], 0, &w, &pair, &MapParameters::two_point(), 0.01, &mut port)
            .unwrap();
        assert_eq!(port.eval_count(), 2);
        transition_step(
            &[0.3],
            0,
            &w,
            &pair,
            &MapParameters::single_point(),
            0.01,
            &mut port,
        )
        .unwrap();
        assert_eq!(port.eval_count(), 3);
    }

    #[test]
    fn zero_iteration_run_records_x0() {
        let w = reference_coordinate_sequence(2);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        let params = MapParameters::two_point();
        let settings = RunSettings {
            schedule: Schedule::constant(0.05),
            stop: StopCriteria::max_iters(0),
        };
        let mut port = objectives::quadratic(&[1.0, 2.0]);
        let record = run(&w, &pair, &params, &settings, &mut port, &[0.0, 1.0]).unwrap();
        assert_eq!(record.iterates.len(), 1);
        assert_eq!(record.iterates[0], vec![0.0, 1.0]);
        assert_eq!(record.eval_count, 1);
        let csv = record.to_csv_string();
        assert_eq!(csv.lines().count(), 2); // header + one row
        assert!(csv.starts_with("k,x_1,x_2,J,h,evals_cum"));
    }

    #[test]
    fn eval_accounting_exact() {
        let w = reference_coordinate_sequence(2);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        for (params, epi) in [
            (MapParameters::two_point(), 2u64),
            (MapParameters::single_point(), 1u64),
        ] {
            let settings = RunSettings {
                schedule: Schedule::constant(0.05),
                stop: StopCriteria::max_iters(17),
            };
            let mut port = objectives::quadratic(&[1.0, 2.0]);
            let record = run(&w, &pair, &params, &settings, &mut port, &[0.0, 1.0]).unwrap();
            assert_eq!(record.steps(), 17);
            assert_eq!(record.eval_count, 17 * epi + 1);
            assert_eq!(record.iterates.len(), record.objective_values.len());
            assert_eq!(record.h_trace.len(), record.iterates.len());
        }
    }

    #[test]
    fn diverged_run_keeps_partial_record() {
        let w = reference_coordinate_sequence(1);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        let params = MapParameters::two_point();
        let settings = RunSettings {
            schedule: Schedule::constant(0.05),
            stop: StopCriteria::max_iters(100),
        };
        let mut calls = 0u32;
        let mut port = ObjectivePort::new(move |x: &[f64]| {
            calls += 1;
            if calls > 5 {
                f64::NAN
            } else {
                x[0] * x[0]
            }
        });
        let record = run(&w, &pair, &params, &settings, &mut port, &[0.5]).unwrap();
        assert_eq!(record.stop_reason, StopReason::Diverged);
        assert!(!record.iterates.is_empty());
    }

    #[test]
    fn deterministic_records() {
        let w = reference_coordinate_sequence(2);
        let pair = crate::genfun::GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
        let params = MapParameters::two_point();
        let settings = RunSettings {
            schedule: harmonic_schedule(0.05, w.m),
            stop: StopCriteria::max_iters(64),
        };
        let mut a = objectives::quadratic(&[1.0, 2.0]);
        let mut b = objectives::quadratic(&[1.0, 2.0]);
        let ra = run(&w, &pair, &params, &settings, &mut a, &[0.0, 1.0]).unwrap();
        let rb = run(&w, &pair, &params, &settings, &mut b, &[0.0, 1.0]).unwrap();
        assert_eq!(ra.to_csv_string(), rb.to_csv_string());
    }

    #[test]
    fn noisy_objective_is_seed_deterministic() {
        let mut a = ObjectivePort::new(|x: &[f64]| x[0]).with_noise(0.1, 9);
        let mut b = ObjectivePort::new(|x: &[f64]| x[0]).with_noise(0.1, 9);
        for _ in 0..10 {
            assert_eq!(a.evaluate(&[1.0]), b.evaluate(&[1.0]));
        }
    }
}
