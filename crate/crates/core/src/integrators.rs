//! Time-stepping schemes on the uniform grid `t_k = k h`.
//!
//! * forward Euler applied directly to `X' = r X (ln K - ln X)(ln X - ln a_t)`;
//! * the cubature scheme, which discretises the integrals of the exact
//!   solution instead of the equation: a trapezoid rule for the inner integral
//!   `G`, a right-endpoint sum for `L`, and `X_k = K exp(-dL_k / I_k)`;
//! * forward Euler on the cubic Allee model, kept as a baseline without
//!   finite-time extinction.
//!
//! Both extinction estimates follow the grid convention `tau = k' h`, where `k'`
//! is the first index at which the sign indicator (`X_k` for Euler, `I_k` for
//! cubature) turns negative.

use crate::error::{AlleeError, Result};
use crate::exact::ModelParams;
use crate::quadrature::CompensatedSum;
use crate::schedules::AlleeSchedule;

/// Integration scheme that produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Cubature,
    NominalEuler,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Cubature => "cubature",
            Scheme::NominalEuler => "nominal-euler",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = AlleeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "cubature" | "quadrature" => Ok(Scheme::Cubature),
            "nominal-euler" | "nominal" => Ok(Scheme::NominalEuler),
            other => Err(AlleeError::InvalidInput(format!(
                "unknown scheme `{other}` (expected euler|cubature|nominal-euler)"
            ))),
        }
    }
}

/// Time at which the Euler schemes sample the Allee parameter in step `k -> k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `a_{t_{k+1}}`.
    #[default]
    StepEnd,
    /// `a_{t_k}`.
    StepStart,
}

impl std::str::FromStr for Sampling {
    type Err = AlleeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "step-end" | "end" | "next" => Ok(Sampling::StepEnd),
            "step-start" | "start" | "current" => Ok(Sampling::StepStart),
            other => Err(AlleeError::InvalidInput(format!(
                "unknown sampling `{other}` (expected step-end|step-start)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorOptions {
    pub sampling: Sampling,
    /// Replace `k' h` by the linear interpolation of the indicator's sign change.
    pub refine_tau: bool,
}

/// Numerical trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub extinction_index: Option<usize>,
    pub extinction_time: Option<f64>,
    pub scheme: Scheme,
    pub step: f64,
    pub capacity: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> f64 {
        *self.states.last().unwrap_or(&f64::NAN)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.states.iter().copied())
    }
}

/// Right-hand side `r x (ln K - ln x)(ln x - ln a)`, exactly zero at `x = 0`.
pub fn rhs(x: f64, a: f64, r: f64, capacity: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(AlleeError::Domain(format!("state must be non-negative, got {x}")));
    }
    Ok(rhs_unchecked(x, a.ln(), r, capacity.ln()))
}

#[inline]
fn rhs_unchecked(x: f64, ln_a: f64, r: f64, ln_k: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    r * x * (ln_k - ln_x) * (ln_x - ln_a)
}

/// Number of whole steps of size `h` that fit in `horizon`.
pub fn step_count(h: f64, horizon: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(AlleeError::InvalidInput(format!("step size must be positive, got {h}")));
    }
    if !(horizon >= h && horizon.is_finite()) {
        return Err(AlleeError::InvalidInput(format!(
            "horizon {horizon} must be at least one step ({h})"
        )));
    }
    // tolerate representation error in horizon / h (e.g. 10 / 0.001)
    Ok((horizon / h * (1.0 + 1e-12)).floor() as usize)
}

/// Where a run crossed into extinction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Crossing {
    index: usize,
    time: f64,
}

fn crossing(index: usize, h: f64, before: f64, after: f64, refine: bool) -> Crossing {
    let grid_time = index as f64 * h;
    let time = if refine && before > 0.0 && after < before {
        (index - 1) as f64 * h + h * before / (before - after)
    } else {
        grid_time
    };
    Crossing { index, time }
}

fn prepare(params: &ModelParams, schedule: &AlleeSchedule, h: f64, horizon: f64) -> Result<usize> {
    params.check()?;
    let n = step_count(h, horizon)?;
    schedule.ensure_valid(params.capacity, n as f64 * h)?;
    Ok(n)
}

/// Cubature recurrence over `steps` steps. `sink(k, x_k)` returns `false` to stop early.
fn drive_cubature(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    steps: usize,
    refine: bool,
    mut sink: impl FnMut(usize, f64) -> bool,
) -> Option<Crossing> {
    if params.x0 == 0.0 {
        sink(0, 0.0);
        return Some(Crossing { index: 0, time: 0.0 });
    }
    let r = params.r;
    let capacity = params.capacity;
    let ln_k = capacity.ln();
    let i0 = params.i0();
    if !sink(0, params.x0) {
        return None;
    }
    let mut inner = CompensatedSum::new();
    let mut outer = CompensatedSum::new();
    let mut g_prev = schedule.log_ratio_unchecked(ln_k, 0.0);
    let mut i_prev = i0;
    for k in 1..=steps {
        let g = schedule.log_ratio_unchecked(ln_k, k as f64 * h);
        inner.add(0.5 * (g_prev + g));
        g_prev = g;
        let dl = (-r * h * inner.value()).exp();
        outer.add(dl);
        let i_k = i0 - r * h * outer.value();
        if i_k < 0.0 {
            return Some(crossing(k, h, i_prev, i_k, refine));
        }
        let x = if i_k > 0.0 { capacity * (-dl / i_k).exp() } else { 0.0 };
        if !sink(k, x) {
            return None;
        }
        i_prev = i_k;
    }
    None
}

/// Euler recurrence over `steps` steps.
fn drive_euler(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    steps: usize,
    opts: &IntegratorOptions,
    mut sink: impl FnMut(usize, f64) -> bool,
) -> Result<Option<Crossing>> {
    if params.x0 == 0.0 {
        sink(0, 0.0);
        return Ok(Some(Crossing { index: 0, time: 0.0 }));
    }
    let r = params.r;
    let ln_k = params.capacity.ln();
    let mut x = params.x0;
    if !sink(0, x) {
        return Ok(None);
    }
    let offset = match opts.sampling {
        Sampling::StepEnd => 1.0,
        Sampling::StepStart => 0.0,
    };
    for k in 0..steps {
        let ln_a = schedule.ln_value((k as f64 + offset) * h);
        let next = x + h * rhs_unchecked(x, ln_a, r, ln_k);
        if !next.is_finite() {
            return Err(AlleeError::StepFailure {
                step: k + 1,
                time: (k + 1) as f64 * h,
                state: next,
            });
        }
        if next < 0.0 {
            return Ok(Some(crossing(k + 1, h, x, next, opts.refine_tau)));
        }
        x = next;
        if !sink(k + 1, x) {
            return Ok(None);
        }
    }
    Ok(None)
}

fn assemble(
    scheme: Scheme,
    params: &ModelParams,
    h: f64,
    steps: usize,
    mut states: Vec<f64>,
    hit: Option<Crossing>,
) -> Trajectory {
    let extinction_index = hit.map(|c| c.index);
    states.resize(steps + 1, 0.0);
    Trajectory {
        times: (0..=steps).map(|k| k as f64 * h).collect(),
        states,
        extinction_index,
        extinction_time: hit.map(|c| c.time),
        scheme,
        step: h,
        capacity: params.capacity,
    }
}

/// Forward Euler with the Allee parameter sampled at `t_{k+1}`.
pub fn euler_integrate(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
) -> Result<Trajectory> {
    euler_integrate_with(params, schedule, h, horizon, &IntegratorOptions::default())
}

pub fn euler_integrate_with(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let steps = prepare(params, schedule, h, horizon)?;
    let mut states = Vec::with_capacity(steps + 1);
    let hit = drive_euler(params, schedule, h, steps, opts, |_, x| {
        states.push(x);
        true
    })?;
    Ok(assemble(Scheme::Euler, params, h, steps, states, hit))
}

/// Cubature scheme: every state lies in `[0, K]` for any `h > 0`.
pub fn cubature_integrate(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
) -> Result<Trajectory> {
    cubature_integrate_with(params, schedule, h, horizon, &IntegratorOptions::default())
}

pub fn cubature_integrate_with(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let steps = prepare(params, schedule, h, horizon)?;
    let mut states = Vec::with_capacity(steps + 1);
    let hit = drive_cubature(params, schedule, h, steps, opts.refine_tau, |_, x| {
        states.push(x);
        true
    });
    Ok(assemble(Scheme::Cubature, params, h, steps, states, hit))
}

/// Forward Euler on the cubic model `X' = r X ((K - X)/K)((X - a_t)/K)`.
///
/// A step that leaves `[0, K]` is reported as [`AlleeError::StepFailure`].
pub fn nominal_euler_integrate(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
) -> Result<Trajectory> {
    let steps = prepare(params, schedule, h, horizon)?;
    let (r, capacity) = (params.r, params.capacity);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = params.x0;
    states.push(x);
    for k in 0..steps {
        let a = schedule.value((k + 1) as f64 * h);
        x += h * r * x * ((capacity - x) / capacity) * ((x - a) / capacity);
        if !(0.0..=capacity).contains(&x) {
            return Err(AlleeError::StepFailure {
                step: k + 1,
                time: (k + 1) as f64 * h,
                state: x,
            });
        }
        states.push(x);
    }
    Ok(assemble(Scheme::NominalEuler, params, h, steps, states, None))
}

/// Dispatch on `scheme`.
pub fn integrate(
    scheme: Scheme,
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    match scheme {
        Scheme::Euler => euler_integrate_with(params, schedule, h, horizon, opts),
        Scheme::Cubature => cubature_integrate_with(params, schedule, h, horizon, opts),
        Scheme::NominalEuler => nominal_euler_integrate(params, schedule, h, horizon),
    }
}

/// Streams cubature states `(k, X_k)` to `visit` without storing them and
/// without validating the schedule; the caller guarantees `0 < a_t < K` on
/// `[0, steps h]`. Returns the grid extinction time if one is reached.
pub(crate) fn cubature_visit(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    steps: usize,
    visit: impl FnMut(usize, f64) -> bool,
) -> Option<f64> {
    drive_cubature(params, schedule, h, steps, false, visit).map(|c| c.time)
}

/// Numerical extinction time without storing the trajectory; `None` when the
/// run survives the horizon.
pub fn extinction_estimate(
    scheme: Scheme,
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Option<f64>> {
    let steps = prepare(params, schedule, h, horizon)?;
    let hit = match scheme {
        Scheme::Euler => drive_euler(params, schedule, h, steps, opts, |_, _| true)?,
        Scheme::Cubature => drive_cubature(params, schedule, h, steps, opts.refine_tau, |_, _| true),
        Scheme::NominalEuler => None,
    };
    Ok(hit.map(|c| c.time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TAU_EXACT: f64 = 1.352_273_700_171_924;

    fn constant_case(x0: f64) -> (ModelParams, AlleeSchedule) {
        (
            ModelParams::new(1.0, 1.0, x0).unwrap(),
            AlleeSchedule::constant(0.5).unwrap(),
        )
    }

    #[test]
    fn rhs_values() {
        assert_eq!(rhs(0.0, 0.3, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(rhs(1.0, 0.3, 1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(rhs(0.3, 0.3, 1.0, 1.0).unwrap(), 0.0, epsilon = 1e-300);
        let l2 = 2f64.ln();
        assert_abs_diff_eq!(rhs(0.5, 0.25, 1.0, 1.0).unwrap(), 0.5 * l2 * l2, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs(0.5, 0.25, 1.0, 1.0).unwrap(), 0.240_227, epsilon = 1e-6);
        assert!(rhs(-1e-3, 0.25, 1.0, 1.0).is_err());
    }

    #[test]
    fn step_count_truncates_to_grid() {
        assert_eq!(step_count(0.001, 10.0).unwrap(), 10_000);
        assert_eq!(step_count(0.3, 1.0).unwrap(), 3);
        assert!(step_count(0.0, 1.0).is_err());
        assert!(step_count(0.5, 0.1).is_err());
    }

    #[test]
    fn euler_base_case_tau_errors() {
        let (p, s) = constant_case(0.32);
        let traj = euler_integrate(&p, &s, 1e-4, 5.0).unwrap();
        let tau = traj.extinction_time.unwrap();
        assert_abs_diff_eq!((tau - TAU_EXACT).abs(), 1.477e-2, epsilon = 1e-5);
        let k = traj.extinction_index.unwrap();
        assert!(traj.states[k..].iter().all(|&x| x == 0.0));
        assert!(traj.states[..k].iter().all(|&x| x > 0.0));
    }

    #[test]
    fn cubature_base_case_tau_errors() {
        let (p, s) = constant_case(0.32);
        let traj = cubature_integrate(&p, &s, 1e-4, 5.0).unwrap();
        let tau = traj.extinction_time.unwrap();
        assert_abs_diff_eq!((tau - TAU_EXACT).abs(), 1.263e-4, epsilon = 1e-6);
    }

    #[test]
    fn equilibria_stay_put() {
        let (p, s) = constant_case(1.0);
        for traj in [
            euler_integrate(&p, &s, 1e-2, 3.0).unwrap(),
            cubature_integrate(&p, &s, 1e-2, 3.0).unwrap(),
            nominal_euler_integrate(&p, &s, 1e-2, 3.0).unwrap(),
        ] {
            assert!(traj.states.iter().all(|&x| x == 1.0), "{:?}", traj.scheme);
            assert!(traj.extinction_index.is_none());
        }
        let (p, s) = constant_case(0.5);
        let traj = nominal_euler_integrate(&p, &s, 1e-2, 3.0).unwrap();
        assert!(traj.states.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn zero_initial_state_is_the_zero_trajectory() {
        let (p, s) = constant_case(0.0);
        for traj in [
            euler_integrate(&p, &s, 1e-2, 1.0).unwrap(),
            cubature_integrate(&p, &s, 1e-2, 1.0).unwrap(),
        ] {
            assert_eq!(traj.len(), 101);
            assert!(traj.states.iter().all(|&x| x == 0.0));
            assert_eq!(traj.extinction_index, Some(0));
            assert_eq!(traj.extinction_time, Some(0.0));
        }
    }

    #[test]
    fn nominal_model_never_goes_extinct() {
        let (p, s) = constant_case(0.32);
        let traj = nominal_euler_integrate(&p, &s, 1e-3, 50.0).unwrap();
        assert!(traj.states.iter().all(|&x| x > 0.0));
        assert!(traj.final_state() < 0.32);
        assert!(traj.extinction_time.is_none());
    }

    #[test]
    fn nominal_step_failure_is_reported() {
        let (p, s) = constant_case(0.9);
        let err = nominal_euler_integrate(&p.with_x0(0.999), &s, 2000.0, 4000.0).unwrap_err();
        assert!(matches!(err, AlleeError::StepFailure { .. }));
    }

    #[test]
    fn refinement_moves_tau_inside_last_step() {
        let (p, s) = constant_case(0.32);
        let opts = IntegratorOptions {
            refine_tau: true,
            ..Default::default()
        };
        let coarse = extinction_estimate(Scheme::Cubature, &p, &s, 1e-2, 5.0, &Default::default())
            .unwrap()
            .unwrap();
        let refined = extinction_estimate(Scheme::Cubature, &p, &s, 1e-2, 5.0, &opts).unwrap().unwrap();
        assert!(refined <= coarse && refined > coarse - 1e-2);
    }

    #[test]
    fn tau_only_matches_full_run() {
        let (p, s) = constant_case(0.16);
        for scheme in [Scheme::Euler, Scheme::Cubature] {
            let full = integrate(scheme, &p, &s, 1e-3, 4.0, &Default::default()).unwrap();
            let quick = extinction_estimate(scheme, &p, &s, 1e-3, 4.0, &Default::default()).unwrap();
            assert_eq!(full.extinction_time, quick);
        }
    }

    #[test]
    fn invalid_schedule_is_rejected() {
        let p = ModelParams::new(1.0, 1.0, 0.3).unwrap();
        let s = AlleeSchedule::oscillatory(1.2, 0.01, 1.0).unwrap();
        assert!(matches!(
            cubature_integrate(&p, &s, 1e-2, 1.0),
            Err(AlleeError::ScheduleViolation { .. })
        ));
    }
}
