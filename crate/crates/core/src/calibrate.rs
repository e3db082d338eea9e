//! Least-squares calibration of the model with a log-sigmoid Allee parameter.
//!
//! The fitted quantities are `X_0, r, K, ln a_hi, ln a_lo, eps, theta`, with
//! `ln a_t = (ln a_hi - ln a_lo) / (1 + exp(-(t - theta)/eps)) + ln a_lo` and
//! time measured from the first observation. The optimiser works on an
//! unconstrained vector `z` that maps onto parameters with
//! `a_lo <= K <= a_hi` and `a_t < K` up to a feasibility horizon:
//!
//! ```text
//! z0 = X_0 / s            z1 = ln r           z2 = ln(K / s)
//! z3 = ln g0              z4 = logit(q)       z5 = ln eps        z6 = theta / span
//! ```
//!
//! where `s` is the largest observed value, `span` the observation window,
//! `g0` sets `ln K - ln a_lo = g0 (1 + exp(-theta/eps))` (the gap at `t = 0`
//! when `a_hi = K`), and `q` in `(0, 1)` is the fraction of the admissible
//! headroom between `a_T` and `K` at the feasibility horizon `T` that is used.

use rayon::prelude::*;

use crate::error::{AlleeError, Result};
use crate::exact::{extinction_time, ExtinctionReport, ModelParams, DEFAULT_TAU_TOL};
use crate::integrators::{cubature_integrate, cubature_visit, Trajectory};
use crate::optimize::{halton, nelder_mead, Minimum, NelderMeadOptions};
use crate::schedules::{AlleeSchedule, Direction};
use crate::tipping::{detect_crossings, Crossing};

const DIM: usize = 7;

/// One dated value; `None` marks a missing record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub value: Option<f64>,
}

/// Time series sorted by time, with at least three present values.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    records: Vec<Observation>,
}

impl Observations {
    /// Sorts `records` by time and validates them.
    pub fn new(mut records: Vec<Observation>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| !r.time.is_finite()) {
            return Err(AlleeError::InvalidInput(format!("non-finite observation time {}", r.time)));
        }
        if let Some(v) = records.iter().filter_map(|r| r.value).find(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(AlleeError::InvalidInput(format!(
                "observed values must be positive, got {v}"
            )));
        }
        records.sort_by(|a, b| a.time.total_cmp(&b.time));
        if let Some(w) = records.windows(2).find(|w| w[0].time == w[1].time) {
            return Err(AlleeError::InvalidInput(format!("duplicate observation time {}", w[0].time)));
        }
        let present = records.iter().filter(|r| r.value.is_some()).count();
        if present < 3 {
            return Err(AlleeError::InvalidInput(format!(
                "need at least 3 present observations, got {present}"
            )));
        }
        Ok(Observations { records })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    /// Time of the first record; model time zero.
    pub fn origin(&self) -> f64 {
        self.records[0].time
    }

    /// Length of the observation window.
    pub fn span(&self) -> f64 {
        self.records[self.records.len() - 1].time - self.origin()
    }

    pub fn present_count(&self) -> usize {
        self.records.iter().filter(|r| r.value.is_some()).count()
    }

    /// Largest present value.
    pub fn scale(&self) -> f64 {
        self.records.iter().filter_map(|r| r.value).fold(0.0, f64::max)
    }

    fn model_times(&self) -> Vec<f64> {
        let t0 = self.origin();
        self.records.iter().map(|r| r.time - t0).collect()
    }
}

/// The seven calibrated quantities; `theta` is in model time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub x0: f64,
    pub r: f64,
    pub capacity: f64,
    pub ln_a_hi: f64,
    pub ln_a_lo: f64,
    pub eps: f64,
    pub theta: f64,
}

impl CalibrationParams {
    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::new(self.r, self.capacity, self.x0)
    }

    pub fn schedule(&self) -> Result<AlleeSchedule> {
        AlleeSchedule::log_sigmoid(self.ln_a_hi, self.ln_a_lo, self.theta, self.eps, Direction::Increasing)
    }
}

/// Box of start points, in parameter units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartBox {
    pub x0: (f64, f64),
    pub r: (f64, f64),
    pub capacity: (f64, f64),
    /// Range of `g0` (see the module docs).
    pub initial_gap: (f64, f64),
    /// Range of the headroom fraction `q`.
    pub headroom: (f64, f64),
    pub eps: (f64, f64),
    /// Model time.
    pub theta: (f64, f64),
}

impl StartBox {
    /// Ranges scaled to the first value, the largest value and the window length.
    pub fn from_observations(obs: &Observations) -> Self {
        let first = obs.records.iter().find_map(|r| r.value).unwrap_or(1.0);
        let scale = obs.scale();
        let span = obs.span();
        StartBox {
            x0: (0.5 * first, 1.5 * first.min(scale)),
            r: (0.06 / span, 60.0 / span),
            capacity: (scale, 10.0 * scale),
            initial_gap: (1.0, 50.0),
            headroom: (0.05, 0.95),
            eps: (span / 60.0, span * 5.0 / 6.0),
            theta: (-2.0 * span, span),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Step of the forward model in the reported objective.
    pub h: f64,
    /// Coarser step for the multi-start screening; `None` screens at `h`.
    pub screen_h: Option<f64>,
    /// Number of start points.
    pub restarts: usize,
    /// Screened starts refined at `h`.
    pub polish: usize,
    /// Initial simplex edge as a fraction of the start-box width.
    pub simplex_scale: f64,
    pub screen_evals: usize,
    /// Budget of each refinement run.
    pub max_evals: usize,
    /// Offsets the Halton sequence; equal seeds give identical fits.
    pub seed: u64,
    /// `None` derives the box from the data.
    pub bounds: Option<StartBox>,
    /// Model time up to which `a_t < K` is enforced; `None` means twice the
    /// observation window.
    pub feasible_until: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            h: 1e-3,
            screen_h: Some(2e-2),
            restarts: 16,
            polish: 2,
            simplex_scale: 0.1,
            screen_evals: 4_000,
            max_evals: 8_000,
            seed: 0,
            bounds: None,
            feasible_until: None,
        }
    }
}

impl FitConfig {
    fn check(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(AlleeError::Config { key: key.into(), message: msg });
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("fit.h", format!("must be positive, got {}", self.h));
        }
        if let Some(sh) = self.screen_h {
            if !(sh > 0.0 && sh.is_finite()) {
                return bad("fit.screen_h", format!("must be positive, got {sh}"));
            }
        }
        if self.restarts == 0 {
            return bad("fit.restarts", "must be at least 1".into());
        }
        if self.polish == 0 {
            return bad("fit.polish", "must be at least 1".into());
        }
        if !(self.simplex_scale > 0.0) {
            return bad("fit.simplex_scale", format!("must be positive, got {}", self.simplex_scale));
        }
        Ok(())
    }
}

/// Calibrated model and fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub calibration: CalibrationParams,
    pub params: ModelParams,
    pub schedule: AlleeSchedule,
    /// Calendar time of model time zero.
    pub origin: f64,
    /// Mean squared residual over present records.
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Model value at every record, including missing ones.
    pub fitted: Vec<f64>,
    /// `|observed - fitted| / observed`, `None` for missing records.
    pub relative_differences: Vec<Option<f64>>,
    pub records: Vec<Observation>,
    pub h: f64,
}

impl FitResult {
    pub fn max_relative_difference(&self) -> f64 {
        self.relative_differences.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Cubature states at sorted non-negative model times, by linear
/// interpolation between grid points (exact for on-grid times). States after
/// extinction are zero.
fn sample_states(params: &ModelParams, schedule: &AlleeSchedule, h: f64, times: &[f64]) -> Vec<f64> {
    let mut slots = Vec::with_capacity(times.len());
    let mut needed: Vec<usize> = Vec::with_capacity(2 * times.len());
    for &t in times {
        let k = t / h;
        let near = k.round();
        if (k - near).abs() <= 1e-9 * near.max(1.0) {
            slots.push((near as usize, 0.0));
            needed.push(near as usize);
        } else {
            let lo = k.floor();
            slots.push((lo as usize, k - lo));
            needed.push(lo as usize);
            needed.push(lo as usize + 1);
        }
    }
    needed.sort_unstable();
    needed.dedup();
    let steps = *needed.last().unwrap_or(&0);
    let mut values = vec![0.0; needed.len()];
    let mut next = 0;
    if steps == 0 {
        values.iter_mut().for_each(|v| *v = params.x0);
    } else {
        cubature_visit(params, schedule, h, steps, |k, x| {
            while next < needed.len() && needed[next] == k {
                values[next] = x;
                next += 1;
            }
            next < needed.len()
        });
    }
    let at = |k: usize| needed.binary_search(&k).map(|i| values[i]).unwrap_or(0.0);
    slots
        .iter()
        .map(|&(k, w)| if w == 0.0 { at(k) } else { (1.0 - w) * at(k) + w * at(k + 1) })
        .collect()
}

fn mean_squared_residual(obs: &Observations, fitted: &[f64]) -> f64 {
    let (sum, m) = obs
        .records
        .iter()
        .zip(fitted)
        .filter_map(|(r, x)| r.value.map(|v| (v - x) * (v - x)))
        .fold((0.0, 0usize), |(s, m), d| (s + d, m + 1));
    sum / m as f64
}

/// Mean squared residual of the cubature forward model over the present
/// records; time is measured from the first record.
pub fn objective(params: &ModelParams, schedule: &AlleeSchedule, obs: &Observations, h: f64) -> Result<f64> {
    params.check()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(AlleeError::InvalidInput(format!("step size must be positive, got {h}")));
    }
    schedule.ensure_valid(params.capacity, obs.span())?;
    let fitted = sample_states(params, schedule, h, &obs.model_times());
    Ok(mean_squared_residual(obs, &fitted))
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps between the search vector `z` and feasible parameters.
struct Encoding {
    scale: f64,
    span: f64,
    horizon: f64,
}

impl Encoding {
    fn decode(&self, z: &[f64]) -> Option<CalibrationParams> {
        let x0 = z[0] * self.scale;
        let r = z[1].exp();
        let capacity = self.scale * z[2].exp();
        let eps = z[5].exp();
        let theta = z[6] * self.span;
        let ln_k = capacity.ln();
        let depth = (z[3] + softplus(-theta / eps)).exp();
        let ln_a_lo = ln_k - depth;
        let late = (self.horizon - theta) / eps;
        let weight_end = logistic(late);
        let free_end = logistic(-late);
        let used = depth * free_end * logistic(z[4]);
        let ln_a_hi = (ln_a_lo + (depth - used) / weight_end).max(ln_k);
        let p = CalibrationParams {
            x0,
            r,
            capacity,
            ln_a_hi,
            ln_a_lo,
            eps,
            theta,
        };
        let finite = [x0, r, capacity, ln_a_hi, ln_a_lo, eps, theta, ln_k].iter().all(|v| v.is_finite());
        if !finite || !(x0 > 0.0 && x0 < capacity) || !(r > 0.0) || !(eps > 0.0) || !(ln_a_lo < ln_a_hi) {
            return None;
        }
        // a_t increases, so its largest value on [0, horizon] is at the end
        let schedule = p.schedule().ok()?;
        (schedule.log_ratio_unchecked(ln_k, self.horizon) > 0.0).then_some(p)
    }

    fn encode_box(&self, b: &StartBox) -> ([f64; DIM], [f64; DIM]) {
        let map = |x0: f64, r: f64, k: f64, g: f64, q: f64, e: f64, th: f64| {
            [
                x0 / self.scale,
                r.ln(),
                (k / self.scale).ln(),
                g.ln(),
                logit(q),
                e.ln(),
                th / self.span,
            ]
        };
        (
            map(b.x0.0, b.r.0, b.capacity.0, b.initial_gap.0, b.headroom.0, b.eps.0, b.theta.0),
            map(b.x0.1, b.r.1, b.capacity.1, b.initial_gap.1, b.headroom.1, b.eps.1, b.theta.1),
        )
    }
}

fn search_objective(enc: &Encoding, obs: &Observations, times: &[f64], h: f64, z: &[f64]) -> f64 {
    let Some(p) = enc.decode(z) else {
        return f64::INFINITY;
    };
    let (Ok(params), Ok(schedule)) = (p.model(), p.schedule()) else {
        return f64::INFINITY;
    };
    let fitted = sample_states(&params, &schedule, h, times);
    mean_squared_residual(obs, &fitted)
}

/// Multi-start simplex fit.
///
/// Every start from a Halton design over the start box is refined at the
/// screening step; the best `polish` candidates are then refined at `h`, and
/// the best of those is returned.
pub fn fit(obs: &Observations, config: &FitConfig) -> Result<FitResult> {
    config.check()?;
    let span = obs.span();
    if !(span > 0.0) {
        return Err(AlleeError::InvalidInput("observation window has zero length".into()));
    }
    let horizon = config.feasible_until.unwrap_or(2.0 * span).max(span);
    let enc = Encoding {
        scale: obs.scale(),
        span,
        horizon,
    };
    let bounds = config.bounds.unwrap_or_else(|| StartBox::from_observations(obs));
    let (lo, hi) = enc.encode_box(&bounds);
    if lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(AlleeError::Config {
            key: "fit.bounds".into(),
            message: "every range must be non-empty and inside the parameter domain".into(),
        });
    }
    let scale: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| config.simplex_scale * (b - a)).collect();
    let times = obs.model_times();

    let starts: Vec<Vec<f64>> = (0..config.restarts)
        .map(|i| {
            let u = halton(config.seed * config.restarts as u64 + i as u64 + 1, DIM);
            (0..DIM).map(|d| lo[d] + u[d] * (hi[d] - lo[d])).collect()
        })
        .collect();

    let screen_h = config.screen_h.unwrap_or(config.h);
    // an rms residual below 1e-8 of the data scale counts as an exact fit
    let f_floor = 1e-16 * enc.scale * enc.scale;
    let screen_opts = NelderMeadOptions {
        max_evals: config.screen_evals,
        f_tol_rel: 1e-10,
        f_tol_abs: f_floor,
        f_target: f_floor,
        x_tol: 1e-7,
        max_restarts: 3,
        ..NelderMeadOptions::default()
    };
    let screened: Vec<Minimum> = starts
        .par_iter()
        .map(|z| {
            nelder_mead(|z| search_objective(&enc, obs, &times, screen_h, z), z, &scale, &screen_opts)
        })
        .collect();
    let mut evaluations: usize = screened.iter().map(|m| m.evaluations).sum();
    let mut ranked: Vec<usize> = (0..screened.len()).filter(|&i| screened[i].f.is_finite()).collect();
    if ranked.is_empty() {
        return Err(AlleeError::Calibration("no feasible start point".into()));
    }
    ranked.sort_by(|&a, &b| screened[a].f.total_cmp(&screened[b].f).then(a.cmp(&b)));
    ranked.truncate(config.polish);

    let polish_scale: Vec<f64> = scale.iter().map(|s| 0.1 * s).collect();
    // the objective is flat along (theta, ln a_lo) when a_lo is tiny, so the
    // refinement stops on the objective spread rather than on the simplex size
    let polish_opts = NelderMeadOptions {
        max_evals: config.max_evals,
        f_tol_rel: 1e-10,
        f_tol_abs: f_floor,
        f_target: f_floor,
        x_tol: 1e-4,
        max_restarts: 4,
        ..NelderMeadOptions::default()
    };
    let polished: Vec<Minimum> = ranked
        .par_iter()
        .map(|&i| {
            nelder_mead(
                |z| search_objective(&enc, obs, &times, config.h, z),
                &screened[i].x,
                &polish_scale,
                &polish_opts,
            )
        })
        .collect();
    evaluations += polished.iter().map(|m| m.evaluations).sum::<usize>();
    let best = polished
        .iter()
        .filter(|m| m.f.is_finite())
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .ok_or_else(|| AlleeError::Calibration("refinement left the feasible region".into()))?;

    let calibration = enc
        .decode(&best.x)
        .ok_or_else(|| AlleeError::Calibration("best point is infeasible".into()))?;
    let params = calibration.model()?;
    let schedule = calibration.schedule()?;
    let fitted = sample_states(&params, &schedule, config.h, &times);
    let relative_differences = obs
        .records
        .iter()
        .zip(&fitted)
        .map(|(r, x)| r.value.map(|v| (v - x).abs() / v))
        .collect();
    Ok(FitResult {
        calibration,
        params,
        schedule,
        origin: obs.origin(),
        objective: best.f,
        evaluations,
        converged: best.converged,
        fitted,
        relative_differences,
        records: obs.records.clone(),
        h: config.h,
    })
}

/// Forward run of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub trajectory: Trajectory,
    pub extinction: ExtinctionReport,
    pub crossings: Vec<Crossing>,
    /// Model time of the largest state on the grid.
    pub peak_time: f64,
    /// Calendar time of model time zero.
    pub origin: f64,
}

impl Prediction {
    pub fn calendar(&self, t: f64) -> f64 {
        self.origin + t
    }

    /// First crossing of `a_t` from above.
    pub fn first_downward_crossing(&self) -> Option<&Crossing> {
        self.crossings
            .iter()
            .find(|c| c.direction == crate::tipping::CrossingDirection::Downward)
    }
}

/// Cubature trajectory to `horizon` (model time), exact extinction time,
/// crossings of `a_t` and the peak.
pub fn predict(fit: &FitResult, horizon: f64, h: f64) -> Result<Prediction> {
    if !fit.converged {
        return Err(AlleeError::Calibration(
            "fit did not converge; refusing to predict from it".into(),
        ));
    }
    let trajectory = cubature_integrate(&fit.params, &fit.schedule, h, horizon)?;
    let extinction = extinction_time(&fit.params, &fit.schedule, DEFAULT_TAU_TOL, horizon)?;
    let crossings = detect_crossings(&trajectory, &fit.schedule)?;
    let peak = trajectory
        .states
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (k, &x)| if x > acc.1 { (k, x) } else { acc });
    Ok(Prediction {
        peak_time: trajectory.times[peak.0],
        trajectory,
        extinction,
        crossings,
        origin: fit.origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> CalibrationParams {
        CalibrationParams {
            x0: 230_000.0,
            r: 0.02,
            capacity: 1.5e6,
            ln_a_hi: 1.5e6f64.ln() + 1e-4,
            ln_a_lo: 1.5e6f64.ln() - 60.0,
            eps: 12.0,
            theta: -20.0,
        }
    }

    fn synthetic(p: &CalibrationParams, missing: Option<usize>) -> Observations {
        let times: Vec<f64> = (0..13).map(|i| 1963.0 + 5.0 * i as f64).collect();
        let model = p.model().unwrap();
        let sched = p.schedule().unwrap();
        let xs = sample_states(&model, &sched, 1e-3, &times.iter().map(|t| t - 1963.0).collect::<Vec<_>>());
        let recs = times
            .iter()
            .zip(xs)
            .enumerate()
            .map(|(i, (&t, x))| Observation {
                time: t,
                value: (Some(i) != missing).then_some(x),
            })
            .collect();
        Observations::new(recs).unwrap()
    }

    #[test]
    fn observations_validation() {
        let o = |t: f64, v: Option<f64>| Observation { time: t, value: v };
        assert!(Observations::new(vec![o(0.0, Some(1.0)), o(1.0, Some(1.0))]).is_err());
        assert!(Observations::new(vec![o(0.0, Some(1.0)), o(0.0, Some(2.0)), o(1.0, Some(1.0))]).is_err());
        assert!(Observations::new(vec![o(0.0, Some(-1.0)), o(1.0, Some(2.0)), o(2.0, Some(1.0))]).is_err());
        let obs = Observations::new(vec![o(2.0, Some(1.0)), o(0.0, Some(3.0)), o(1.0, None), o(3.0, Some(2.0))])
            .unwrap();
        assert_eq!(obs.origin(), 0.0);
        assert_eq!(obs.present_count(), 3);
        assert_eq!(obs.scale(), 3.0);
    }

    #[test]
    fn sampler_matches_full_run() {
        let p = truth();
        let (model, sched) = (p.model().unwrap(), p.schedule().unwrap());
        let traj = cubature_integrate(&model, &sched, 0.01, 60.0).unwrap();
        let xs = sample_states(&model, &sched, 0.01, &[0.0, 5.0, 12.345, 60.0]);
        assert_eq!(xs[0], traj.states[0]);
        assert_eq!(xs[1], traj.states[500]);
        let w = 12.345 / 0.01 - 1234.0;
        let interp = (1.0 - w) * traj.states[1234] + w * traj.states[1235];
        assert!((xs[2] - interp).abs() < 1e-9 * interp);
        assert_eq!(xs[3], traj.states[6000]);
    }

    #[test]
    fn objective_zero_and_single_perturbation() {
        let p = truth();
        let obs = synthetic(&p, Some(8));
        let (model, sched) = (p.model().unwrap(), p.schedule().unwrap());
        let scale = obs.scale();
        assert!(objective(&model, &sched, &obs, 1e-3).unwrap() <= 1e-18 * scale * scale);
        let delta = 1234.5;
        let mut recs = obs.records().to_vec();
        recs[3].value = recs[3].value.map(|v| v + delta);
        let perturbed = Observations::new(recs).unwrap();
        let f = objective(&model, &sched, &perturbed, 1e-3).unwrap();
        let m = perturbed.present_count() as f64;
        assert!((f - delta * delta / m).abs() <= 1e-6 * delta * delta / m);
    }

    #[test]
    fn decoded_points_are_feasible() {
        let obs = synthetic(&truth(), None);
        let enc = Encoding {
            scale: obs.scale(),
            span: obs.span(),
            horizon: 2.0 * obs.span(),
        };
        let (lo, hi) = enc.encode_box(&StartBox::from_observations(&obs));
        for i in 1..200u64 {
            let u = halton(i, DIM);
            let z: Vec<f64> = (0..DIM).map(|d| lo[d] + (2.0 * u[d] - 0.5) * (hi[d] - lo[d])).collect();
            if let Some(p) = enc.decode(&z) {
                let k = p.capacity.ln();
                assert!(p.ln_a_lo <= k && k <= p.ln_a_hi);
                let s = p.schedule().unwrap();
                s.ensure_valid(p.capacity, enc.horizon).unwrap();
            }
        }
    }

    #[test]
    fn encoding_round_trips_through_box_corners() {
        let obs = synthetic(&truth(), None);
        let enc = Encoding {
            scale: obs.scale(),
            span: obs.span(),
            horizon: 2.0 * obs.span(),
        };
        let b = StartBox::from_observations(&obs);
        let (lo, _) = enc.encode_box(&b);
        let p = enc.decode(&lo).unwrap();
        assert!((p.x0 - b.x0.0).abs() < 1e-6 * b.x0.0);
        assert!((p.eps - b.eps.0).abs() < 1e-12 * b.eps.0);
        assert!((p.theta - b.theta.0).abs() < 1e-9);
    }

    #[test]
    fn predict_requires_convergence() {
        let p = truth();
        let obs = synthetic(&p, None);
        let fit = FitResult {
            calibration: p,
            params: p.model().unwrap(),
            schedule: p.schedule().unwrap(),
            origin: obs.origin(),
            objective: 0.0,
            evaluations: 0,
            converged: false,
            fitted: vec![],
            relative_differences: vec![],
            records: vec![],
            h: 1e-3,
        };
        assert!(predict(&fit, 100.0, 1e-2).is_err());
        let ok = FitResult { converged: true, ..fit };
        let pred = predict(&ok, 100.0, 1e-2).unwrap();
        assert!(pred.peak_time > 0.0);
        let early = predict(&ok, 1.0, 1e-2).unwrap();
        assert!(early.crossings.is_empty());
    }
}
