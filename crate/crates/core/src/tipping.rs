//! Rate-induced tipping diagnostics.
//!
//! A trajectory R-tips when it crosses the moving Allee threshold from above
//! and then goes extinct. Extinction happens exactly when the cumulative
//! Allee impact `L_inf` exceeds `1 / (ln K - ln X_0)`, which makes that
//! inequality a necessary condition for R-tipping (and a sufficient one when
//! `a_t` is strictly increasing).

use rayon::prelude::*;

use crate::error::{AlleeError, Result};
use crate::exact::{big_l, cumulative_log_integral, ModelParams};
use crate::integrators::{cubature_integrate, Trajectory};
use crate::schedules::AlleeSchedule;

/// Relative distance to `K` below which a surviving run counts as persisting.
pub const PERSIST_FRACTION: f64 = 1e-3;
/// Default horizon for the sigmoid and oscillatory scenarios.
pub const DEFAULT_HORIZON: f64 = 10.0;
/// Integrand level below which the tail of `L` is considered exhausted.
const TAIL_INTEGRAND_FLOOR: f64 = 1e-14;
/// Largest multiple of the requested horizon explored by [`threshold_check`].
const MAX_HORIZON_DOUBLINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    /// `X` passes from above `a_t` to below it.
    Downward,
    Upward,
}

impl CrossingDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossingDirection::Downward => "downward",
            CrossingDirection::Upward => "upward",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub direction: CrossingDirection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    PersistToCapacity,
    Extinct { tau: f64 },
    Undecided,
}

impl Outcome {
    pub fn is_extinct(&self) -> bool {
        matches!(self, Outcome::Extinct { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::PersistToCapacity => "persist",
            Outcome::Extinct { .. } => "extinct",
            Outcome::Undecided => "undecided",
        }
    }
}

/// Three-valued answer of the integral inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStatus {
    Satisfied,
    NotSatisfied,
    Undecided,
}

/// Result of [`threshold_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCheck {
    pub status: ThresholdStatus,
    /// `L_horizon - 1/(ln K - ln X_0)`.
    pub margin: f64,
    pub l_horizon: f64,
    /// Horizon at which `L` was finally evaluated.
    pub horizon: f64,
    /// Upper bound of `L_inf - L_horizon`.
    pub tail_bound: f64,
}

impl ThresholdCheck {
    pub fn satisfied(&self) -> bool {
        self.status == ThresholdStatus::Satisfied
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TippingVerdict {
    pub x0: f64,
    pub crossings: Vec<Crossing>,
    pub outcome: Outcome,
    pub r_tipped: bool,
    pub threshold_satisfied: bool,
    pub threshold: ThresholdCheck,
}

impl TippingVerdict {
    pub fn downward_crossings(&self) -> usize {
        self.crossings
            .iter()
            .filter(|c| c.direction == CrossingDirection::Downward)
            .count()
    }
}

/// Sign changes of `X_k - a_{t_k}` along the grid.
///
/// Crossing times are linearly interpolated inside the grid interval. Touching
/// `a_t` without a change of sign is not a crossing.
pub fn detect_crossings(traj: &Trajectory, schedule: &AlleeSchedule) -> Result<Vec<Crossing>> {
    if traj.is_empty() {
        return Err(AlleeError::InvalidInput("empty trajectory".into()));
    }
    let mut out = Vec::new();
    // last grid point with a non-zero gap
    let mut last: Option<(f64, f64)> = None;
    for (t, x) in traj.points() {
        let gap = x - schedule.value(t);
        if gap == 0.0 {
            continue;
        }
        if let Some((t_prev, gap_prev)) = last {
            if gap_prev.signum() != gap.signum() {
                let time = t_prev + (t - t_prev) * gap_prev / (gap_prev - gap);
                let direction = if gap_prev > 0.0 {
                    CrossingDirection::Downward
                } else {
                    CrossingDirection::Upward
                };
                out.push(Crossing { time, direction });
            }
        }
        last = Some((t, gap));
    }
    Ok(out)
}

/// Evaluates the integral inequality `L_T > 1/(ln K - ln X_0)` at `T = horizon`.
///
/// `L_T` is a lower bound of `L_inf`, so a positive margin is conclusive. The
/// tail is bounded through `a_t <= sup a < K`:
/// `L_inf - L_T <= exp(-r G_T) / ln(K / sup a)`; a margin below minus that
/// bound is conclusive the other way. Anything in between is undecided.
pub fn threshold_check(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    horizon: f64,
    tol: f64,
) -> Result<ThresholdCheck> {
    params.check()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(AlleeError::InvalidInput(format!(
            "threshold horizon must be positive, got {horizon}"
        )));
    }
    let i0 = params.i0();
    let sup_gap = params.capacity.ln() - schedule.supremum().ln();
    let l = big_l(params, schedule, horizon, tol)?;
    let integrand =
        (-params.r * cumulative_log_integral(schedule, params.capacity, horizon, tol)?).exp();
    let tail_bound = if sup_gap > 0.0 {
        integrand / sup_gap
    } else {
        f64::INFINITY
    };
    let margin = l - i0;
    let status = if i0.is_infinite() {
        ThresholdStatus::NotSatisfied
    } else if margin > 0.0 {
        ThresholdStatus::Satisfied
    } else if margin + tail_bound < 0.0 {
        ThresholdStatus::NotSatisfied
    } else {
        ThresholdStatus::Undecided
    };
    Ok(ThresholdCheck {
        status,
        margin,
        l_horizon: l,
        horizon,
        tail_bound,
    })
}

/// [`threshold_check`] with the horizon doubled (up to 64 times the request)
/// until the answer is conclusive or the integrand of `L` drops below `1e-14`.
pub fn asymptotic_threshold(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    horizon: f64,
    tol: f64,
) -> Result<ThresholdCheck> {
    let mut t = horizon;
    let mut check = threshold_check(params, schedule, t, tol)?;
    for _ in 0..MAX_HORIZON_DOUBLINGS {
        let exhausted = check.tail_bound.is_finite()
            && check.tail_bound * (params.capacity.ln() - schedule.supremum().ln())
                < TAIL_INTEGRAND_FLOOR;
        if check.status != ThresholdStatus::Undecided || exhausted {
            break;
        }
        t *= 2.0;
        check = threshold_check(params, schedule, t, tol)?;
    }
    Ok(check)
}

/// Cubature run plus crossing and threshold diagnostics.
///
/// Outcome: extinct when the run reaches zero within the horizon; persisting
/// when the final state is within `1e-3 K` of `K` or when the asymptotic
/// threshold is conclusively not met (then `I` stays positive,
/// `W_t = I_t exp(r G_t) -> inf` and `X_t -> K`); undecided otherwise.
pub fn classify(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
) -> Result<TippingVerdict> {
    classify_with_tol(params, schedule, h, horizon, 1e-10)
}

pub fn classify_with_tol(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    horizon: f64,
    tol: f64,
) -> Result<TippingVerdict> {
    let traj = cubature_integrate(params, schedule, h, horizon)?;
    let crossings = detect_crossings(&traj, schedule)?;
    let threshold = threshold_check(params, schedule, horizon, tol)?;
    let outcome = match traj.extinction_time {
        Some(tau) => Outcome::Extinct { tau },
        None if (params.capacity - traj.final_state()).abs()
            <= PERSIST_FRACTION * params.capacity =>
        {
            Outcome::PersistToCapacity
        }
        None => {
            let asymptotic = asymptotic_threshold(params, schedule, horizon, tol)?;
            if asymptotic.status == ThresholdStatus::NotSatisfied {
                Outcome::PersistToCapacity
            } else {
                Outcome::Undecided
            }
        }
    };
    let r_tipped = outcome.is_extinct()
        && crossings
            .iter()
            .any(|c| c.direction == CrossingDirection::Downward);
    Ok(TippingVerdict {
        x0: params.x0,
        crossings,
        outcome,
        r_tipped,
        threshold_satisfied: threshold.satisfied(),
        threshold,
    })
}

/// [`classify`] for every initial state in `x0_grid`, in parallel, in input order.
pub fn basin_scan(
    template: &ModelParams,
    schedule: &AlleeSchedule,
    x0_grid: &[f64],
    h: f64,
    horizon: f64,
) -> Result<Vec<TippingVerdict>> {
    x0_grid
        .par_iter()
        .map(|&x0| {
            let params = ModelParams::new(template.r, template.capacity, x0)?;
            classify(&params, schedule, h, horizon)
        })
        .collect()
}

/// `X_0 = step * i` for `i = 0..=count`.
pub fn uniform_grid(step: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| step * i as f64).collect()
}
