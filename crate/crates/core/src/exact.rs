//! Closed-form solution of the logarithmic Allee model.
//!
//! The substitution `W = 1 / (ln K - ln X)` turns
//! `X' = r X (ln K - ln X)(ln X - ln a_t)` into the linear equation
//! `W' = r (ln(K/a_t) W - 1)`, whose solution is `W_t = I_t exp(r G_t)` with
//!
//! ```text
//! G_t = ∫_0^t ln(K/a_s) ds
//! L_t = r ∫_0^t exp(-r G_s) ds
//! I_t = 1/(ln K - ln X_0) - L_t
//! ```
//!
//! The state is `X_t = K exp(-exp(-r G_t) / I_t)` while `I_t > 0` and zero
//! from the first root `tau` of `I` onwards.
//!
//! `G` and `L` are evaluated by Romberg-accelerated composite trapezoid rules;
//! the inner integral is accumulated on the same grid as the outer one so each
//! refinement level costs one pass.

use crate::error::{AlleeError, Result};
use crate::quadrature::{romberg, CompensatedSum};
use crate::schedules::AlleeSchedule;

/// Default absolute tolerance of the quadrature engine.
pub const DEFAULT_QUAD_TOL: f64 = 1e-11;
/// Default bisection width for extinction times.
pub const DEFAULT_TAU_TOL: f64 = 1e-8;

/// Growth rate `r`, carrying capacity `K` and initial state `X_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub r: f64,
    pub capacity: f64,
    pub x0: f64,
}

impl ModelParams {
    pub fn new(r: f64, capacity: f64, x0: f64) -> Result<Self> {
        let p = ModelParams { r, capacity, x0 };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(AlleeError::InvalidParams(format!(
                "growth rate must be positive, got {}",
                self.r
            )));
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(AlleeError::InvalidParams(format!(
                "carrying capacity must be positive, got {}",
                self.capacity
            )));
        }
        if !(self.x0 >= 0.0 && self.x0 <= self.capacity) {
            return Err(AlleeError::InvalidParams(format!(
                "initial state must lie in [0, K] = [0, {}], got {}",
                self.capacity, self.x0
            )));
        }
        Ok(())
    }

    pub fn with_x0(&self, x0: f64) -> Self {
        ModelParams { x0, ..*self }
    }

    /// `I_0 = 1 / (ln K - ln X_0)`; `+inf` at `X_0 = K` and `0` at `X_0 = 0`.
    pub fn i0(&self) -> f64 {
        if self.x0 >= self.capacity {
            f64::INFINITY
        } else if self.x0 <= 0.0 {
            0.0
        } else {
            1.0 / (self.capacity.ln() - self.x0.ln())
        }
    }
}

/// How an extinction time was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMethod {
    ClosedForm,
    Bisection,
}

impl TauMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TauMethod::ClosedForm => "closed-form",
            TauMethod::Bisection => "bisection",
        }
    }
}

/// Extinction time together with the diagnostics that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionReport {
    /// `+inf` when `I` stays positive up to the search horizon.
    pub tau: f64,
    pub i0: f64,
    /// `L` at the search horizon.
    pub l_horizon: f64,
    pub horizon: f64,
    pub method: TauMethod,
    pub tolerance: f64,
}

impl ExtinctionReport {
    pub fn is_finite(&self) -> bool {
        self.tau.is_finite()
    }
}

/// `W = 1 / (ln K - ln x)` for `0 < x < K`.
pub fn to_w(x: f64, capacity: f64) -> Result<f64> {
    if !(x > 0.0 && x < capacity) {
        return Err(AlleeError::Domain(format!(
            "W-transform needs 0 < x < K, got x = {x}, K = {capacity}"
        )));
    }
    Ok(1.0 / (capacity.ln() - x.ln()))
}

/// Inverse of [`to_w`]: `x = K exp(-1/w)`.
pub fn from_w(w: f64, capacity: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(AlleeError::Domain(format!(
            "W = {w} is not positive: the solution has reached extinction"
        )));
    }
    Ok(capacity * (-1.0 / w).exp())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(AlleeError::InvalidInput(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

/// `G_t = ∫_0^t ln(K/a_s) ds`.
pub fn cumulative_log_integral(
    schedule: &AlleeSchedule,
    capacity: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if let Some(a) = schedule.is_constant() {
        return Ok(t * (capacity.ln() - a.ln()));
    }
    let ln_k = capacity.ln();
    romberg(
        |n| {
            let h = t / n as f64;
            let mut acc = CompensatedSum::new();
            acc.add(0.5 * (schedule.log_ratio_unchecked(ln_k, 0.0) + schedule.log_ratio_unchecked(ln_k, t)));
            for i in 1..n {
                acc.add(schedule.log_ratio_unchecked(ln_k, i as f64 * h));
            }
            acc.value() * h
        },
        tol,
    )
}

/// Outer trapezoid for `L_t` on `n` panels, reusing the cumulative inner
/// trapezoid at the outer nodes.
fn nested_l_trapezoid(r: f64, schedule: &AlleeSchedule, ln_k: f64, t: f64, n: usize) -> f64 {
    let h = t / n as f64;
    let mut inner = CompensatedSum::new();
    let mut outer = CompensatedSum::new();
    let mut g_prev = schedule.log_ratio_unchecked(ln_k, 0.0);
    outer.add(0.5);
    for i in 1..=n {
        let g = schedule.log_ratio_unchecked(ln_k, i as f64 * h);
        inner.add(0.5 * h * (g_prev + g));
        g_prev = g;
        let f = (-r * inner.value()).exp();
        outer.add(if i == n { 0.5 * f } else { f });
    }
    r * h * outer.value()
}

/// `L_t = r ∫_0^t exp(-r G_s) ds`.
pub fn big_l(params: &ModelParams, schedule: &AlleeSchedule, t: f64, tol: f64) -> Result<f64> {
    params.check()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if let Some(a) = schedule.is_constant() {
        let g = params.capacity.ln() - a.ln();
        return Ok(constant_l(params.r, g, t));
    }
    let ln_k = params.capacity.ln();
    romberg(|n| nested_l_trapezoid(params.r, schedule, ln_k, t, n), tol)
}

fn constant_l(r: f64, g: f64, t: f64) -> f64 {
    // (1 - e^{-r g t}) / g, written with expm1 for small arguments
    -(-r * g * t).exp_m1() / g
}

/// `I_t = 1/(ln K - ln X_0) - L_t`; `+inf` when `X_0 = K`.
pub fn big_i(params: &ModelParams, schedule: &AlleeSchedule, t: f64, tol: f64) -> Result<f64> {
    params.check()?;
    if params.x0 == 0.0 {
        return Err(AlleeError::Domain(
            "I is undefined for X_0 = 0 (the zero solution applies)".into(),
        ));
    }
    if params.x0 >= params.capacity {
        return Ok(f64::INFINITY);
    }
    Ok(params.i0() - big_l(params, schedule, t, tol)?)
}

/// Closed-form extinction time for a constant Allee parameter.
///
/// Returns `+inf` when `x0 >= a` (no finite extinction).
pub fn closed_form_tau(r: f64, capacity: f64, a: f64, x0: f64) -> Result<f64> {
    if !(r > 0.0 && capacity > 0.0 && a > 0.0 && a < capacity) {
        return Err(AlleeError::InvalidParams(format!(
            "closed form needs r > 0 and 0 < a < K (r = {r}, a = {a}, K = {capacity})"
        )));
    }
    if !(x0 > 0.0) {
        return Err(AlleeError::Domain(format!(
            "closed-form extinction time needs x0 > 0, got {x0}"
        )));
    }
    if x0 >= a {
        return Ok(f64::INFINITY);
    }
    let ln_k = capacity.ln();
    let g = ln_k - a.ln();
    Ok(((ln_k - x0.ln()) / (a.ln() - x0.ln())).ln() / (r * g))
}

/// Closed-form state for a constant Allee parameter.
pub fn closed_form_state(r: f64, capacity: f64, a: f64, x0: f64, t: f64) -> Result<f64> {
    ModelParams::new(r, capacity, x0)?;
    check_time(t)?;
    if !(a > 0.0 && a < capacity) {
        return Err(AlleeError::InvalidParams(format!(
            "closed form needs 0 < a < K, got a = {a}"
        )));
    }
    if x0 == 0.0 || x0 == capacity {
        return Ok(x0);
    }
    let g = capacity.ln() - a.ln();
    let decay = (-r * g * t).exp();
    let i_t = 1.0 / (capacity.ln() - x0.ln()) - constant_l(r, g, t);
    if i_t <= 0.0 {
        return Ok(0.0);
    }
    Ok(capacity * (-decay / i_t).exp())
}

/// Exact state `X_t` for any schedule.
pub fn exact_state(params: &ModelParams, schedule: &AlleeSchedule, t: f64, tol: f64) -> Result<f64> {
    params.check()?;
    check_time(t)?;
    if params.x0 == 0.0 || params.x0 == params.capacity {
        return Ok(params.x0);
    }
    let i_t = params.i0() - big_l(params, schedule, t, tol)?;
    if i_t <= 0.0 {
        return Ok(0.0);
    }
    let g = cumulative_log_integral(schedule, params.capacity, t, tol)?;
    let x = params.capacity * (-(-params.r * g).exp() / i_t).exp();
    Ok(x.clamp(0.0, params.capacity))
}

/// `W_t = I_t exp(r G_t)`, positive before extinction.
pub fn w_state(params: &ModelParams, schedule: &AlleeSchedule, t: f64, tol: f64) -> Result<f64> {
    let i_t = big_i(params, schedule, t, tol)?;
    let g = cumulative_log_integral(schedule, params.capacity, t, tol)?;
    Ok(i_t * (params.r * g).exp())
}

/// First root of `I` on `[0, horizon]`.
///
/// Constant schedules use the closed form. Otherwise `I(horizon)` decides
/// whether a root exists and bisection on the monotone function `I` narrows
/// it to `tol`.
pub fn extinction_time(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    tol: f64,
    horizon: f64,
) -> Result<ExtinctionReport> {
    extinction_time_with(params, schedule, tol, horizon, DEFAULT_QUAD_TOL)
}

/// [`extinction_time`] with an explicit quadrature tolerance.
pub fn extinction_time_with(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    tol: f64,
    horizon: f64,
    quad_tol: f64,
) -> Result<ExtinctionReport> {
    params.check()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(AlleeError::InvalidInput(format!(
            "search horizon must be positive, got {horizon}"
        )));
    }
    if !(tol > 0.0) {
        return Err(AlleeError::InvalidInput(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }
    let i0 = params.i0();
    let report = |tau, l_horizon, method| ExtinctionReport {
        tau,
        i0,
        l_horizon,
        horizon,
        method,
        tolerance: tol,
    };
    if params.x0 == 0.0 {
        return Ok(report(0.0, 0.0, TauMethod::ClosedForm));
    }
    if let Some(a) = schedule.is_constant() {
        let g = params.capacity.ln() - a.ln();
        let l_h = constant_l(params.r, g, horizon);
        if params.x0 >= params.capacity {
            return Ok(report(f64::INFINITY, l_h, TauMethod::ClosedForm));
        }
        let tau = closed_form_tau(params.r, params.capacity, a, params.x0)?;
        let tau = if tau > horizon { f64::INFINITY } else { tau };
        return Ok(report(tau, l_h, TauMethod::ClosedForm));
    }
    let l_h = big_l(params, schedule, horizon, quad_tol)?;
    if params.x0 >= params.capacity || i0 - l_h > 0.0 {
        return Ok(report(f64::INFINITY, l_h, TauMethod::Bisection));
    }
    let (mut lo, mut hi) = (0.0, horizon);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if i0 - big_l(params, schedule, mid, quad_tol)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(report(0.5 * (lo + hi), l_h, TauMethod::Bisection))
}

/// 3-point Gauss-Legendre nodes on `[-1, 1]` and their weights.
const GAUSS_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
/// Largest sub-interval width used by [`exact_states_on_grid`].
const SAMPLER_MAX_WIDTH: f64 = 1e-3;

/// Exact states at `t_k = k h` for `k = 0..=steps` in a single sweep.
///
/// `G` and `L` are advanced interval by interval with nested 3-point
/// Gauss-Legendre rules (sub-intervals no wider than `1e-3`), which is far
/// cheaper than independent quadratures at every grid point and accurate to
/// roughly machine precision for smooth schedules.
pub fn exact_states_on_grid(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    params.check()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(AlleeError::InvalidInput(format!("step size must be positive, got {h}")));
    }
    if params.x0 == 0.0 || params.x0 == params.capacity {
        return Ok(vec![params.x0; steps + 1]);
    }
    let (r, capacity) = (params.r, params.capacity);
    let ln_k = capacity.ln();
    let i0 = params.i0();
    let g = |t: f64| schedule.log_ratio_unchecked(ln_k, t);
    let sub = (h / SAMPLER_MAX_WIDTH).ceil().max(1.0) as usize;
    let w = h / sub as f64;

    let mut out = Vec::with_capacity(steps + 1);
    out.push(params.x0);
    let mut g_acc = CompensatedSum::new();
    let mut l_acc = CompensatedSum::new();
    let mut extinct = false;
    for k in 0..steps {
        if extinct {
            out.push(0.0);
            continue;
        }
        for j in 0..sub {
            let a = k as f64 * h + j as f64 * w;
            let g_start = g_acc.value();
            let mut l_piece = 0.0;
            for (xi, wi) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS.iter()) {
                let s = a + 0.5 * w * (1.0 + xi);
                let half = 0.5 * (s - a);
                let partial: f64 = GAUSS_NODES
                    .iter()
                    .zip(GAUSS_WEIGHTS.iter())
                    .map(|(xj, wj)| wj * g(a + half * (1.0 + xj)))
                    .sum::<f64>()
                    * half;
                l_piece += wi * (-r * (g_start + partial)).exp();
            }
            let g_piece: f64 = GAUSS_NODES
                .iter()
                .zip(GAUSS_WEIGHTS.iter())
                .map(|(xi, wi)| wi * g(a + 0.5 * w * (1.0 + xi)))
                .sum::<f64>()
                * 0.5
                * w;
            l_acc.add(r * 0.5 * w * l_piece);
            g_acc.add(g_piece);
        }
        let i_t = i0 - l_acc.value();
        if i_t <= 0.0 {
            extinct = true;
            out.push(0.0);
            continue;
        }
        let x = capacity * (-(-r * g_acc.value()).exp() / i_t).exp();
        out.push(x.clamp(0.0, capacity));
    }
    Ok(out)
}
