//! Time-dependent Allee parameter laws.
//!
//! Every schedule is an immutable value. Construction checks the shape
//! invariants of each family; [`AlleeSchedule::validate`] checks the
//! model-level requirement `0 < a_t < K` on a sampling grid.

use std::f64::consts::PI;

use crate::error::{AlleeError, Result};

/// Default number of samples used by [`AlleeSchedule::validate`].
pub const DEFAULT_VALIDATION_GRID: usize = 10_001;

/// Direction of a sigmoidal transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    /// Sign in front of `(t - theta) / eps` in the logistic denominator.
    fn exponent_sign(self) -> f64 {
        match self {
            Direction::Increasing => -1.0,
            Direction::Decreasing => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = AlleeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "increasing" | "inc" | "up" => Ok(Direction::Increasing),
            "decreasing" | "dec" | "down" => Ok(Direction::Decreasing),
            other => Err(AlleeError::InvalidSchedule(format!(
                "unknown direction `{other}` (expected increasing|decreasing)"
            ))),
        }
    }
}

/// Logistic transition between two levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigmoid {
    pub(crate) hi: f64,
    pub(crate) lo: f64,
    pub(crate) theta: f64,
    pub(crate) eps: f64,
    pub(crate) direction: Direction,
}

impl Sigmoid {
    fn new(hi: f64, lo: f64, theta: f64, eps: f64, direction: Direction) -> Result<Self> {
        if !(hi.is_finite() && lo.is_finite() && theta.is_finite() && eps.is_finite()) {
            return Err(AlleeError::InvalidSchedule(
                "sigmoid fields must be finite".into(),
            ));
        }
        if lo >= hi {
            return Err(AlleeError::InvalidSchedule(format!(
                "sigmoid requires lower level < upper level, got {lo} >= {hi}"
            )));
        }
        if eps <= 0.0 {
            return Err(AlleeError::InvalidSchedule(format!(
                "sigmoid width must be positive, got {eps}"
            )));
        }
        Ok(Sigmoid {
            hi,
            lo,
            theta,
            eps,
            direction,
        })
    }

    /// Logistic weight in `[0, 1]` attached to the upper level.
    fn weight(&self, t: f64) -> f64 {
        let z = self.direction.exponent_sign() * (t - self.theta) / self.eps;
        1.0 / (1.0 + z.exp())
    }

    /// `1 - weight(t)`, computed without cancellation.
    fn complement(&self, t: f64) -> f64 {
        let z = self.direction.exponent_sign() * (t - self.theta) / self.eps;
        1.0 / (1.0 + (-z).exp())
    }

    fn value(&self, t: f64) -> f64 {
        (self.hi - self.lo) * self.weight(t) + self.lo
    }

    /// `c - value(t)` written as `(c - hi) + (hi - lo) * complement(t)`, which
    /// stays accurate when `hi - lo` is huge and `c` is close to `hi`.
    fn gap_below(&self, c: f64, t: f64) -> f64 {
        (c - self.hi) + (self.hi - self.lo) * self.complement(t)
    }

    pub fn upper(&self) -> f64 {
        self.hi
    }

    pub fn lower(&self) -> f64 {
        self.lo
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

/// Out-of-range behaviour of a tabulated schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extrapolation {
    /// Hold the first/last knot value.
    #[default]
    Clamp,
    /// Reject queries outside the knot range in [`AlleeSchedule::eval`].
    Strict,
}

/// Piecewise-linear schedule through `(time, value)` knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    times: Vec<f64>,
    values: Vec<f64>,
    extrapolation: Extrapolation,
}

impl Tabulated {
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    fn value(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        // first knot strictly greater than t
        let hi = self.times.partition_point(|&k| k <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.values[lo] + w * (self.values[hi] - self.values[lo])
    }
}

/// Time-dependent Allee parameter `a_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlleeSchedule {
    Constant { a: f64 },
    Sigmoid(Sigmoid),
    /// Sigmoid transition of `ln a_t` between `ln lo` and `ln hi`.
    ///
    /// Stored in log space so that extreme lower levels (far below the
    /// smallest positive double) stay representable.
    LogSigmoid(Sigmoid),
    Oscillatory { amp: f64, base: f64, period: f64 },
    Tabulated(Tabulated),
}

/// First sample where `0 < a_t < K` fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub value: f64,
}

impl AlleeSchedule {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(AlleeError::InvalidSchedule(format!(
                "constant Allee parameter must be positive, got {a}"
            )));
        }
        Ok(AlleeSchedule::Constant { a })
    }

    pub fn sigmoid(a_hi: f64, a_lo: f64, theta: f64, eps: f64, direction: Direction) -> Result<Self> {
        if a_lo <= 0.0 {
            return Err(AlleeError::InvalidSchedule(format!(
                "sigmoid lower level must be positive, got {a_lo}"
            )));
        }
        Sigmoid::new(a_hi, a_lo, theta, eps, direction).map(AlleeSchedule::Sigmoid)
    }

    /// Log-sigmoid from its levels in log space (`ln a_hi`, `ln a_lo`).
    pub fn log_sigmoid(
        ln_hi: f64,
        ln_lo: f64,
        theta: f64,
        eps: f64,
        direction: Direction,
    ) -> Result<Self> {
        Sigmoid::new(ln_hi, ln_lo, theta, eps, direction).map(AlleeSchedule::LogSigmoid)
    }

    pub fn oscillatory(amp: f64, base: f64, period: f64) -> Result<Self> {
        if !(amp.is_finite() && base.is_finite() && period.is_finite()) {
            return Err(AlleeError::InvalidSchedule(
                "oscillatory fields must be finite".into(),
            ));
        }
        if amp < 0.0 || base <= 0.0 || period <= 0.0 {
            return Err(AlleeError::InvalidSchedule(format!(
                "oscillatory schedule needs amp >= 0, base > 0, period > 0 (got {amp}, {base}, {period})"
            )));
        }
        Ok(AlleeSchedule::Oscillatory { amp, base, period })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>, extrapolation: Extrapolation) -> Result<Self> {
        if knots.is_empty() {
            return Err(AlleeError::InvalidSchedule(
                "tabulated schedule needs at least one knot".into(),
            ));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(AlleeError::InvalidSchedule(format!(
                    "knot times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(t, v)) = knots.iter().find(|(t, v)| !(t.is_finite() && v.is_finite() && *v > 0.0)) {
            return Err(AlleeError::InvalidSchedule(format!(
                "knot ({t}, {v}) must be finite with a positive value"
            )));
        }
        let (times, values) = knots.into_iter().unzip();
        Ok(AlleeSchedule::Tabulated(Tabulated {
            times,
            values,
            extrapolation,
        }))
    }

    /// `a_t`, with tabulated schedules clamped outside their knot range.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            AlleeSchedule::Constant { a } => *a,
            AlleeSchedule::Sigmoid(s) => s.value(t),
            AlleeSchedule::LogSigmoid(s) => s.value(t).exp(),
            AlleeSchedule::Oscillatory { amp, base, period } => {
                let s = (2.0 * PI * t / period).sin();
                amp * s * s + base
            }
            AlleeSchedule::Tabulated(tab) => tab.value(t),
        }
    }

    /// `ln a_t`, evaluated directly in log space for log-sigmoids.
    #[inline]
    pub fn ln_value(&self, t: f64) -> f64 {
        match self {
            AlleeSchedule::LogSigmoid(s) => s.value(t),
            _ => self.value(t).ln(),
        }
    }

    /// `a_t`, honouring strict tabulated extrapolation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if let AlleeSchedule::Tabulated(tab) = self {
            if tab.extrapolation == Extrapolation::Strict {
                let (start, end) = (tab.times[0], tab.times[tab.times.len() - 1]);
                if t < start || t > end {
                    return Err(AlleeError::OutsideKnots { t, start, end });
                }
            }
        }
        Ok(self.value(t))
    }

    /// `ln K - ln a_t`, positive whenever `a_t < K`.
    pub fn log_ratio(&self, capacity: f64, t: f64) -> Result<f64> {
        let a = self.eval(t)?;
        let g = self.log_ratio_unchecked(capacity.ln(), t);
        if !(g > 0.0) || !(a > 0.0) {
            return Err(AlleeError::ScheduleViolation {
                t,
                value: a,
                capacity,
            });
        }
        Ok(g)
    }

    /// Integrand `ln(K / a_t)` without the invariant check.
    #[inline]
    pub(crate) fn log_ratio_unchecked(&self, capacity_ln: f64, t: f64) -> f64 {
        match self {
            AlleeSchedule::LogSigmoid(s) => s.gap_below(capacity_ln, t),
            _ => capacity_ln - self.ln_value(t),
        }
    }

    /// Samples `a_t` on `grid` uniform points of `[start, start + horizon]` and
    /// reports the first point where `0 < a_t < K` fails.
    pub fn validate_from(
        &self,
        capacity: f64,
        start: f64,
        horizon: f64,
        grid: usize,
    ) -> std::result::Result<(), Violation> {
        let grid = grid.max(2);
        let ln_k = capacity.ln();
        for i in 0..grid {
            let t = start + horizon * i as f64 / (grid - 1) as f64;
            let ln_a = self.ln_value(t);
            let positive = match self {
                AlleeSchedule::LogSigmoid(_) => ln_a.is_finite(),
                _ => self.value(t) > 0.0,
            };
            if !positive || !(self.log_ratio_unchecked(ln_k, t) > 0.0) {
                return Err(Violation {
                    t,
                    value: self.value(t),
                });
            }
        }
        Ok(())
    }

    /// [`validate_from`](Self::validate_from) over `[0, horizon]`.
    pub fn validate(&self, capacity: f64, horizon: f64, grid: usize) -> std::result::Result<(), Violation> {
        self.validate_from(capacity, 0.0, horizon, grid)
    }

    /// Validation as a `Result` carrying [`AlleeError::ScheduleViolation`].
    pub fn ensure_valid(&self, capacity: f64, horizon: f64) -> Result<()> {
        self.validate(capacity, horizon.max(0.0), DEFAULT_VALIDATION_GRID)
            .map_err(|v| AlleeError::ScheduleViolation {
                t: v.t,
                value: v.value,
                capacity,
            })
    }

    /// An upper bound of `a_t` over all times.
    pub fn supremum(&self) -> f64 {
        match self {
            AlleeSchedule::Constant { a } => *a,
            AlleeSchedule::Sigmoid(s) => s.hi,
            AlleeSchedule::LogSigmoid(s) => s.hi.exp(),
            AlleeSchedule::Oscillatory { amp, base, .. } => amp + base,
            AlleeSchedule::Tabulated(tab) => tab.values.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            AlleeSchedule::Constant { a } => Some(*a),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AlleeSchedule::Constant { .. } => "constant",
            AlleeSchedule::Sigmoid(_) => "sigmoid",
            AlleeSchedule::LogSigmoid(_) => "log-sigmoid",
            AlleeSchedule::Oscillatory { .. } => "oscillatory",
            AlleeSchedule::Tabulated(_) => "tabulated",
        }
    }
}
