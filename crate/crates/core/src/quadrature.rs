//! Summation and trapezoid-based quadrature helpers.

use crate::error::{AlleeError, Result};

/// Neumaier's compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Smallest panel count tried by [`romberg`].
const MIN_LEVEL: u32 = 2;
/// Largest refinement level: `2^MAX_LEVEL` panels.
pub const MAX_LEVEL: u32 = 22;

/// Romberg extrapolation over a sequence of composite trapezoid estimates.
///
/// `trapezoid(n)` must return the composite trapezoid value on `n` uniform
/// panels. Panel counts double at every level; the diagonal of the
/// Richardson table is accepted once two successive entries differ by at
/// most `tol` (absolute).
pub fn romberg<F>(mut trapezoid: F, tol: f64) -> Result<f64>
where
    F: FnMut(usize) -> f64,
{
    let mut prev_row: Vec<f64> = Vec::new();
    let mut last_change = f64::INFINITY;
    for level in 0..=MAX_LEVEL {
        let panels = 1usize << level;
        let mut row = Vec::with_capacity(prev_row.len() + 1);
        row.push(trapezoid(panels));
        let mut factor = 4.0;
        for j in 0..prev_row.len() {
            let refined = row[j] + (row[j] - prev_row[j]) / (factor - 1.0);
            row.push(refined);
            factor *= 4.0;
        }
        if let (Some(&best), Some(&prev_best)) = (row.last(), prev_row.last()) {
            last_change = (best - prev_best).abs();
            if level >= MIN_LEVEL && last_change <= tol {
                return Ok(best);
            }
            if !best.is_finite() {
                break;
            }
        }
        prev_row = row;
    }
    Err(AlleeError::QuadratureNotConverged {
        tol,
        panels: 1 << MAX_LEVEL,
        change: last_change,
    })
}

/// Composite trapezoid of `f` over `[a, b]` with `n` uniform panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * (f(a) + f(b)));
    for i in 1..n {
        acc.add(f(a + i as f64 * h));
    }
    acc.value() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        let mut naive = 0.0;
        c.add(1.0);
        naive += 1.0;
        for _ in 0..10_000 {
            c.add(1e-16);
            naive += 1e-16;
        }
        assert_eq!(naive, 1.0);
        assert!((c.value() - (1.0 + 1e-12)).abs() < 1e-20);
    }

    #[test]
    fn romberg_integrates_smooth_functions() {
        let v = romberg(|n| trapezoid(f64::sin, 0.0, std::f64::consts::PI, n), 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = romberg(|n| trapezoid(|x| (-x * x).exp(), 0.0, 1.0, n), 1e-13).unwrap();
        assert!((v - 0.746_824_132_812_427).abs() < 1e-12);
    }

    #[test]
    fn romberg_reports_failure() {
        let err = romberg(|n| n as f64, 1e-3).unwrap_err();
        assert!(matches!(err, AlleeError::QuadratureNotConverged { .. }));
    }
}
