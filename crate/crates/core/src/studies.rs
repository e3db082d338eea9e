//! Convergence studies and Euler-versus-cubature extinction tables.

use rayon::prelude::*;

use crate::error::{AlleeError, Result};
use crate::exact::{closed_form_state, closed_form_tau, exact_states_on_grid, extinction_time_with, ModelParams};
use crate::integrators::{extinction_estimate, integrate, step_count, IntegratorOptions, Scheme};
use crate::schedules::AlleeSchedule;

/// Quadrature tolerance of exact-engine references.
pub const REFERENCE_QUAD_TOL: f64 = 1e-10;
/// Bisection width of exact-engine extinction times.
pub const REFERENCE_TAU_TOL: f64 = 1e-9;

/// Where reference extinction times come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauReference {
    ClosedForm,
    ExactEngine,
}

/// How pointwise state errors are reduced to one number per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// Largest absolute error over the window.
    #[default]
    Max,
    /// Mean absolute error over the window.
    Mean,
}

impl std::str::FromStr for ErrorMetric {
    type Err = AlleeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(ErrorMetric::Max),
            "mean" => Ok(ErrorMetric::Mean),
            other => Err(AlleeError::InvalidInput(format!(
                "unknown error metric `{other}` (expected max|mean)"
            ))),
        }
    }
}

/// Error of one scheme at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub h: f64,
    pub error: f64,
    /// `log(Err_h / Err_next) / log(h / h_next)` against the next finer row;
    /// `None` on the finest row.
    pub rate: Option<f64>,
}

/// Extinction times of both schemes for one initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionComparisonRow {
    pub x0: f64,
    /// `+inf` when the run survives the horizon.
    pub tau_euler: f64,
    pub tau_cubature: f64,
    /// `tau_euler - tau_cubature`, `+inf` unless both are finite.
    pub difference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub euler: IntegratorOptions,
    /// Search horizon for extinction runs.
    pub horizon: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            euler: IntegratorOptions::default(),
            horizon: 10.0,
        }
    }
}

const SCHEMES: [Scheme; 2] = [Scheme::Euler, Scheme::Cubature];

fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.is_empty() {
        return Err(AlleeError::InvalidInput("step list is empty".into()));
    }
    for h in h_list {
        if !(*h > 0.0 && h.is_finite()) {
            return Err(AlleeError::InvalidInput(format!("step sizes must be positive, got {h}")));
        }
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AlleeError::InvalidInput(
            "step sizes must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn options_for(scheme: Scheme, opts: &StudyOptions) -> IntegratorOptions {
    match scheme {
        Scheme::Euler => opts.euler,
        _ => IntegratorOptions {
            refine_tau: opts.euler.refine_tau,
            ..IntegratorOptions::default()
        },
    }
}

/// Attach rates to per-scheme error lists (`errors[s][i]` belongs to `h_list[i]`).
fn assemble_rows(h_list: &[f64], errors: Vec<f64>) -> Vec<ConvergenceRow> {
    let n = h_list.len();
    let mut rows = Vec::with_capacity(errors.len());
    for (s, scheme) in SCHEMES.iter().enumerate() {
        let errs = &errors[s * n..(s + 1) * n];
        for i in 0..n {
            let rate = (i + 1 < n).then(|| (errs[i] / errs[i + 1]).ln() / (h_list[i] / h_list[i + 1]).ln());
            rows.push(ConvergenceRow {
                scheme: *scheme,
                h: h_list[i],
                error: errs[i],
                rate,
            });
        }
    }
    rows
}

/// Reference extinction time.
pub fn reference_tau(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    reference: TauReference,
    horizon: f64,
) -> Result<f64> {
    let tau = match reference {
        TauReference::ClosedForm => {
            let a = schedule.is_constant().ok_or_else(|| {
                AlleeError::InvalidInput("closed-form reference needs a constant schedule".into())
            })?;
            closed_form_tau(params.r, params.capacity, a, params.x0)?
        }
        TauReference::ExactEngine => {
            extinction_time_with(params, schedule, REFERENCE_TAU_TOL, horizon, REFERENCE_QUAD_TOL)?.tau
        }
    };
    if !tau.is_finite() {
        return Err(AlleeError::InvalidInput(format!(
            "no finite reference extinction time for x0 = {}",
            params.x0
        )));
    }
    Ok(tau)
}

/// Absolute extinction-time errors of both schemes for every `h`.
///
/// Rows are ordered Euler first, then cubature, each by decreasing `h`.
pub fn tau_convergence_study(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h_list: &[f64],
    reference: TauReference,
    opts: &StudyOptions,
) -> Result<Vec<ConvergenceRow>> {
    check_h_list(h_list)?;
    let tau_ref = reference_tau(params, schedule, reference, opts.horizon)?;
    let horizon = opts.horizon.max(tau_ref * 1.5);
    let jobs: Vec<(Scheme, f64)> = SCHEMES
        .iter()
        .flat_map(|s| h_list.iter().map(move |h| (*s, *h)))
        .collect();
    let errors = jobs
        .par_iter()
        .map(|&(scheme, h)| {
            let tau = extinction_estimate(scheme, params, schedule, h, horizon, &options_for(scheme, opts))?
                .ok_or_else(|| {
                    AlleeError::InvalidInput(format!(
                        "{} run with h = {h} did not go extinct by t = {horizon}",
                        scheme.as_str()
                    ))
                })?;
            Ok((tau - tau_ref).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(assemble_rows(h_list, errors))
}

/// Exact states on the grid `k h`, `k = 0..=steps`.
fn reference_states(params: &ModelParams, schedule: &AlleeSchedule, h: f64, steps: usize) -> Result<Vec<f64>> {
    match schedule.is_constant() {
        Some(a) => (0..=steps)
            .map(|k| closed_form_state(params.r, params.capacity, a, params.x0, k as f64 * h))
            .collect(),
        None => exact_states_on_grid(params, schedule, h, steps),
    }
}

/// State errors of both schemes over the grid points in `(0, window_end]`.
pub fn state_convergence_study(
    params: &ModelParams,
    schedule: &AlleeSchedule,
    h_list: &[f64],
    window_end: f64,
    metric: ErrorMetric,
    opts: &StudyOptions,
) -> Result<Vec<ConvergenceRow>> {
    check_h_list(h_list)?;
    if !(window_end > 0.0 && window_end.is_finite()) {
        return Err(AlleeError::InvalidInput(format!(
            "error window (0, {window_end}] is empty"
        )));
    }
    let jobs: Vec<(Scheme, f64)> = SCHEMES
        .iter()
        .flat_map(|s| h_list.iter().map(move |h| (*s, *h)))
        .collect();
    let errors = jobs
        .par_iter()
        .map(|&(scheme, h)| {
            let steps = step_count(h, window_end)?;
            let traj = integrate(scheme, params, schedule, h, window_end, &options_for(scheme, opts))?;
            let exact = reference_states(params, schedule, h, steps)?;
            let diffs = traj.states[1..].iter().zip(&exact[1..]).map(|(x, e)| (x - e).abs());
            Ok(match metric {
                ErrorMetric::Max => diffs.fold(0.0, f64::max),
                ErrorMetric::Mean => diffs.sum::<f64>() / steps as f64,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(assemble_rows(h_list, errors))
}

/// Extinction times of both schemes for every initial state in `x0_grid`.
pub fn extinction_table(
    template: &ModelParams,
    schedule: &AlleeSchedule,
    x0_grid: &[f64],
    h: f64,
    opts: &StudyOptions,
) -> Result<Vec<ExtinctionComparisonRow>> {
    x0_grid
        .par_iter()
        .map(|&x0| {
            let params = template.with_x0(x0);
            params.check()?;
            let run = |scheme| {
                extinction_estimate(scheme, &params, schedule, h, opts.horizon, &options_for(scheme, opts))
                    .map(|t| t.unwrap_or(f64::INFINITY))
            };
            let tau_euler = run(Scheme::Euler)?;
            let tau_cubature = run(Scheme::Cubature)?;
            let difference = if tau_euler.is_finite() && tau_cubature.is_finite() {
                tau_euler - tau_cubature
            } else {
                f64::INFINITY
            };
            Ok(ExtinctionComparisonRow {
                x0,
                tau_euler,
                tau_cubature,
                difference,
            })
        })
        .collect()
}

/// Four-significant-digit scientific notation in the style `1.023.E-01`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.3E}");
    let (mantissa, exp) = s.split_once('E').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}.E{sign}{:02}", exp.abs())
}

/// Plain-text layout of a convergence study: one error line and one rate
/// line per scheme, columns by step size.
pub fn render_convergence(rows: &[ConvergenceRow]) -> String {
    let mut hs: Vec<f64> = Vec::new();
    for row in rows {
        if !hs.contains(&row.h) {
            hs.push(row.h);
        }
    }
    let mut out = format!("{:<22}", "h");
    for h in &hs {
        out.push_str(&format!("{h:>12}"));
    }
    out.push('\n');
    for (label, pick) in [("error", false), ("rate", true)] {
        for scheme in SCHEMES {
            out.push_str(&format!("{:<22}", format!("{label} {}", scheme.as_str())));
            for h in &hs {
                let cell = rows
                    .iter()
                    .find(|r| r.scheme == scheme && r.h == *h)
                    .and_then(|r| if pick { r.rate } else { Some(r.error) })
                    .map(format_sci)
                    .unwrap_or_default();
                out.push_str(&format!("{cell:>12}"));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::Sampling;
    use crate::scenarios::scenario;

    fn constant_case(x0: f64) -> (ModelParams, AlleeSchedule) {
        (
            ModelParams::new(1.0, 1.0, x0).unwrap(),
            AlleeSchedule::constant(0.5).unwrap(),
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn sci_format() {
        assert_eq!(format_sci(0.1023), "1.023.E-01");
        assert_eq!(format_sci(1.000_4), "1.000.E+00");
        assert_eq!(format_sci(4.804e-3), "4.804.E-03");
        assert_eq!(format_sci(12345.0), "1.234.E+04");
    }

    #[test]
    fn tau_study_coarse_columns() {
        let (p, s) = constant_case(0.32);
        let rows = tau_convergence_study(&p, &s, &[1e-2, 1e-3], TauReference::ClosedForm, &StudyOptions::default())
            .unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rel(rows[0].error, 1.023e-1) < 0.01);
        assert!(rel(rows[1].error, 4.227e-2) < 0.01);
        assert!(rel(rows[2].error, 1.773e-2) < 0.01);
        assert!(rel(rows[0].rate.unwrap(), 0.3837) < 0.01);
        assert!(rows[1].rate.is_none());
        let (p, s) = constant_case(0.16);
        let rows = tau_convergence_study(&p, &s, &[1e-3], TauReference::ClosedForm, &StudyOptions::default())
            .unwrap();
        assert!(rel(rows[1].error, 4.404e-4) < 0.02);
        assert!(rows.iter().all(|r| r.rate.is_none()));
    }

    #[test]
    fn exact_engine_reference_matches_closed_form() {
        let (p, s) = constant_case(0.32);
        let closed = reference_tau(&p, &s, TauReference::ClosedForm, 10.0).unwrap();
        let engine = reference_tau(&p, &s, TauReference::ExactEngine, 10.0).unwrap();
        assert!((closed - engine).abs() < 1e-9);
        let inc = scenario("sigmoid-increasing").unwrap();
        assert!(reference_tau(&inc.params, &inc.schedule, TauReference::ClosedForm, 10.0).is_err());
    }

    #[test]
    fn state_study_max_metric_reproduces_coarse_columns() {
        let (p, s) = constant_case(0.32);
        let rows =
            state_convergence_study(&p, &s, &[1e-2, 1e-3], 10.0, ErrorMetric::Max, &StudyOptions::default())
                .unwrap();
        assert!(rel(rows[0].error, 1.535e-3) < 0.01);
        assert!(rel(rows[1].error, 1.535e-4) < 0.01);
        assert!(rel(rows[2].error, 2.206e-3) < 0.01);
        assert!(rel(rows[3].error, 2.200e-4) < 0.01);
        let mean =
            state_convergence_study(&p, &s, &[1e-2], 10.0, ErrorMetric::Mean, &StudyOptions::default()).unwrap();
        assert!(mean[0].error < rows[0].error);
        assert!(state_convergence_study(&p, &s, &[1e-2], 0.0, ErrorMetric::Max, &StudyOptions::default()).is_err());
    }

    #[test]
    fn h_list_must_decrease() {
        let (p, s) = constant_case(0.32);
        let opts = StudyOptions::default();
        assert!(tau_convergence_study(&p, &s, &[1e-3, 1e-2], TauReference::ClosedForm, &opts).is_err());
        assert!(tau_convergence_study(&p, &s, &[], TauReference::ClosedForm, &opts).is_err());
    }

    #[test]
    fn oscillatory_coarse_row() {
        let sc = scenario("oscillatory").unwrap();
        let opts = StudyOptions {
            euler: sc.euler,
            horizon: sc.horizon,
        };
        let rows = extinction_table(&sc.params, &sc.schedule, &[0.04, 0.24], 1e-3, &opts).unwrap();
        assert!((rows[0].tau_euler - 0.378).abs() < 1.5e-3);
        assert!((rows[0].tau_cubature - 0.421).abs() < 1.5e-3);
        assert!((rows[1].tau_euler - 2.945).abs() < 1.5e-3);
        assert!((rows[1].tau_cubature - 2.963).abs() < 1.5e-3);
        assert_eq!(sc.euler.sampling, Sampling::StepStart);
    }

    #[test]
    fn surviving_rows_are_flagged() {
        let (p, s) = constant_case(0.6);
        let rows = extinction_table(&p, &s, &[0.6], 1e-2, &StudyOptions::default()).unwrap();
        assert!(rows[0].tau_euler.is_infinite() && rows[0].difference.is_infinite());
    }
}
