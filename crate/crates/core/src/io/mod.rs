//! File formats: observation and trajectory CSV, study tables, run configs.
//!
//! Every emitted float uses [`fmt_f64`]: 17 significant digits, so a written
//! value parses back to the same bits. Exact zeros are written as `0`.

mod config;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub use config::{
    load_config, parse_config, parse_override, FitBlock, Numerics, OutputBlock, RunConfig,
    TaskBlock, TaskKind, KNOWN_KEYS,
};

use crate::calibrate::{FitResult, Observation, Observations, Prediction};
use crate::error::{AlleeError, Result};
use crate::integrators::Trajectory;
use crate::schedules::AlleeSchedule;
use crate::studies::{ConvergenceRow, ExtinctionComparisonRow};
use crate::tipping::{CrossingDirection, TippingVerdict};

const FISHERIES_CSV: &str = include_str!("../../data/fisheries_jp.csv");

/// Lossless decimal form of `x`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> AlleeError {
    AlleeError::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn parse_observations(text: &str, path: &Path) -> Result<Observations> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_error(path, 1, "empty file"));
    }
    if header.len() != 2 || &header[0] != "time" || &header[1] != "value" {
        return Err(parse_error(
            path,
            1,
            format!("expected header `time,value`, got `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut records = Vec::new();
    let mut last: Option<f64> = None;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let time: f64 = row[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("time `{}` is not a number", &row[0])))?;
        if !time.is_finite() {
            return Err(parse_error(path, line, format!("time `{}` is not finite", &row[0])));
        }
        let value = match &row[1] {
            "NA" => None,
            raw => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("value `{raw}` is not a number or NA")))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(parse_error(path, line, format!("value {v} must be positive")));
                }
                Some(v)
            }
        };
        if let Some(prev) = last {
            if time == prev {
                return Err(parse_error(path, line, format!("duplicate time {time}")));
            }
            if time < prev {
                return Err(parse_error(path, line, format!("time {time} is not after {prev}")));
            }
        }
        last = Some(time);
        records.push(Observation { time, value });
    }
    if records.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    Observations::new(records).map_err(|e| parse_error(path, 1, e.to_string()))
}

/// Reads a `time,value` CSV; `NA` marks a missing value.
pub fn load_observations(path: &Path) -> Result<Observations> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_observations(&text, path)
}

/// The bundled annual fisheries series (1963 to 2023, every five years).
pub fn bundled_fisheries() -> Observations {
    parse_observations(FISHERIES_CSV, Path::new("fisheries_jp.csv"))
        .expect("bundled dataset parses")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

/// Writes `t,x,a` rows (every `stride`-th grid point plus the last one),
/// with times shifted by `offset`.
pub fn write_trajectory_to<W: Write>(
    traj: &Trajectory,
    schedule: &AlleeSchedule,
    out: W,
    stride: usize,
    offset: f64,
) -> Result<()> {
    let stride = stride.max(1);
    let mut w = csv_writer(out);
    w.write_record(["t", "x", "a"])?;
    let last = traj.len().saturating_sub(1);
    for (k, (t, x)) in traj.points().enumerate() {
        if k % stride == 0 || k == last {
            w.write_record([fmt_f64(t + offset), fmt_f64(x), fmt_f64(schedule.value(t))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory, schedule: &AlleeSchedule, path: &Path, stride: usize) -> Result<()> {
    write_trajectory_to(traj, schedule, create(path)?, stride, 0.0)
}

/// Writes `t,x,a` rows for arbitrary sample times.
pub fn write_samples_to<W: Write>(times: &[f64], states: &[f64], schedule: &AlleeSchedule, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["t", "x", "a"])?;
    for (&t, &x) in times.iter().zip(states) {
        w.write_record([fmt_f64(t), fmt_f64(x), fmt_f64(schedule.value(t))])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a trajectory CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub allee: Vec<f64>,
}

/// Reads a file produced by [`write_trajectory`].
pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "x", "a"] {
        return Err(parse_error(path, 1, "expected header `t,x,a`"));
    }
    let mut table = TrajectoryTable::default();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let col = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| parse_error(path, line, format!("`{}` is not a number", &row[i])))
        };
        table.times.push(col(0)?);
        table.states.push(col(1)?);
        table.allee.push(col(2)?);
    }
    Ok(table)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `scheme,h,error,rate`; the rate is empty on the finest row.
pub fn write_convergence_to<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["scheme", "h", "error", "rate"])?;
    for r in rows {
        w.write_record([r.scheme.as_str().to_string(), fmt_f64(r.h), fmt_f64(r.error), opt(r.rate)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    write_convergence_to(rows, create(path)?)
}

/// `x0,tau_euler,tau_cubature,difference`; survivors carry `inf`.
pub fn write_extinction_table_to<W: Write>(rows: &[ExtinctionComparisonRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["x0", "tau_euler", "tau_cubature", "difference"])?;
    for r in rows {
        w.write_record([fmt_f64(r.x0), fmt_f64(r.tau_euler), fmt_f64(r.tau_cubature), fmt_f64(r.difference)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_extinction_table(rows: &[ExtinctionComparisonRow], path: &Path) -> Result<()> {
    write_extinction_table_to(rows, create(path)?)
}

/// One row per verdict.
pub fn write_verdicts_to<W: Write>(verdicts: &[TippingVerdict], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "x0",
        "outcome",
        "tau",
        "r_tipped",
        "threshold_satisfied",
        "threshold_margin",
        "downward_crossings",
        "upward_crossings",
        "first_crossing",
    ])?;
    for v in verdicts {
        let tau = match v.outcome {
            crate::tipping::Outcome::Extinct { tau } => fmt_f64(tau),
            _ => String::new(),
        };
        let down = v.downward_crossings();
        let up = v
            .crossings
            .iter()
            .filter(|c| c.direction == CrossingDirection::Upward)
            .count();
        w.write_record([
            fmt_f64(v.x0),
            v.outcome.label().to_string(),
            tau,
            v.r_tipped.to_string(),
            v.threshold_satisfied.to_string(),
            fmt_f64(v.threshold.margin),
            down.to_string(),
            up.to_string(),
            opt(v.crossings.first().map(|c| c.time)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_verdicts(verdicts: &[TippingVerdict], path: &Path) -> Result<()> {
    write_verdicts_to(verdicts, create(path)?)
}

/// `time,observed,fitted,relative_difference`; missing observations stay empty.
pub fn write_fit_report_to<W: Write>(fit: &FitResult, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["time", "observed", "fitted", "relative_difference"])?;
    for ((rec, x), rd) in fit.records.iter().zip(&fit.fitted).zip(&fit.relative_differences) {
        w.write_record([fmt_f64(rec.time), opt(rec.value), fmt_f64(*x), opt(*rd)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fit_report(fit: &FitResult, path: &Path) -> Result<()> {
    write_fit_report_to(fit, create(path)?)
}

/// `name,value` table of the fitted parameters.
pub fn write_fit_params_to<W: Write>(fit: &FitResult, out: W) -> Result<()> {
    let c = &fit.calibration;
    let mut w = csv_writer(out);
    w.write_record(["name", "value"])?;
    let rows = [
        ("x0", c.x0),
        ("r", c.r),
        ("K", c.capacity),
        ("ln_a_hi", c.ln_a_hi),
        ("ln_a_lo", c.ln_a_lo),
        ("eps", c.eps),
        ("theta", c.theta),
        ("theta_calendar", fit.origin + c.theta),
        ("objective", fit.objective),
        ("rms", fit.objective.sqrt()),
        ("max_relative_difference", fit.max_relative_difference()),
    ];
    for (name, v) in rows {
        w.write_record([name.to_string(), fmt_f64(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fit_params(fit: &FitResult, path: &Path) -> Result<()> {
    write_fit_params_to(fit, create(path)?)
}

/// Plain-text summary of a fit and, when given, its forward prediction.
pub fn fit_summary(fit: &FitResult, prediction: Option<&Prediction>) -> String {
    let c = &fit.calibration;
    let mut s = String::new();
    s.push_str("Fitted parameters\n");
    s.push_str(&format!("  X_0      {:>14.6e}\n", c.x0));
    s.push_str(&format!("  r        {:>14.6e}\n", c.r));
    s.push_str(&format!("  K        {:>14.6e}\n", c.capacity));
    s.push_str(&format!("  ln a_hi  {:>14.6e}\n", c.ln_a_hi));
    s.push_str(&format!("  ln a_lo  {:>14.6e}\n", c.ln_a_lo));
    s.push_str(&format!("  eps      {:>14.6e}\n", c.eps));
    s.push_str(&format!("  theta    {:>14.6e}  (calendar {:.2})\n", c.theta, fit.origin + c.theta));
    s.push_str(&format!(
        "objective {:.6e} (rms {:.2}), max relative difference {:.4}, {} evaluations, {}\n",
        fit.objective,
        fit.objective.sqrt(),
        fit.max_relative_difference(),
        fit.evaluations,
        if fit.converged { "converged" } else { "not converged" }
    ));
    s.push_str("\n      time      observed        fitted  rel.diff\n");
    for ((rec, x), rd) in fit.records.iter().zip(&fit.fitted).zip(&fit.relative_differences) {
        let obs = rec.value.map_or("NA".to_string(), |v| format!("{v:.0}"));
        let rd = rd.map_or("-".to_string(), |d| format!("{d:.4}"));
        s.push_str(&format!("{:>10.0} {:>13} {:>13.0} {:>9}\n", rec.time, obs, x, rd));
    }
    if let Some(p) = prediction {
        s.push('\n');
        s.push_str(&format!("peak          {:.2}\n", p.calendar(p.peak_time)));
        match p.first_downward_crossing() {
            Some(c) => s.push_str(&format!("X below a     {:.2}\n", p.calendar(c.time))),
            None => s.push_str("X below a     none within horizon\n"),
        }
        if p.extinction.tau.is_finite() {
            s.push_str(&format!("extinction    {:.2}\n", p.calendar(p.extinction.tau)));
        } else {
            s.push_str("extinction    none within horizon\n");
        }
    }
    s
}

/// `event,time` rows (calendar time) of a prediction.
pub fn write_events_to<W: Write>(p: &Prediction, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["event", "time"])?;
    w.write_record(["peak".to_string(), fmt_f64(p.calendar(p.peak_time))])?;
    for c in &p.crossings {
        let name = match c.direction {
            CrossingDirection::Downward => "crossing_down",
            CrossingDirection::Upward => "crossing_up",
        };
        w.write_record([name.to_string(), fmt_f64(p.calendar(c.time))])?;
    }
    if p.extinction.tau.is_finite() {
        w.write_record(["extinction".to_string(), fmt_f64(p.calendar(p.extinction.tau))])?;
    }
    w.flush()?;
    Ok(())
}
