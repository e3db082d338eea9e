//! Command-line front end.
//!
//! Settings come from an optional config file, then `--set key=value`
//! overrides, then the dedicated flags. Data goes to files under the output
//! directory (or to standard output with `--stdout`); diagnostics go to
//! standard error. Exit status: 0 success, 1 invalid input, 2 failed run.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibrate::{fit, predict, FitResult, Observations};
use crate::error::{AlleeError, Result};
use crate::exact::{exact_state, extinction_time_with, ModelParams};
use crate::integrators::{extinction_estimate, integrate, IntegratorOptions, Scheme};
use crate::io::{self, fmt_f64, RunConfig, TaskKind};
use crate::scenarios::scenario;
use crate::schedules::AlleeSchedule;
use crate::studies::{
    extinction_table, render_convergence, state_convergence_study, tau_convergence_study,
    ExtinctionComparisonRow, StudyOptions, TauReference,
};
use crate::tipping::basin_scan;

#[derive(Debug, Parser)]
#[command(name = "allee", version, about = "Allee-effect model with a time-dependent threshold")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file (`section.key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// euler, cubature or nominal-euler.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Step size.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Time horizon.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub horizon: Option<String>,
    /// Built-in scenario: constant, sigmoid-increasing, sigmoid-decreasing, oscillatory.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Seed of the calibration start points.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Write data to standard output instead of files.
    #[arg(long, global = true)]
    pub stdout: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one trajectory with the chosen scheme.
    Simulate,
    /// Sample the exact solution.
    Exact,
    /// Numerical and exact extinction times.
    Extinct,
    /// Extinction-time and state convergence studies.
    Converge,
    /// Tipping verdicts over a grid of initial states.
    TipCheck,
    /// Calibrate the model to an observation series.
    Fit,
    /// Calibrate, then run the fitted model forward.
    Predict,
    /// Extinction-time tables of both schemes for a scenario.
    Tables,
}

impl Command {
    fn task(self) -> TaskKind {
        match self {
            Command::Simulate => TaskKind::Simulate,
            Command::Exact => TaskKind::Exact,
            Command::Extinct => TaskKind::Extinct,
            Command::Converge => TaskKind::Converge,
            Command::TipCheck => TaskKind::TipCheck,
            Command::Fit => TaskKind::Fit,
            Command::Predict => TaskKind::Predict,
            Command::Tables => TaskKind::Tables,
        }
    }
}

/// Config file, `--set` overrides and flags merged into one config.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let c = &cli.common;
    let mut overrides = c
        .set
        .iter()
        .map(|s| io::parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let calibrating = matches!(cli.command, Command::Fit | Command::Predict);
    let flags = [
        ("output.dir", c.out.as_ref().map(|p| p.display().to_string())),
        ("numerics.scheme", c.scheme.clone()),
        (if calibrating { "fit.h" } else { "numerics.h" }, c.h.clone()),
        (if calibrating { "fit.horizon" } else { "numerics.horizon" }, c.horizon.clone()),
        ("task.scenario", c.scenario.clone()),
        ("fit.seed", c.seed.clone()),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            overrides.push((key.to_string(), v));
        }
    }
    // later entries win
    let mut merged: Vec<(String, String)> = Vec::new();
    for (k, v) in overrides {
        merged.retain(|(key, _)| *key != k);
        merged.push((k, v));
    }
    let cfg = match &c.config {
        Some(path) if !path.is_file() => {
            return Err(AlleeError::Config {
                key: "--config".into(),
                message: format!("file {} does not exist", path.display()),
            })
        }
        Some(path) => io::load_config(path, &merged)?,
        None => io::parse_config("", Path::new(""), &merged)?,
    };
    if let Some(kind) = cfg.task.kind {
        if kind != cli.command.task() {
            return Err(AlleeError::Config {
                key: "task.kind".into(),
                message: format!(
                    "config is for `{}` but the subcommand is `{}`",
                    kind.as_str(),
                    cli.command.task().as_str()
                ),
            });
        }
    }
    Ok(cfg)
}

/// Destination of data artifacts.
struct Sink {
    dir: PathBuf,
    stdout: bool,
    emitted: usize,
}

impl Sink {
    fn emit(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        if self.stdout {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if self.emitted > 0 {
                writeln!(lock)?;
            }
            write(&mut lock)?;
            lock.flush()?;
        } else {
            std::fs::create_dir_all(&self.dir)?;
            let path = self.dir.join(name);
            let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write(&mut file)?;
            file.flush()?;
            eprintln!("wrote {}", path.display());
        }
        self.emitted += 1;
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.emit(name, |w| Ok(w.write_all(body.as_bytes())?))
    }
}

/// Model, schedule and study settings, from a scenario when one is named
/// and from the model/schedule blocks otherwise (which take precedence).
struct Case {
    params: ModelParams,
    schedule: AlleeSchedule,
    euler: IntegratorOptions,
    horizon: f64,
    x0_grid: Vec<f64>,
    h_list: Vec<f64>,
}

fn resolve_case(cfg: &RunConfig) -> Result<Case> {
    let numeric_opts = IntegratorOptions {
        sampling: cfg.numerics.sampling,
        refine_tau: cfg.numerics.refine_tau,
    };
    let Some(name) = &cfg.task.scenario else {
        let params = cfg.require_model()?;
        return Ok(Case {
            params,
            schedule: cfg.require_schedule()?.clone(),
            euler: numeric_opts,
            horizon: cfg.numerics.horizon,
            x0_grid: vec![params.x0],
            h_list: vec![1e-2, 1e-3, 1e-4],
        });
    };
    let sc = scenario(name).map_err(|e| AlleeError::Config {
        key: "task.scenario".into(),
        message: e.to_string(),
    })?;
    let mut euler = sc.euler;
    if cfg.is_set("numerics.sampling") {
        euler.sampling = cfg.numerics.sampling;
    }
    euler.refine_tau = cfg.numerics.refine_tau;
    let params = cfg.model.unwrap_or(sc.params);
    let schedule = cfg.schedule.clone().unwrap_or(sc.schedule);
    let horizon = if cfg.is_set("numerics.horizon") { cfg.numerics.horizon } else { sc.horizon };
    schedule.ensure_valid(params.capacity, horizon)?;
    Ok(Case {
        x0_grid: if cfg.model.is_some() { vec![params.x0] } else { sc.x0_grid },
        params,
        schedule,
        euler,
        horizon,
        h_list: sc.h_list,
    })
}

fn simulate(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let case = resolve_case(cfg)?;
    let n = &cfg.numerics;
    let traj = integrate(n.scheme, &case.params, &case.schedule, n.h, case.horizon, &case.euler)?;
    match traj.extinction_time {
        Some(tau) => eprintln!("{} run: extinct at t = {tau}", n.scheme.as_str()),
        None => eprintln!(
            "{} run: X({}) = {}",
            n.scheme.as_str(),
            traj.times.last().copied().unwrap_or(0.0),
            traj.final_state()
        ),
    }
    sink.emit("trajectory.csv", |w| {
        io::write_trajectory_to(&traj, &case.schedule, w, cfg.output.stride, 0.0)
    })
}

fn exact(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let case = resolve_case(cfg)?;
    let n = cfg.task.samples;
    let times: Vec<f64> = (0..n).map(|i| case.horizon * i as f64 / (n - 1) as f64).collect();
    let states = times
        .iter()
        .map(|&t| exact_state(&case.params, &case.schedule, t, cfg.numerics.quad_tol))
        .collect::<Result<Vec<f64>>>()?;
    sink.emit("exact.csv", |w| io::write_samples_to(&times, &states, &case.schedule, w))
}

fn extinct(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let case = resolve_case(cfg)?;
    let n = &cfg.numerics;
    let report = extinction_time_with(&case.params, &case.schedule, n.tau_tol, case.horizon, n.quad_tol)?;
    let numerical = extinction_estimate(n.scheme, &case.params, &case.schedule, n.h, case.horizon, &case.euler)?;
    let tau_num = numerical.unwrap_or(f64::INFINITY);
    eprintln!(
        "exact tau = {} ({}), {} tau_h = {} (h = {})",
        report.tau,
        report.method.as_str(),
        n.scheme.as_str(),
        tau_num,
        n.h
    );
    sink.emit("extinction.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x0", "scheme", "h", "tau_numerical", "tau_exact", "i0", "l_horizon", "horizon", "method"])?;
        out.write_record([
            fmt_f64(case.params.x0),
            n.scheme.as_str().to_string(),
            fmt_f64(n.h),
            fmt_f64(tau_num),
            fmt_f64(report.tau),
            fmt_f64(report.i0),
            fmt_f64(report.l_horizon),
            fmt_f64(report.horizon),
            report.method.as_str().to_string(),
        ])?;
        out.flush()?;
        Ok(())
    })
}

fn suffix(label: &str, x: f64) -> String {
    format!("_{label}{x}")
}

fn converge(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let case = resolve_case(cfg)?;
    let h_list = cfg.task.h_list.clone().unwrap_or(case.h_list.clone());
    let reference = cfg.task.reference.unwrap_or(if case.schedule.is_constant().is_some() {
        TauReference::ClosedForm
    } else {
        TauReference::ExactEngine
    });
    let grid = cfg.task.x0_grid.clone().unwrap_or(vec![case.params.x0]);
    let opts = StudyOptions {
        euler: case.euler,
        horizon: case.horizon,
    };
    let mut text = String::new();
    for &x0 in &grid {
        let params = case.params.with_x0(x0);
        params.check()?;
        let tag = if grid.len() > 1 { suffix("x0-", x0) } else { String::new() };
        let tau_rows = tau_convergence_study(&params, &case.schedule, &h_list, reference, &opts)?;
        let state_rows =
            state_convergence_study(&params, &case.schedule, &h_list, cfg.task.window, cfg.task.metric, &opts)?;
        text.push_str(&format!("x0 = {x0}: extinction-time error\n{}\n", render_convergence(&tau_rows)));
        text.push_str(&format!("x0 = {x0}: state error\n{}\n", render_convergence(&state_rows)));
        sink.emit(&format!("tau_convergence{tag}.csv"), |w| io::write_convergence_to(&tau_rows, w))?;
        sink.emit(&format!("state_convergence{tag}.csv"), |w| io::write_convergence_to(&state_rows, w))?;
    }
    eprint!("{text}");
    if !sink.stdout {
        sink.text("convergence.txt", &text)?;
    }
    Ok(())
}

fn render_table(h: f64, rows: &[ExtinctionComparisonRow]) -> String {
    let cell = |x: f64| if x.is_finite() { format!("{x:>12.5}") } else { format!("{:>12}", "-") };
    let mut s = format!("h = {h}\n{:>6} {:>12} {:>12} {:>12}\n", "X0", "Euler", "cubature", "difference");
    for r in rows {
        s.push_str(&format!(
            "{:>6.2} {} {} {}\n",
            r.x0,
            cell(r.tau_euler),
            cell(r.tau_cubature),
            cell(r.difference)
        ));
    }
    s
}

fn tables(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    if cfg.task.scenario.is_none() && cfg.model.is_none() {
        return Err(AlleeError::Config {
            key: "task.scenario".into(),
            message: "tables need a scenario (--scenario) or a model block".into(),
        });
    }
    let case = resolve_case(cfg)?;
    let h_list = match (&cfg.task.h_list, cfg.is_set("numerics.h")) {
        (Some(list), _) => list.clone(),
        (None, true) => vec![cfg.numerics.h],
        (None, false) => case.h_list.clone(),
    };
    let grid = cfg.task.x0_grid.clone().unwrap_or(case.x0_grid.clone());
    let opts = StudyOptions {
        euler: case.euler,
        horizon: case.horizon,
    };
    let mut text = String::new();
    for &h in &h_list {
        let rows = extinction_table(&case.params, &case.schedule, &grid, h, &opts)?;
        text.push_str(&render_table(h, &rows));
        text.push('\n');
        let tag = if h_list.len() > 1 { suffix("h-", h) } else { String::new() };
        sink.emit(&format!("extinction_table{tag}.csv"), |w| io::write_extinction_table_to(&rows, w))?;
    }
    eprint!("{text}");
    if !sink.stdout {
        sink.text("tables.txt", &text)?;
    }
    Ok(())
}

fn tip_check(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let case = resolve_case(cfg)?;
    let grid = cfg.task.x0_grid.clone().unwrap_or(case.x0_grid.clone());
    let verdicts = basin_scan(&case.params, &case.schedule, &grid, cfg.numerics.h, case.horizon)?;
    for v in &verdicts {
        eprintln!(
            "x0 = {}: {}, r-tipped {}, threshold {} (margin {:.3e})",
            v.x0,
            v.outcome.label(),
            v.r_tipped,
            if v.threshold_satisfied { "met" } else { "not met" },
            v.threshold.margin
        );
    }
    sink.emit("verdicts.csv", |w| io::write_verdicts_to(&verdicts, w))
}

fn observations(cfg: &RunConfig) -> Result<Observations> {
    match &cfg.fit.data {
        Some(path) => io::load_observations(path),
        None => Ok(io::bundled_fisheries()),
    }
}

fn calibrate(cfg: &RunConfig) -> Result<FitResult> {
    let obs = observations(cfg)?;
    eprintln!(
        "fitting {} records ({} present), seed {}",
        obs.records().len(),
        obs.present_count(),
        cfg.fit.config.seed
    );
    fit(&obs, &cfg.fit.config)
}

fn run_fit(cfg: &RunConfig, sink: &mut Sink, forward: bool) -> Result<()> {
    let result = calibrate(cfg)?;
    let prediction = if result.converged {
        Some(predict(&result, cfg.fit.horizon, cfg.fit.predict_h)?)
    } else {
        eprintln!("warning: fit did not converge; no forward prediction");
        None
    };
    let summary = io::fit_summary(&result, prediction.as_ref());
    eprint!("{summary}");
    sink.emit("fit_report.csv", |w| io::write_fit_report_to(&result, w))?;
    sink.emit("fit_params.csv", |w| io::write_fit_params_to(&result, w))?;
    if !sink.stdout {
        sink.text("fit_summary.txt", &summary)?;
    }
    if forward {
        let p = prediction.ok_or_else(|| AlleeError::Calibration("fit did not converge".into()))?;
        sink.emit("prediction.csv", |w| {
            io::write_trajectory_to(&p.trajectory, &result.schedule, w, cfg.output.stride, p.origin)
        })?;
        sink.emit("events.csv", |w| io::write_events_to(&p, w))?;
    }
    Ok(())
}

/// Runs a parsed invocation.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let mut sink = Sink {
        dir: cfg.output.dir.clone(),
        stdout: cli.common.stdout,
        emitted: 0,
    };
    if cfg.numerics.scheme == Scheme::NominalEuler && cli.command != Command::Simulate {
        return Err(AlleeError::Config {
            key: "numerics.scheme".into(),
            message: "the nominal model is only available to `simulate`".into(),
        });
    }
    match cli.command {
        Command::Simulate => simulate(&cfg, &mut sink),
        Command::Exact => exact(&cfg, &mut sink),
        Command::Extinct => extinct(&cfg, &mut sink),
        Command::Converge => converge(&cfg, &mut sink),
        Command::TipCheck => tip_check(&cfg, &mut sink),
        Command::Fit => run_fit(&cfg, &mut sink, false),
        Command::Predict => run_fit(&cfg, &mut sink, true),
        Command::Tables => tables(&cfg, &mut sink),
    }
}

/// Parses `args`, runs, reports errors on standard error and returns the
/// exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
