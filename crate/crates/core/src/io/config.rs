//! Line-oriented run configuration: `section.key = value`, `#` comments.
//!
//! Keys are case-sensitive and must appear in [`KNOWN_KEYS`]. Schedule keys
//! that do not belong to the chosen `schedule.kind` are rejected too.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::calibrate::FitConfig;
use crate::error::{AlleeError, Result};
use crate::exact::{ModelParams, DEFAULT_QUAD_TOL, DEFAULT_TAU_TOL};
use crate::integrators::{Sampling, Scheme};
use crate::schedules::{AlleeSchedule, Direction, Extrapolation};
use crate::studies::{ErrorMetric, TauReference};

pub const KNOWN_KEYS: &[&str] = &[
    "model.r",
    "model.K",
    "model.x0",
    "schedule.kind",
    "schedule.a",
    "schedule.a_hi",
    "schedule.a_lo",
    "schedule.ln_a_hi",
    "schedule.ln_a_lo",
    "schedule.theta",
    "schedule.eps",
    "schedule.direction",
    "schedule.amp",
    "schedule.base",
    "schedule.period",
    "schedule.file",
    "schedule.extrapolation",
    "numerics.scheme",
    "numerics.h",
    "numerics.horizon",
    "numerics.quad_tol",
    "numerics.tau_tol",
    "numerics.sampling",
    "numerics.refine_tau",
    "task.kind",
    "task.scenario",
    "task.h_list",
    "task.window",
    "task.metric",
    "task.reference",
    "task.x0_grid",
    "task.samples",
    "fit.data",
    "fit.h",
    "fit.screen_h",
    "fit.restarts",
    "fit.polish",
    "fit.simplex_scale",
    "fit.screen_evals",
    "fit.max_evals",
    "fit.seed",
    "fit.feasible_until",
    "fit.horizon",
    "fit.predict_h",
    "output.dir",
    "output.stride",
];

/// Schedule keys accepted by each kind, besides `schedule.kind`.
fn schedule_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "constant" => &["a"],
        "sigmoid" => &["a_hi", "a_lo", "theta", "eps", "direction"],
        "log-sigmoid" => &["ln_a_hi", "ln_a_lo", "theta", "eps", "direction"],
        "oscillatory" => &["amp", "base", "period"],
        "tabulated" => &["file", "extrapolation"],
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Simulate,
    Exact,
    Extinct,
    Converge,
    TipCheck,
    Fit,
    Predict,
    Tables,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Simulate => "simulate",
            TaskKind::Exact => "exact",
            TaskKind::Extinct => "extinct",
            TaskKind::Converge => "converge",
            TaskKind::TipCheck => "tip-check",
            TaskKind::Fit => "fit",
            TaskKind::Predict => "predict",
            TaskKind::Tables => "tables",
        }
    }
}

impl FromStr for TaskKind {
    type Err = AlleeError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => TaskKind::Simulate,
            "exact" => TaskKind::Exact,
            "extinct" => TaskKind::Extinct,
            "converge" => TaskKind::Converge,
            "tip-check" => TaskKind::TipCheck,
            "fit" => TaskKind::Fit,
            "predict" => TaskKind::Predict,
            "tables" => TaskKind::Tables,
            other => {
                return Err(AlleeError::InvalidInput(format!(
                    "unknown task `{other}` (expected simulate|exact|extinct|converge|tip-check|fit|predict|tables)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub scheme: Scheme,
    pub h: f64,
    pub horizon: f64,
    pub quad_tol: f64,
    pub tau_tol: f64,
    pub sampling: Sampling,
    pub refine_tau: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            scheme: Scheme::Cubature,
            h: 1e-3,
            horizon: 10.0,
            quad_tol: DEFAULT_QUAD_TOL,
            tau_tol: DEFAULT_TAU_TOL,
            sampling: Sampling::StepEnd,
            refine_tau: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskBlock {
    pub kind: Option<TaskKind>,
    pub scenario: Option<String>,
    /// Strictly decreasing steps for convergence studies.
    pub h_list: Option<Vec<f64>>,
    /// End of the state-error window.
    pub window: f64,
    pub metric: ErrorMetric,
    pub reference: Option<TauReference>,
    pub x0_grid: Option<Vec<f64>>,
    /// Number of exact-engine sample points on `[0, horizon]`.
    pub samples: usize,
}

impl Default for TaskBlock {
    fn default() -> Self {
        TaskBlock {
            kind: None,
            scenario: None,
            h_list: None,
            window: 10.0,
            metric: ErrorMetric::Max,
            reference: None,
            x0_grid: None,
            samples: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitBlock {
    /// `None` uses the bundled fisheries series.
    pub data: Option<PathBuf>,
    pub config: FitConfig,
    /// Prediction horizon in model time.
    pub horizon: f64,
    pub predict_h: f64,
}

impl Default for FitBlock {
    fn default() -> Self {
        FitBlock {
            data: None,
            config: FitConfig::default(),
            horizon: 100.0,
            predict_h: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub stride: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: PathBuf::from("."),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub model: Option<ModelParams>,
    pub schedule: Option<AlleeSchedule>,
    pub numerics: Numerics,
    pub task: TaskBlock,
    pub fit: FitBlock,
    pub output: OutputBlock,
    /// Keys given in the file or as overrides.
    pub explicit: BTreeSet<String>,
}

impl RunConfig {
    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn require_model(&self) -> Result<ModelParams> {
        self.model.ok_or_else(|| missing("model.r"))
    }

    pub fn require_schedule(&self) -> Result<&AlleeSchedule> {
        self.schedule.as_ref().ok_or_else(|| missing("schedule.kind"))
    }
}

fn missing(key: &str) -> AlleeError {
    AlleeError::Config {
        key: key.into(),
        message: "missing required key".into(),
    }
}

fn config_err(key: &str, message: impl Into<String>) -> AlleeError {
    AlleeError::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Value as written plus the directory relative paths resolve against.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    base: PathBuf,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| config_err(key, format!("expected {what}, got `{}`", e.value))),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(config_err(key, format!("must be finite, got {x}"))),
            v => Ok(v),
        }
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>> {
        match self.float(key)? {
            Some(x) if x <= 0.0 => Err(config_err(key, format!("must be positive, got {x}"))),
            v => Ok(v),
        }
    }

    fn required_float(&mut self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| missing(key))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "a non-negative integer")
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let items: std::result::Result<Vec<f64>, _> = e
            .value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect();
        let items = items.map_err(|_| config_err(key, format!("expected a comma-separated list of numbers, got `{}`", e.value)))?;
        if items.is_empty() {
            return Err(config_err(key, "list is empty"));
        }
        if items.iter().any(|x| !x.is_finite()) {
            return Err(config_err(key, "list entries must be finite"));
        }
        Ok(Some(items))
    }

    fn enumerated<T: FromStr<Err = AlleeError>>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err: AlleeError| config_err(key, err.to_string())),
        }
    }

    fn path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.take(key).map(|e| {
            let p = PathBuf::from(&e.value);
            if p.is_absolute() { p } else { e.base.join(p) }
        }))
    }

    fn existing_file(&mut self, key: &str) -> Result<Option<PathBuf>> {
        match self.path(key)? {
            Some(p) if !p.is_file() => Err(config_err(key, format!("file {} does not exist", p.display()))),
            p => Ok(p),
        }
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

fn check_key(key: &str) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(config_err(key, "unknown key"))
    }
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| AlleeError::InvalidInput(format!("override `{s}` is not of the form key=value")))?;
    let key = k.trim().to_string();
    check_key(&key)?;
    Ok((key, unquote(v).to_string()))
}

fn tokenize(text: &str, path: &Path, base: &Path) -> Result<BTreeMap<String, Entry>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| AlleeError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `section.key = value`, got `{content}`")))?;
        let key = k.trim();
        if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
            return Err(err(format!("key `{key}` must have the form section.key")));
        }
        check_key(key).map_err(|e| err(e.to_string()))?;
        let value = unquote(v);
        if value.is_empty() {
            return Err(err(format!("key `{key}` has an empty value")));
        }
        let entry = Entry {
            value: value.to_string(),
            base: base.to_path_buf(),
        };
        if entries.insert(key.to_string(), entry).is_some() {
            return Err(err(format!("key `{key}` is set twice")));
        }
    }
    Ok(entries)
}

fn build_model(raw: &mut Raw) -> Result<Option<ModelParams>> {
    let present = ["model.r", "model.K", "model.x0"].iter().any(|k| raw.entries.contains_key(*k));
    if !present {
        return Ok(None);
    }
    let r = raw.positive("model.r")?.ok_or_else(|| missing("model.r"))?;
    let k = raw.positive("model.K")?.ok_or_else(|| missing("model.K"))?;
    let x0 = raw.required_float("model.x0")?;
    if !(0.0..=k).contains(&x0) {
        return Err(config_err("model.x0", format!("must lie in [0, K] = [0, {k}], got {x0}")));
    }
    ModelParams::new(r, k, x0).map(Some).map_err(|e| config_err("model", e.to_string()))
}

fn build_schedule(raw: &mut Raw) -> Result<Option<AlleeSchedule>> {
    let Some(kind) = raw.take("schedule.kind") else {
        if let Some(k) = raw.entries.keys().find(|k| k.starts_with("schedule.")) {
            return Err(config_err(k, "schedule fields given without schedule.kind"));
        }
        return Ok(None);
    };
    let kind = kind.value.as_str();
    let allowed = schedule_keys(kind).ok_or_else(|| {
        config_err(
            "schedule.kind",
            format!("unknown kind `{kind}` (expected constant|sigmoid|log-sigmoid|oscillatory|tabulated)"),
        )
    })?;
    if let Some(stray) = raw
        .entries
        .keys()
        .filter_map(|k| k.strip_prefix("schedule."))
        .find(|k| !allowed.contains(k))
    {
        return Err(config_err(
            &format!("schedule.{stray}"),
            format!("does not apply to schedule kind `{kind}`"),
        ));
    }
    let wrap = |e: AlleeError| config_err("schedule", e.to_string());
    let schedule = match kind {
        "constant" => AlleeSchedule::constant(raw.required_float("schedule.a")?).map_err(wrap)?,
        "sigmoid" | "log-sigmoid" => {
            let (hi_key, lo_key) = if kind == "sigmoid" {
                ("schedule.a_hi", "schedule.a_lo")
            } else {
                ("schedule.ln_a_hi", "schedule.ln_a_lo")
            };
            let hi = raw.required_float(hi_key)?;
            let lo = raw.required_float(lo_key)?;
            let theta = raw.required_float("schedule.theta")?;
            let eps = raw.positive("schedule.eps")?.ok_or_else(|| missing("schedule.eps"))?;
            let direction: Direction = raw
                .enumerated("schedule.direction")?
                .ok_or_else(|| missing("schedule.direction"))?;
            if !(lo < hi) {
                return Err(config_err(lo_key, format!("must be below {hi_key} ({lo} >= {hi})")));
            }
            if kind == "sigmoid" {
                AlleeSchedule::sigmoid(hi, lo, theta, eps, direction).map_err(wrap)?
            } else {
                AlleeSchedule::log_sigmoid(hi, lo, theta, eps, direction).map_err(wrap)?
            }
        }
        "oscillatory" => {
            let amp = raw.required_float("schedule.amp")?;
            let base = raw.required_float("schedule.base")?;
            let period = raw.required_float("schedule.period")?;
            AlleeSchedule::oscillatory(amp, base, period).map_err(wrap)?
        }
        _ => {
            let file = raw.existing_file("schedule.file")?.ok_or_else(|| missing("schedule.file"))?;
            let extrapolation = match raw.take("schedule.extrapolation").map(|e| e.value) {
                None => Extrapolation::Clamp,
                Some(v) if v == "clamp" => Extrapolation::Clamp,
                Some(v) if v == "strict" => Extrapolation::Strict,
                Some(v) => {
                    return Err(config_err(
                        "schedule.extrapolation",
                        format!("expected clamp|strict, got `{v}`"),
                    ))
                }
            };
            load_knots(&file, extrapolation)?
        }
    };
    Ok(Some(schedule))
}

/// Reads `t,a` knots for a tabulated schedule.
fn load_knots(path: &Path, extrapolation: Extrapolation) -> Result<AlleeSchedule> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut knots = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line()) as usize;
        let cell = |i: usize| -> Result<f64> {
            row.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| AlleeError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected two numeric columns t,a, got `{}`", row.iter().collect::<Vec<_>>().join(",")),
            })
        };
        knots.push((cell(0)?, cell(1)?));
    }
    AlleeSchedule::tabulated(knots, extrapolation).map_err(|e| config_err("schedule.file", e.to_string()))
}

fn build_numerics(raw: &mut Raw) -> Result<Numerics> {
    let mut n = Numerics::default();
    if let Some(s) = raw.enumerated("numerics.scheme")? {
        n.scheme = s;
    }
    if let Some(h) = raw.positive("numerics.h")? {
        n.h = h;
    }
    if let Some(t) = raw.positive("numerics.horizon")? {
        n.horizon = t;
    }
    if let Some(t) = raw.positive("numerics.quad_tol")? {
        n.quad_tol = t;
    }
    if let Some(t) = raw.positive("numerics.tau_tol")? {
        n.tau_tol = t;
    }
    if let Some(s) = raw.enumerated("numerics.sampling")? {
        n.sampling = s;
    }
    if let Some(b) = raw.parsed("numerics.refine_tau", "true or false")? {
        n.refine_tau = b;
    }
    if n.h > n.horizon {
        return Err(config_err("numerics.h", format!("step {} exceeds the horizon {}", n.h, n.horizon)));
    }
    Ok(n)
}

fn build_task(raw: &mut Raw) -> Result<TaskBlock> {
    let mut t = TaskBlock {
        kind: raw.enumerated("task.kind")?,
        ..TaskBlock::default()
    };
    t.scenario = raw.take("task.scenario").map(|e| e.value);
    if let Some(list) = raw.list("task.h_list")? {
        if list.iter().any(|h| *h <= 0.0) {
            return Err(config_err("task.h_list", "step sizes must be positive"));
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_err("task.h_list", "step sizes must be strictly decreasing"));
        }
        t.h_list = Some(list);
    }
    if let Some(w) = raw.positive("task.window")? {
        t.window = w;
    }
    if let Some(m) = raw.enumerated("task.metric")? {
        t.metric = m;
    }
    t.reference = match raw.take("task.reference").map(|e| e.value) {
        None => None,
        Some(v) if v == "closed-form" => Some(TauReference::ClosedForm),
        Some(v) if v == "exact-engine" => Some(TauReference::ExactEngine),
        Some(v) => {
            return Err(config_err(
                "task.reference",
                format!("expected closed-form|exact-engine, got `{v}`"),
            ))
        }
    };
    if let Some(grid) = raw.list("task.x0_grid")? {
        if grid.iter().any(|x| *x < 0.0) {
            return Err(config_err("task.x0_grid", "initial states must be non-negative"));
        }
        t.x0_grid = Some(grid);
    }
    if let Some(n) = raw.count("task.samples")? {
        if n < 2 {
            return Err(config_err("task.samples", "need at least 2 samples"));
        }
        t.samples = n;
    }
    Ok(t)
}

fn build_fit(raw: &mut Raw) -> Result<FitBlock> {
    let mut f = FitBlock {
        data: raw.existing_file("fit.data")?,
        ..FitBlock::default()
    };
    let c = &mut f.config;
    if let Some(h) = raw.positive("fit.h")? {
        c.h = h;
    }
    if let Some(h) = raw.positive("fit.screen_h")? {
        c.screen_h = Some(h);
    }
    if let Some(n) = raw.count("fit.restarts")? {
        if n == 0 {
            return Err(config_err("fit.restarts", "must be at least 1"));
        }
        c.restarts = n;
    }
    if let Some(n) = raw.count("fit.polish")? {
        if n == 0 {
            return Err(config_err("fit.polish", "must be at least 1"));
        }
        c.polish = n;
    }
    if let Some(s) = raw.positive("fit.simplex_scale")? {
        c.simplex_scale = s;
    }
    if let Some(n) = raw.count("fit.screen_evals")? {
        c.screen_evals = n;
    }
    if let Some(n) = raw.count("fit.max_evals")? {
        c.max_evals = n;
    }
    if let Some(s) = raw.parsed("fit.seed", "a non-negative integer")? {
        c.seed = s;
    }
    if let Some(t) = raw.positive("fit.feasible_until")? {
        c.feasible_until = Some(t);
    }
    if let Some(t) = raw.positive("fit.horizon")? {
        f.horizon = t;
    }
    if let Some(h) = raw.positive("fit.predict_h")? {
        f.predict_h = h;
    }
    Ok(f)
}

fn build_output(raw: &mut Raw) -> Result<OutputBlock> {
    let mut o = OutputBlock::default();
    if let Some(dir) = raw.path("output.dir")? {
        o.dir = dir;
    }
    if let Some(s) = raw.count("output.stride")? {
        if s == 0 {
            return Err(config_err("output.stride", "must be at least 1"));
        }
        o.stride = s;
    }
    Ok(o)
}

/// Parses config text; `overrides` replace file entries and resolve
/// relative paths against the working directory.
pub fn parse_config(text: &str, path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut entries = tokenize(text, path, &base)?;
    for (k, v) in overrides {
        check_key(k)?;
        entries.insert(
            k.clone(),
            Entry {
                value: v.clone(),
                base: PathBuf::new(),
            },
        );
    }
    let explicit = entries.keys().cloned().collect();
    let mut raw = Raw { entries };
    let model = build_model(&mut raw)?;
    let schedule = build_schedule(&mut raw)?;
    let numerics = build_numerics(&mut raw)?;
    let task = build_task(&mut raw)?;
    let fit = build_fit(&mut raw)?;
    let output = build_output(&mut raw)?;
    debug_assert!(raw.entries.is_empty(), "unconsumed keys {:?}", raw.entries.keys());
    if let (Some(m), Some(s)) = (&model, &schedule) {
        s.ensure_valid(m.capacity, numerics.horizon)
            .map_err(|e| config_err("schedule", e.to_string()))?;
    }
    Ok(RunConfig {
        model,
        schedule,
        numerics,
        task,
        fit,
        output,
        explicit,
    })
}

/// Reads and validates a config file.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("run.cfg"), &[])
    }

    const MINIMAL: &str = "\
# base case
model.r = 1
model.K = 1
model.x0 = 0.32
schedule.kind = constant
schedule.a = 0.5
numerics.scheme = euler
numerics.h = 1e-3
numerics.horizon = 10
";

    #[test]
    fn minimal_simulate_config() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.require_model().unwrap().x0, 0.32);
        assert_eq!(c.schedule, Some(AlleeSchedule::Constant { a: 0.5 }));
        assert_eq!(c.numerics.scheme, Scheme::Euler);
        assert_eq!(c.numerics.h, 1e-3);
    }

    fn key_of(e: AlleeError) -> String {
        match e {
            AlleeError::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn sigmoid_without_direction() {
        let text = "schedule.kind = sigmoid\nschedule.a_hi = 0.9\nschedule.a_lo = 0.1\nschedule.theta = 1\nschedule.eps = 0.1\n";
        assert_eq!(key_of(parse(text).unwrap_err()), "schedule.direction");
        let ok = format!("{text}schedule.direction = increasing\n");
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn negative_step() {
        let text = MINIMAL.replace("numerics.h = 1e-3", "numerics.h = -0.1");
        let e = parse(&text).unwrap_err();
        assert!(e.is_validation());
        assert_eq!(key_of(e), "numerics.h");
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        let e = parse("model.rr = 1\n").unwrap_err();
        assert!(matches!(e, AlleeError::Parse { line: 1, .. }), "{e}");
        assert!(e.to_string().contains("model.rr"));
        let e = parse(&format!("{MINIMAL}schedule.eps = 0.1\n")).unwrap_err();
        assert_eq!(key_of(e), "schedule.eps");
        assert!(parse("model.r = 1\nmodel.r = 2\n").is_err());
        assert!(parse("a.b.c = 1\n").is_err());
        assert!(parse("justtext\n").is_err());
    }

    #[test]
    fn type_mismatch_and_missing() {
        let e = parse(&MINIMAL.replace("model.r = 1", "model.r = fast")).unwrap_err();
        assert_eq!(key_of(e), "model.r");
        let e = parse(&MINIMAL.replace("model.K = 1\n", "")).unwrap_err();
        assert_eq!(key_of(e), "model.K");
        let e = parse(&MINIMAL.replace("schedule.a = 0.5", "schedule.a = 1.5")).unwrap_err();
        assert_eq!(key_of(e), "schedule");
    }

    #[test]
    fn overrides_take_precedence() {
        let over = vec![parse_override("numerics.h=1e-4").unwrap()];
        let c = parse_config(MINIMAL, Path::new("run.cfg"), &over).unwrap();
        assert_eq!(c.numerics.h, 1e-4);
        assert!(parse_override("numerics.hh=1").is_err());
        assert!(parse_override("numerics.h").is_err());
    }

    #[test]
    fn lists_and_missing_files() {
        let c = parse("task.h_list = 1e-2, 1e-3\ntask.x0_grid = 0.1,0.2\n").unwrap();
        assert_eq!(c.task.h_list, Some(vec![1e-2, 1e-3]));
        assert!(parse("task.h_list = 1e-3, 1e-2\n").is_err());
        let e = parse("fit.data = /nonexistent/data.csv\n").unwrap_err();
        assert_eq!(key_of(e), "fit.data");
    }
}
