//! Named parameter sets for one-command study regeneration.

use crate::error::{AlleeError, Result};
use crate::exact::ModelParams;
use crate::integrators::{IntegratorOptions, Sampling};
use crate::schedules::{AlleeSchedule, Direction};

pub const SCENARIO_NAMES: [&str; 4] = [
    "constant",
    "sigmoid-increasing",
    "sigmoid-decreasing",
    "oscillatory",
];

/// A model, a schedule and the grids a table is built from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    /// `x0` holds the first entry of `x0_grid`.
    pub params: ModelParams,
    pub schedule: AlleeSchedule,
    /// Options for the Euler runs; the cubature scheme has no sampling choice.
    pub euler: IntegratorOptions,
    pub x0_grid: Vec<f64>,
    pub h_list: Vec<f64>,
    pub horizon: f64,
}

/// `step * i` for `i = 1..=count`.
fn table_grid(step: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| step * i as f64).collect()
}

fn sigmoid(direction: Direction) -> Result<AlleeSchedule> {
    AlleeSchedule::sigmoid(0.9, 0.1, 1.0, 0.1, direction)
}

/// Look up a scenario by name.
pub fn scenario(name: &str) -> Result<Scenario> {
    let (name, schedule, sampling, x0_grid, h_list) = match name.trim() {
        "constant" => (
            "constant",
            AlleeSchedule::constant(0.5)?,
            Sampling::StepEnd,
            vec![0.32, 0.16],
            vec![1e-2, 1e-3, 1e-4, 1e-5],
        ),
        "sigmoid-increasing" => (
            "sigmoid-increasing",
            sigmoid(Direction::Increasing)?,
            Sampling::StepEnd,
            table_grid(0.04, 10),
            vec![1e-4, 1e-5],
        ),
        "sigmoid-decreasing" => (
            "sigmoid-decreasing",
            sigmoid(Direction::Decreasing)?,
            Sampling::StepEnd,
            table_grid(0.04, 10),
            vec![1e-4, 1e-5],
        ),
        // reference values use the Allee parameter taken at the
        // start of each Euler step
        "oscillatory" => (
            "oscillatory",
            AlleeSchedule::oscillatory(0.8, 0.01, 1.0)?,
            Sampling::StepStart,
            table_grid(0.04, 6),
            vec![1e-3, 1e-4, 1e-5],
        ),
        other => {
            return Err(AlleeError::InvalidInput(format!(
                "unknown scenario `{other}` (expected one of {})",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(Scenario {
        name,
        params: ModelParams::new(1.0, 1.0, x0_grid[0])?,
        schedule,
        euler: IntegratorOptions {
            sampling,
            refine_tau: false,
        },
        x0_grid,
        h_list,
        horizon: 10.0,
    })
}
