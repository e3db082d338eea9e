//! Random model configurations shared by the property and acceptance suites.
#![allow(dead_code)]

use allee_core::schedules::{AlleeSchedule, Direction};
use allee_core::ModelParams;
use proptest::prelude::*;

/// A schedule with `0 < a_t < K` everywhere, scaled to `capacity`.
pub fn schedule_strategy(capacity: f64) -> impl Strategy<Value = AlleeSchedule> {
    let constant = (0.05..0.95f64).prop_map(move |a| AlleeSchedule::constant(a * capacity).unwrap());
    let sigmoid = (0.02..0.5f64, 0.01..0.48f64, 0.0..5.0f64, 0.05..2.0f64, any::<bool>()).prop_map(
        move |(lo, gap, theta, eps, up)| {
            let direction = if up { Direction::Increasing } else { Direction::Decreasing };
            AlleeSchedule::sigmoid((lo + gap) * capacity, lo * capacity, theta, eps, direction).unwrap()
        },
    );
    let oscillatory = (0.01..0.4f64, 0.0..1.0f64, 0.2..5.0f64).prop_map(move |(base, frac, period)| {
        let amp = frac * (0.95 - base);
        AlleeSchedule::oscillatory(amp * capacity, base * capacity, period).unwrap()
    });
    prop_oneof![constant, sigmoid, oscillatory]
}

/// Growth rate, capacity and a schedule valid against that capacity.
pub fn model_strategy() -> impl Strategy<Value = (f64, f64, AlleeSchedule)> {
    (0.2..3.0f64, 0.5..5.0f64).prop_flat_map(|(r, k)| (Just(r), Just(k), schedule_strategy(k)))
}

pub fn params(r: f64, capacity: f64, x0_frac: f64) -> ModelParams {
    ModelParams::new(r, capacity, x0_frac * capacity).unwrap()
}
