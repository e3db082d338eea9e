//! Invariants of the exact solution, the integrators and the calibration
//! objective on randomly drawn models.

mod common;

use allee_core::calibrate::{objective, Observation, Observations};
use allee_core::exact::{big_i, big_l, exact_state, extinction_time, from_w, to_w};
use allee_core::integrators::{cubature_integrate, euler_integrate, rhs};
use allee_core::schedules::{AlleeSchedule, Direction, DEFAULT_VALIDATION_GRID};
use allee_core::ModelParams;
use common::{model_strategy, params};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubature_and_euler_stay_in_range(
        (r, k, sched) in model_strategy(),
        x0 in 0.0..1.0f64,
        log_h in -3.0..0.0f64,
    ) {
        let p = params(r, k, x0);
        let h = 10f64.powf(log_h);
        let traj = cubature_integrate(&p, &sched, h, 10.0).unwrap();
        for &x in &traj.states {
            prop_assert!((0.0..=k).contains(&x), "state {} outside [0, {}]", x, k);
        }
        if let Some(i) = traj.extinction_index {
            prop_assert!(traj.states[i..].iter().all(|&x| x == 0.0));
        }
        // explicit steps may overshoot K when r h is large, but never go negative
        let euler = euler_integrate(&p, &sched, h, 10.0).unwrap();
        prop_assert!(euler.states.iter().all(|&x| x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn w_transform_round_trip(x in 1e-6..0.999_999f64, k in 0.1..1e6f64) {
        let w = to_w(x * k, k).unwrap();
        let back = from_w(w, k).unwrap();
        prop_assert!((back - x * k).abs() <= 1e-12 * k);
    }

    #[test]
    fn l_increases_and_i_decreases(
        (r, k, sched) in model_strategy(),
        x0 in 0.01..0.99f64,
        t1 in 0.0..5.0f64,
        dt in 0.01..5.0f64,
    ) {
        let p = params(r, k, x0);
        let l1 = big_l(&p, &sched, t1, 1e-10).unwrap();
        let l2 = big_l(&p, &sched, t1 + dt, 1e-10).unwrap();
        prop_assert!(l2 > l1 - 1e-12);
        let i1 = big_i(&p, &sched, t1, 1e-10).unwrap();
        let i2 = big_i(&p, &sched, t1 + dt, 1e-10).unwrap();
        prop_assert!(i2 < i1 + 1e-12);
    }

    #[test]
    fn exact_solution_satisfies_the_ode(
        (r, k, sched) in model_strategy(),
        x0 in 0.02..0.98f64,
        frac in 0.05..0.9f64,
    ) {
        let p = params(r, k, x0);
        let tau = extinction_time(&p, &sched, 1e-10, 10.0).unwrap().tau;
        let t = frac * tau.min(10.0);
        let dt = 1e-4;
        prop_assume!(t > dt && t + dt < tau);
        let x = |s: f64| exact_state(&p, &sched, s, 1e-12).unwrap();
        let derivative = (x(t + dt) - x(t - dt)) / (2.0 * dt);
        let f = rhs(x(t), sched.value(t), r, k).unwrap();
        prop_assert!((derivative - f).abs() <= 1e-5 * k * r.max(1.0), "{} vs {}", derivative, f);
    }

    #[test]
    fn ordering_in_initial_state(
        (r, k, sched) in model_strategy(),
        lo in 0.01..0.98f64,
        gap in 0.001..0.5f64,
    ) {
        let hi = (lo + gap).min(0.999);
        let (pl, ph) = (params(r, k, lo), params(r, k, hi));
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            let (a, b) = (
                exact_state(&pl, &sched, t, 1e-11).unwrap(),
                exact_state(&ph, &sched, t, 1e-11).unwrap(),
            );
            prop_assert!(a <= b + 1e-9, "t = {}: {} > {}", t, a, b);
        }
        let (ta, tb) = (
            cubature_integrate(&pl, &sched, 1e-2, 10.0).unwrap(),
            cubature_integrate(&ph, &sched, 1e-2, 10.0).unwrap(),
        );
        prop_assert!(ta.states.iter().zip(&tb.states).all(|(a, b)| a <= b));
    }

    #[test]
    fn sigmoid_stays_between_levels(
        lo in 0.01..0.5f64,
        gap in 0.01..0.49f64,
        theta in -5.0..5.0f64,
        eps in 0.01..3.0f64,
        up in any::<bool>(),
        t1 in -10.0..10.0f64,
        dt in 0.0..5.0f64,
    ) {
        let direction = if up { Direction::Increasing } else { Direction::Decreasing };
        let s = AlleeSchedule::sigmoid(lo + gap, lo, theta, eps, direction).unwrap();
        let (a1, a2) = (s.value(t1), s.value(t1 + dt));
        prop_assert!((lo..=lo + gap).contains(&a1));
        if up {
            prop_assert!(a2 >= a1);
        } else {
            prop_assert!(a2 <= a1);
        }
    }

    #[test]
    fn log_ratio_positive_where_valid((_, k, sched) in model_strategy(), t in 0.0..10.0f64) {
        prop_assert!(sched.validate(k, 10.0, DEFAULT_VALIDATION_GRID).is_ok());
        prop_assert!(sched.log_ratio(k, t).unwrap() > 0.0);
    }

    #[test]
    fn objective_ignores_record_order(seed in any::<u64>(), values in prop::collection::vec(0.2..0.9f64, 5..9)) {
        let records: Vec<Observation> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Observation { time: i as f64, value: (i != 2).then_some(v) })
            .collect();
        let mut shuffled = records.clone();
        // deterministic permutation driven by the seed
        let n = shuffled.len();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let p = ModelParams::new(0.5, 1.0, 0.6).unwrap();
        let sched = AlleeSchedule::constant(0.3).unwrap();
        let a = objective(&p, &sched, &Observations::new(records).unwrap(), 1e-2).unwrap();
        let b = objective(&p, &sched, &Observations::new(shuffled).unwrap(), 1e-2).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
