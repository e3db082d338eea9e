use std::fs;

use allee_core::integrators::{cubature_integrate, euler_integrate};
use allee_core::io::{load_config, load_observations, read_trajectory, write_trajectory};
use allee_core::{AlleeError, AlleeSchedule, ModelParams};
use proptest::prelude::*;
use tempfile::tempdir;

#[test]
fn observations_from_disk() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("obs.csv");
    fs::write(&path, "time,value\n2000,10\n2005,NA\n2010,12\n2015,9\n").unwrap();
    let obs = load_observations(&path).unwrap();
    assert_eq!(obs.records().len(), 4);
    assert_eq!(obs.present_count(), 3);
    assert_eq!(obs.records()[1].value, None);

    fs::write(&path, "time,value\n2000,10\n2010,12\n2005,9\n2015,9\n").unwrap();
    match load_observations(&path).unwrap_err() {
        AlleeError::Parse { line, path: p, .. } => {
            assert_eq!(line, 4);
            assert_eq!(p, path);
        }
        other => panic!("unexpected {other}"),
    }
    fs::write(&path, "").unwrap();
    assert!(load_observations(&path).is_err());
    assert!(load_observations(&dir.path().join("missing.csv")).is_err());
}

#[test]
fn extinct_trajectory_ends_in_literal_zeros() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let p = ModelParams::new(1.0, 1.0, 0.32).unwrap();
    let s = AlleeSchedule::constant(0.5).unwrap();
    let traj = cubature_integrate(&p, &s, 1e-2, 3.0).unwrap();
    write_trajectory(&traj, &s, &path, 1).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    assert_eq!(last.split(',').nth(1), Some("0"));
    let back = read_trajectory(&path).unwrap();
    assert_eq!(back.states, traj.states);
    assert_eq!(back.times, traj.times);
}

#[test]
fn trajectory_at_capacity_is_flat() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let p = ModelParams::new(1.0, 2.0, 2.0).unwrap();
    let s = AlleeSchedule::oscillatory(0.8, 0.01, 1.0).unwrap();
    let traj = euler_integrate(&p, &s, 1e-2, 2.0).unwrap();
    write_trajectory(&traj, &s, &path, 3).unwrap();
    let back = read_trajectory(&path).unwrap();
    assert!(back.states.iter().all(|&x| x == back.states[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectory_round_trip_is_bit_exact(x0 in 0.0..1.0f64, a in 0.05..0.95f64, h in 1e-3..0.2f64) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let p = ModelParams::new(1.3, 1.0, x0).unwrap();
        let s = AlleeSchedule::constant(a).unwrap();
        let traj = cubature_integrate(&p, &s, h, 4.0).unwrap();
        write_trajectory(&traj, &s, &path, 1).unwrap();
        let back = read_trajectory(&path).unwrap();
        prop_assert_eq!(&back.states, &traj.states);
        prop_assert_eq!(&back.times, &traj.times);
        prop_assert!(back.allee.iter().all(|&v| v == a));
    }
}

#[test]
fn config_file_with_relative_data_path() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("obs.csv"), "time,value\n0,1\n1,2\n2,3\n").unwrap();
    let cfg_path = dir.path().join("fit.cfg");
    fs::write(&cfg_path, "fit.data = obs.csv  # next to the config\nfit.seed = 3\noutput.dir = out\n").unwrap();
    let cfg = load_config(&cfg_path, &[]).unwrap();
    assert_eq!(cfg.fit.data.as_deref(), Some(dir.path().join("obs.csv").as_path()));
    assert_eq!(cfg.fit.config.seed, 3);
    assert_eq!(cfg.output.dir, dir.path().join("out"));
    assert!(cfg.is_set("fit.seed") && !cfg.is_set("fit.h"));
}

#[test]
fn tabulated_schedule_from_config() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "t,a\n0,0.2\n5,0.6\n10,0.4\n").unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(
        &cfg_path,
        "model.r = 1\nmodel.K = 1\nmodel.x0 = 0.5\nschedule.kind = tabulated\nschedule.file = a.csv\nschedule.extrapolation = strict\n",
    )
    .unwrap();
    let cfg = load_config(&cfg_path, &[]).unwrap();
    let s = cfg.require_schedule().unwrap();
    assert!((s.value(2.5) - 0.4).abs() < 1e-15);
    assert!(s.eval(11.0).is_err());
}
