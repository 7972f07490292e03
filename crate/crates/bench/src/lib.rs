//! Shared setup for the pipeline benchmarks.

use chrono::NaiveDate;

use homesim_core::action_script::{parse_script, Script, ScriptMetadata};
use homesim_core::env_model::{load_layout, HomeLayout, Vec3};
use homesim_core::rng::Rng;
use homesim_core::sensors::{MotionSensor, SensorSuite};
use homesim_core::sim_engine::{Trajectory, TrajectorySample};

pub fn home_a() -> HomeLayout {
    let json = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/layouts/home_a.json"
    ))
    .expect("fixture layout");
    load_layout(&json).expect("layout parses")
}

pub fn breakfast_script() -> Script {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/scripts/breakfast_block.txt"
    ))
    .expect("fixture script");
    let (script, diags) = parse_script(&text, ScriptMetadata::default());
    assert!(diags.is_empty());
    script
}

/// A random-walk trajectory with `len` samples on the 0.2 s grid.
pub fn synthetic_trajectory(len: usize, seed: u64) -> Trajectory {
    let mut rng = Rng::new(seed);
    let mut pos = Vec3::new(0.0, 0.0, 0.0);
    let dt_us = 200_000;
    let samples = (0..len)
        .map(|i| {
            if i > 0 {
                let angle = rng.range_f64(0.0, std::f64::consts::TAU);
                let step = rng.range_f64(0.0, 0.3);
                pos = Vec3::new(pos.x + step * angle.cos(), 0.0, pos.z + step * angle.sin());
            }
            TrajectorySample {
                t_us: i as i64 * dt_us,
                position: pos,
                step_index: 0,
            }
        })
        .collect();
    Trajectory {
        epoch_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        dt_us,
        samples,
    }
}

pub fn arena_sensors(count: usize) -> SensorSuite {
    let mut rng = Rng::new(77);
    SensorSuite {
        motion: (0..count)
            .map(|i| MotionSensor {
                id: format!("M{:03}", i + 1),
                room: "arena".into(),
                position: Vec3::new(rng.range_f64(-10.0, 10.0), 0.0, rng.range_f64(-10.0, 10.0)),
                radius: 5.0,
            })
            .collect(),
        doors: vec![],
        devices: vec![],
    }
}
