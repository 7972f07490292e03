//! Deterministic smart-home activity simulation.
//!
//! The pipeline turns low-level action scripts into virtual ambient-sensor
//! event streams and packages them as labeled activity datasets:
//!
//! 1. [`env_model`] — home layouts: rooms, objects, and the environment graph.
//! 2. [`action_script`] — the constrained command grammar that drives agents.
//! 3. [`grounding`] — mapping free-form tokens onto the simulator vocabulary
//!    via embedding nearest-neighbor retrieval with similarity thresholds.
//! 4. [`sim_engine`] — executing a grounded script: path planning, fixed-step
//!    trajectory tracking, and environment state transitions.
//! 5. [`sensors`] — motion sensor placement and ON/OFF trigger derivation,
//!    plus door and device activation events.
//! 6. [`dataset`] — activity windows, textual sensor-event encodings, label
//!    mapping, log export, and corpus statistics.
//! 7. [`har`] — a hashed-feature linear classifier with the
//!    pretrain-on-virtual / finetune-on-real evaluation protocol.
//!
//! Everything is deterministic: the same inputs and seeds produce
//! byte-identical outputs.

pub mod action_script;
pub mod dataset;
pub mod env_model;
pub mod grounding;
pub mod har;
pub mod rng;
pub mod sensors;
pub mod sim_engine;
pub mod time;

pub use env_model::{EnvironmentGraph, HomeLayout, Room, SceneObject, Vec3};
pub use sensors::{SensorEvent, SensorKind, SensorSuite, SensorValue};
pub use time::Timestamp;
