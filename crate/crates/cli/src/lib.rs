//! Pipeline wiring behind the `homesim` binary: configuration, the
//! generate pipeline (ground, simulate, sense, export), and the
//! train/evaluate protocol runner.

pub mod config;
pub mod logging;
pub mod pipeline;
pub mod train_eval;
