//! Experiment harness around `aegis-core`: synthetic tasks, Byzantine
//! attacks, a training loop, communication benchmarks and the TOML
//! configuration they share.

pub mod attack;
pub mod bench;
pub mod config;
pub mod error;
pub mod task;
pub mod train;
