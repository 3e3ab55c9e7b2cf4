//! Benchmark environments.

pub mod ftvaf;
pub mod ludo;
pub mod synthetic;
