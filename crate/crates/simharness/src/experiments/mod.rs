//! Per-experiment data generation and method scoring.

pub mod multitest;
pub mod regression;
pub mod trend;
