//! Benchmark harness for the spectral-element Helmholtz solver: experiment
//! specifications, the benchmark runners, and CSV/plot-file output.

pub mod bench;
pub mod csv;
pub mod spec;
