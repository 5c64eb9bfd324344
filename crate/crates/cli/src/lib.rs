//! Experiment harness around the `priorgp` library: configuration parsing,
//! the repetition loop with per-repetition fault isolation, CSV persistence,
//! and box-plot summaries.

pub mod config;
pub mod runner;
