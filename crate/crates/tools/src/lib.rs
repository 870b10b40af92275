//! IO, text formats, reports, and the pipeline driver for the hardening
//! engines in `gatemon-core`.

pub mod config;
pub mod formats;
pub mod pipeline;
pub mod report;
