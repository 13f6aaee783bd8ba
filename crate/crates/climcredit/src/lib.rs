//! Data ingestion, calibration pipeline, reports and CLI support for the
//! climate transition credit risk model in `climcredit-core`.

pub mod bundle;
pub mod config;
pub mod fixture;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod report;
