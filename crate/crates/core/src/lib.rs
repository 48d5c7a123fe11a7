//! Verification toolkit for log-periodic power law critical-time forecasting.
//!
//! The crate simulates a chaotic five-variable system whose `r` component
//! exhibits intermittent collapses, treats the onset of large drawdowns in
//! `r` as ground-truth critical events, fits LPPL-family models with two
//! competing estimation algorithms over windows at varying distances from
//! the event, and compares forecast accuracy with multiplicity-corrected
//! t-tests.

pub mod abcde;
pub mod config;
pub mod error;
pub mod estimators;
pub mod lppl;
pub mod optim;
pub mod pipeline;
pub mod stats;
pub mod synthetic;
pub mod timeseries;

pub use error::{Error, Result};
