//! Scenario-driven front end for `impulse-core`: PSD curves, threshold
//! sweeps, scaling-law verification and Monte Carlo checks as CSV or JSON.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod units;

pub use commands::{Report, Verdict};
pub use error::CliError;
pub use output::Format;
pub use scenario::{Parsed, Scenario};
