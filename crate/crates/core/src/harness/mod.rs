//! Scenario configs, fits, engine comparison and the command-line front end.

pub mod cli;
pub mod compare;
pub mod config;
pub mod fit;
pub mod io;
pub mod run;
pub mod scenarios;

pub use compare::{compare, compare_histogram, CompareReport};
pub use config::ScenarioConfig;
pub use fit::{estimate_revival_period, fit_beating, fit_envelope, locate_lobes, Estimate, FitResult, LobeFit};
pub use scenarios::builtin;
