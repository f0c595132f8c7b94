//! Two-photon interference with continuous-wave multi-mode coherent light.
//!
//! Two engines share one scenario description: a closed-form engine
//! ([`analytic`]) and a stochastic engine ([`montecarlo`]) that synthesizes
//! beamsplitter output intensities from sampled AOM phases, draws photon
//! detections and histograms their time differences. [`harness`] ties them
//! together with scenario files, fits and the `cohsim` command line.
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod exec;
pub mod harness;
pub mod montecarlo;
pub mod noise;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
