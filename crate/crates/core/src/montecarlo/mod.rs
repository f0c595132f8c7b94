//! Stochastic engine: sampled AOM phases → beamsplitter output intensities →
//! Poisson detections → coincidence histograms.
//!
//! The optical comb enters only through γ(Δt) (two-timescale factorization);
//! [`oracle::full_mode_sum_oracle`] evaluates the full mode sum to check that
//! approximation.

mod correlate;
mod detect;
pub mod oracle;
mod plan;
mod run;
mod synth;

pub use correlate::{correlate, normalize, CoincidenceHistogram, Normalization};
pub use detect::{detect, DetectorId, Detector, TimestampStream};
pub use oracle::full_mode_sum_oracle;
pub use plan::SimulationPlan;
pub use run::{
    delay_scan, fringe_scan, histogram_run, simulate_trial, FringePoint, HistogramRun, Physics,
    ScanPoint, Variant,
};
pub use synth::{synthesize_output_intensities, IntensityTrace};
