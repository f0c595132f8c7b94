use crate::error::{Error, Result};
use crate::exec::Execution;

/// Sampling, detection and histogramming parameters of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub duration: f64,
    /// Slow-envelope sampling step; detection resolves one click per step.
    pub envelope_dt: f64,
    /// Grid step of the sampled phase processes.
    pub phase_dt: f64,
    /// Mean singles rate per detector (counts/s).
    pub mean_click_rate: f64,
    pub master_seed: u64,
    pub trials: usize,
    pub bin_width: f64,
    /// Histogram covers ΔT ∈ [−range, range).
    pub range: f64,
    pub execution: Execution,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        SimulationPlan {
            duration: 2.0,
            envelope_dt: 10e-9,
            phase_dt: 100e-9,
            mean_click_rate: 5e4,
            master_seed: 0,
            trials: 1,
            bin_width: 10e-9,
            range: 2e-6,
            execution: Execution::Parallel,
        }
    }
}

impl SimulationPlan {
    pub fn bin_count(&self) -> usize {
        (2.0 * self.range / self.bin_width).round() as usize
    }

    pub fn envelope_steps(&self) -> u64 {
        (self.duration / self.envelope_dt).round() as u64
    }

    /// Checks the plan against a beat frequency `delta_f`; `histogram` adds
    /// the minimum-statistics requirement.
    pub fn validate(&self, delta_f: f64, histogram: bool) -> Result<()> {
        for (name, v) in [
            ("duration", self.duration),
            ("envelope_dt", self.envelope_dt),
            ("phase_dt", self.phase_dt),
            ("mean_click_rate", self.mean_click_rate),
            ("bin_width", self.bin_width),
            ("range", self.range),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Plan(format!("{name} must be positive, got {v}")));
            }
        }
        if self.duration <= self.envelope_dt {
            return Err(Error::Plan("duration must exceed envelope_dt".into()));
        }
        if self.trials == 0 {
            return Err(Error::Plan("trials must be at least 1".into()));
        }
        if self.range < self.bin_width {
            return Err(Error::Plan("histogram range is narrower than one bin".into()));
        }
        if delta_f != 0.0 && 20.0 * self.envelope_dt > 1.0 / delta_f.abs() {
            return Err(Error::Plan(format!(
                "envelope_dt {:e} s gives fewer than 20 samples per beat period at Δf = {delta_f:e} Hz",
                self.envelope_dt
            )));
        }
        if histogram && self.duration * self.mean_click_rate < 1e4 {
            return Err(Error::Plan(format!(
                "duration × rate = {:e} < 1e4 expected clicks",
                self.duration * self.mean_click_rate
            )));
        }
        Ok(())
    }
}
