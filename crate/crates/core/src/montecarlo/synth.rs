use crate::analytic::{cross_term_intensities, InterferenceConfig};
use crate::error::{Error, Result};
use crate::noise::PhaseProcess;

use super::plan::SimulationPlan;

/// Beamsplitter output intensities sampled at `k · dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub dt: f64,
    pub i3: Vec<f64>,
    pub i4: Vec<f64>,
}

impl IntensityTrace {
    pub fn len(&self) -> usize {
        self.i3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i3.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Factorized output intensities over `[0, plan.duration)`: the optical
/// comb contributes γ(Δt), the phases and AOM beat are sampled.
pub fn synthesize_output_intensities(
    plan: &SimulationPlan,
    phase_1: &PhaseProcess,
    phase_2: &PhaseProcess,
    config: &InterferenceConfig,
) -> Result<IntensityTrace> {
    let delta_f = config.delta_omega() / std::f64::consts::TAU;
    if delta_f != 0.0 && 20.0 * plan.envelope_dt > 1.0 / delta_f.abs() {
        return Err(Error::Plan(format!(
            "envelope_dt {:e} s is too coarse for a {delta_f:e} Hz beat",
            plan.envelope_dt
        )));
    }
    let steps = plan.envelope_steps() as usize;
    let last = (steps.saturating_sub(1)) as f64 * plan.envelope_dt;
    for p in [phase_1, phase_2] {
        if p.is_empty() || p.start > 0.0 || p.end() < last {
            return Err(Error::Plan(format!(
                "phase process covers [{:e}, {:e}] s, need [0, {last:e}] s",
                p.start,
                p.end()
            )));
        }
    }
    let gamma = config.gamma.gamma(config.delta_t());
    let (i3, i4) = (0..steps)
        .map(|k| {
            let t = k as f64 * plan.envelope_dt;
            let delta_phi = phase_2.phase_at(t) - phase_1.phase_at(t);
            cross_term_intensities(config, gamma, delta_phi, t)
        })
        .unzip();
    Ok(IntensityTrace { dt: plan.envelope_dt, i3, i4 })
}
