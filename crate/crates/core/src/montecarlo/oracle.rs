//! Exact mode-sum evaluation of the beamsplitter outputs, used to validate
//! the two-timescale factorization.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use crate::analytic::InterferenceConfig;
use crate::error::{Error, Result};
use crate::noise::PhaseProcess;
use crate::spectral::ModeComb;

pub const MAX_MODES: usize = 31;
pub const MAX_TIMES: usize = 1_000_000;

/// Rotating-frame field of one arm after its flight time `delay`:
/// |E₀| e^{−iω_c τ} Σ_m a_m exp(i[(Ω_m + 2π f)(t − τ) + θ_m + φ(t − τ)]).
fn arm_field(
    comb: &ModeComb,
    mode_phases: &[f64],
    phase: &PhaseProcess,
    carrier: f64,
    rf: f64,
    delay: f64,
    t: f64,
) -> Complex64 {
    let local = t - delay;
    let common = TAU * rf * local + phase.phase_at(local) - TAU * carrier * delay;
    let sum: Complex64 = comb
        .amplitudes
        .iter()
        .zip(mode_phases)
        .enumerate()
        .map(|(m, (a, theta))| Complex64::from_polar(*a, TAU * comb.mode_offset(m) * local + theta))
        .sum();
    sum * Complex64::from_polar(1.0, common)
}

/// Intensities (I₃, I₄) from the full mode sum at each of `times`, with mode
/// phases θ_m shared by both arms.
pub fn full_mode_sum_oracle(
    comb: &ModeComb,
    mode_phases: &[f64],
    phases: (&PhaseProcess, &PhaseProcess),
    config: &InterferenceConfig,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if comb.mode_count() > MAX_MODES || times.len() > MAX_TIMES {
        return Err(Error::OracleScope(format!(
            "{} modes × {} times exceeds {MAX_MODES} modes / {MAX_TIMES} times",
            comb.mode_count(),
            times.len()
        )));
    }
    if mode_phases.len() != comb.mode_count() {
        return Err(Error::Config("one mode phase per comb line required".into()));
    }
    let scale = config.field_scale;
    Ok(times
        .iter()
        .map(|&t| {
            let e1 = scale
                * arm_field(comb, mode_phases, phases.0, config.carrier_frequency, config.rf_frequency_1, config.t1, t);
            let e2 = scale
                * arm_field(comb, mode_phases, phases.1, config.carrier_frequency, config.rf_frequency_2, config.t2, t);
            let i = Complex64::i();
            let e3 = (e1 + i * e2) * FRAC_1_SQRT_2;
            let e4 = (e2 + i * e1) * FRAC_1_SQRT_2;
            (e3.norm_sqr(), e4.norm_sqr())
        })
        .collect())
}
