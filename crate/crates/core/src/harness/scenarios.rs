//! Built-in scenarios for each figure panel of the reference measurements.

use crate::error::{Error, Result};

use super::config::{
    CoherenceModel, Detection, Interference, Laser, Noise, Output, PhaseModeKind, Plan, RunMode, ScenarioConfig,
    Scan,
};

/// FM deviation whose Gaussian-limit Γ FWHM is 1.18 µs.
pub const SIGMA_FM_KHZ: f64 = 317.611229;

/// σ_FM ladder used by the histogram panels.
pub const SIGMA_LADDER_KHZ: [f64; 4] = [0.0, 158.8, 317.6, 635.2];

pub const FIG5_DELTA_T_US: [f64; 4] = [0.0, 0.16, 0.32, 1.49];

pub const CATALOG: [(&str, &str); 9] = [
    ("fig2a", "analytic surface, Δf = 0"),
    ("fig2b", "analytic surface, Δf = 3 MHz"),
    ("fig3b", "fringe visibility vs Δt, synchronized AOMs"),
    ("fig4a", "ΔT histogram at Δt = 0, Δf = 0, σ_FM ladder"),
    ("fig4b", "ΔT histogram at Δt = 0, Δf = 3 MHz, σ_FM ladder"),
    ("fig5a", "Δt scan at ΔT = 0"),
    ("fig5b", "Δt scan at ΔT = 0.16 µs"),
    ("fig5c", "Δt scan at ΔT = 0.32 µs"),
    ("fig5d", "Δt scan at ΔT = 1.49 µs"),
];

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

fn base(name: &str, mode: RunMode) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        mode,
        laser: Laser::default(),
        interference: Interference::default(),
        noise: Noise::default(),
        detection: Detection::default(),
        plan: Plan::default(),
        output: Output { dir: format!("out/{name}") },
    }
}

fn fig2(name: &str, delta_f_mhz: f64) -> ScenarioConfig {
    let mut c = base(name, RunMode::Surface);
    let tp = c.laser.revival_period_ps;
    c.laser.coherence_model = CoherenceModel::GaussianRevival;
    c.interference.delta_t_scan_ps = Some(Scan { start: -2.5 * tp, stop: 2.5 * tp, points: 701 });
    c.interference.delta_f_mhz = vec![delta_f_mhz];
    c.noise.sigma_fm_khz = vec![SIGMA_FM_KHZ];
    c.detection.delta_t_cap_scan_us = Some(Scan { start: -2.0, stop: 2.0, points: 401 });
    c
}

fn fig4(name: &str, delta_f_mhz: f64) -> ScenarioConfig {
    let mut c = base(name, RunMode::Histogram);
    c.interference.delta_t_ps = Some(0.0);
    c.interference.delta_f_mhz = vec![delta_f_mhz];
    c.noise.sigma_fm_khz = SIGMA_LADDER_KHZ.to_vec();
    c
}

fn fig5(name: &str, delta_t_cap_us: f64) -> ScenarioConfig {
    let mut c = base(name, RunMode::DelayScan);
    let tp = c.laser.revival_period_ps;
    c.interference.delta_t_scan_ps = Some(Scan { start: -1.5 * tp, stop: 1.5 * tp, points: 127 });
    c.interference.delta_f_mhz = vec![0.0, 3.0];
    c.detection.delta_t_cap_us = vec![delta_t_cap_us];
    c.plan.duration_s = 0.5;
    c.plan.mean_click_rate_hz = 2e5;
    c
}

fn fig3b() -> ScenarioConfig {
    let mut c = base("fig3b", RunMode::FringeScan);
    let tp = c.laser.revival_period_ps;
    c.interference.delta_t_scan_ps = Some(Scan { start: -1.5 * tp, stop: 1.5 * tp, points: 127 });
    c.noise.phase_mode = PhaseModeKind::Synchronized;
    c.plan.duration_s = 0.01;
    c.plan.mean_click_rate_hz = 1e6;
    c
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let c = match name {
        "fig2a" => fig2(name, 0.0),
        "fig2b" => fig2(name, 3.0),
        "fig3b" => fig3b(),
        "fig4a" => fig4(name, 0.0),
        "fig4b" => fig4(name, 3.0),
        "fig5a" => fig5(name, FIG5_DELTA_T_US[0]),
        "fig5b" => fig5(name, FIG5_DELTA_T_US[1]),
        "fig5c" => fig5(name, FIG5_DELTA_T_US[2]),
        "fig5d" => fig5(name, FIG5_DELTA_T_US[3]),
        _ => {
            return Err(Error::UnknownScenario { name: name.into(), available: names().join(", ") });
        }
    };
    c.validate()?;
    Ok(c)
}
