//! Scenario files: sectioned TOML with units in every key.
//!
//! ```toml
//! name = "fig4b"
//! mode = "histogram"
//!
//! [interference]
//! delta_t_ps = 0.0
//! delta_f_mhz = [3.0]
//!
//! [noise]
//! sigma_fm_khz = [0.0, 317.6]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::montecarlo::{Physics, SimulationPlan, Variant};
use crate::noise::{PhaseMode, SelfCoherence};
use crate::spectral::{build_comb, CoherenceFunction, EnvelopeShape, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Analytic coincidence over a (Δt, ΔT) grid.
    Surface,
    /// ΔT histogram at fixed Δt.
    Histogram,
    /// Δt scan at fixed ΔT values.
    DelayScan,
    /// Single-photon fringe visibility versus Δt with locked AOMs.
    FringeScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceModel {
    Comb,
    GaussianRevival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModeKind {
    Independent,
    Synchronized,
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Scan {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::Config(format!(
                "{name}: need finite start <= stop and points >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Laser {
    pub carrier_wavelength_nm: f64,
    pub wavelength_fwhm_nm: f64,
    pub revival_period_ps: f64,
    pub mode_count: usize,
    pub envelope: Envelope,
    pub coherence_model: CoherenceModel,
    /// Lobe FWHM of |γ| for the Gaussian-revival model.
    pub lobe_fwhm_ps: f64,
}

impl Default for Laser {
    fn default() -> Self {
        Laser {
            carrier_wavelength_nm: 845.0,
            wavelength_fwhm_nm: 1.0,
            revival_period_ps: 10.57,
            mode_count: 15,
            envelope: Envelope::Gaussian,
            coherence_model: CoherenceModel::Comb,
            lobe_fwhm_ps: 0.67,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Interference {
    pub delta_t_ps: Option<f64>,
    pub delta_t_scan_ps: Option<Scan>,
    pub delta_f_mhz: Vec<f64>,
    pub rf_base_mhz: f64,
}

impl Default for Interference {
    fn default() -> Self {
        Interference { delta_t_ps: None, delta_t_scan_ps: None, delta_f_mhz: vec![0.0], rf_base_mhz: 80.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub phase_mode: PhaseModeKind,
    pub sigma_fm_khz: Vec<f64>,
    pub fm_correlation_time_us: f64,
    pub phase_scramble_rate_hz: f64,
    /// Overrides the Γ FWHM implied by σ_FM in analytic output.
    pub self_coherence_fwhm_us: Option<f64>,
}

impl Default for Noise {
    fn default() -> Self {
        Noise {
            phase_mode: PhaseModeKind::Independent,
            sigma_fm_khz: vec![0.0],
            fm_correlation_time_us: 10.0,
            phase_scramble_rate_hz: 1e3,
            self_coherence_fwhm_us: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Detection {
    /// Fixed ΔT values of a delay scan.
    #[serde(rename = "delta_T_us")]
    pub delta_t_cap_us: Vec<f64>,
    /// ΔT axis of an analytic surface.
    #[serde(rename = "delta_T_scan_us")]
    pub delta_t_cap_scan_us: Option<Scan>,
    pub gate_half_width_ns: f64,
}

impl Default for Detection {
    fn default() -> Self {
        Detection { delta_t_cap_us: Vec::new(), delta_t_cap_scan_us: None, gate_half_width_ns: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Plan {
    pub duration_s: f64,
    pub envelope_dt_ns: f64,
    pub phase_dt_ns: f64,
    pub mean_click_rate_hz: f64,
    pub bin_width_ns: f64,
    pub range_us: f64,
    pub trials: usize,
    pub seed: u64,
    pub fringe_dithers: usize,
}

impl Default for Plan {
    fn default() -> Self {
        let p = SimulationPlan::default();
        Plan {
            duration_s: p.duration,
            envelope_dt_ns: p.envelope_dt * 1e9,
            phase_dt_ns: p.phase_dt * 1e9,
            mean_click_rate_hz: p.mean_click_rate,
            bin_width_ns: p.bin_width * 1e9,
            range_us: p.range * 1e6,
            trials: p.trials,
            seed: p.master_seed,
            fringe_dithers: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: String,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: RunMode,
    #[serde(default)]
    pub laser: Laser,
    #[serde(default)]
    pub interference: Interference,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub detection: Detection,
    #[serde(default)]
    pub plan: Plan,
    #[serde(default)]
    pub output: Output,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn sorted(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(format!("{name} must be finite and sorted, got {v:?}")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.laser;
        positive("laser.carrier_wavelength_nm", l.carrier_wavelength_nm)?;
        positive("laser.wavelength_fwhm_nm", l.wavelength_fwhm_nm)?;
        positive("laser.revival_period_ps", l.revival_period_ps)?;
        positive("laser.lobe_fwhm_ps", l.lobe_fwhm_ps)?;
        if l.mode_count == 0 {
            return Err(Error::Config("laser.mode_count must be at least 1".into()));
        }
        let i = &self.interference;
        sorted("interference.delta_f_mhz", &i.delta_f_mhz)?;
        let n = &self.noise;
        sorted("noise.sigma_fm_khz", &n.sigma_fm_khz)?;
        if n.sigma_fm_khz[0] < 0.0 {
            return Err(Error::Config("noise.sigma_fm_khz must be nonnegative".into()));
        }
        positive("noise.fm_correlation_time_us", n.fm_correlation_time_us)?;
        positive("noise.phase_scramble_rate_hz", n.phase_scramble_rate_hz)?;
        if let Some(w) = n.self_coherence_fwhm_us {
            positive("noise.self_coherence_fwhm_us", w)?;
        }
        if n.phase_mode == PhaseModeKind::Synchronized && i.delta_f_mhz.iter().any(|&f| f != 0.0) {
            return Err(Error::Config("synchronized AOMs require delta_f_mhz = [0]".into()));
        }
        let p = &self.plan;
        for (name, v) in [
            ("plan.duration_s", p.duration_s),
            ("plan.envelope_dt_ns", p.envelope_dt_ns),
            ("plan.phase_dt_ns", p.phase_dt_ns),
            ("plan.mean_click_rate_hz", p.mean_click_rate_hz),
            ("plan.bin_width_ns", p.bin_width_ns),
            ("plan.range_us", p.range_us),
        ] {
            positive(name, v)?;
        }
        if p.trials == 0 {
            return Err(Error::Config("plan.trials must be at least 1".into()));
        }
        if let Some(s) = &i.delta_t_scan_ps {
            s.validate("interference.delta_t_scan_ps")?;
        }
        if let Some(s) = &self.detection.delta_t_cap_scan_us {
            s.validate("detection.delta_T_scan_us")?;
        }
        positive("detection.gate_half_width_ns", self.detection.gate_half_width_ns)?;

        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("mode {:?} {what}", self.mode)))
            }
        };
        let fixed = i.delta_t_ps.is_some();
        let scan = i.delta_t_scan_ps.is_some();
        match self.mode {
            RunMode::Surface => {
                need(scan && !fixed, "needs interference.delta_t_scan_ps and no delta_t_ps")?;
                need(self.detection.delta_t_cap_scan_us.is_some(), "needs detection.delta_T_scan_us")?;
            }
            RunMode::Histogram => need(fixed && !scan, "needs interference.delta_t_ps and no delta_t_scan_ps")?,
            RunMode::DelayScan => {
                need(scan && !fixed, "needs interference.delta_t_scan_ps and no delta_t_ps")?;
                sorted("detection.delta_T_us", &self.detection.delta_t_cap_us)?;
            }
            RunMode::FringeScan => {
                need(scan && !fixed, "needs interference.delta_t_scan_ps and no delta_t_ps")?;
                need(n.phase_mode == PhaseModeKind::Synchronized, "needs noise.phase_mode = \"synchronized\"")?;
                need(p.fringe_dithers >= 3, "needs plan.fringe_dithers >= 3")?;
            }
        }
        if let Some(t) = i.delta_t_ps {
            if !t.is_finite() {
                return Err(Error::Config("interference.delta_t_ps must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn carrier_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / (self.laser.carrier_wavelength_nm * 1e-9)
    }

    pub fn revival_period(&self) -> f64 {
        self.laser.revival_period_ps * 1e-12
    }

    pub fn coherence(&self) -> Result<CoherenceFunction> {
        let l = &self.laser;
        match l.coherence_model {
            CoherenceModel::GaussianRevival => {
                CoherenceFunction::gaussian_revival(l.lobe_fwhm_ps * 1e-12, self.revival_period())
            }
            CoherenceModel::Comb => {
                let shape = match l.envelope {
                    Envelope::Gaussian => EnvelopeShape::Gaussian,
                    Envelope::Lorentzian => EnvelopeShape::Lorentzian,
                };
                Ok(CoherenceFunction::CombDerived(build_comb(
                    l.carrier_wavelength_nm * 1e-9,
                    l.wavelength_fwhm_nm * 1e-9,
                    1.0 / self.revival_period(),
                    l.mode_count,
                    &shape,
                )?))
            }
        }
    }

    pub fn physics(&self) -> Result<Physics> {
        let mut p = Physics::new(self.coherence()?, self.carrier_frequency());
        p.rf_base = self.interference.rf_base_mhz * 1e6;
        p.phase_mode = match self.noise.phase_mode {
            PhaseModeKind::Independent => PhaseMode::Independent,
            PhaseModeKind::Synchronized => PhaseMode::Synchronized,
        };
        p.fm_correlation_time = self.noise.fm_correlation_time_us * 1e-6;
        p.phase_scramble_rate = self.noise.phase_scramble_rate_hz;
        Ok(p)
    }

    /// Every (Δf, σ_FM) pair, Δf outer.
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::new();
        for &f in &self.interference.delta_f_mhz {
            for &s in &self.noise.sigma_fm_khz {
                out.push(Variant::new(f * 1e6, s * 1e3));
            }
        }
        out
    }

    /// Γ used for analytic output of `variant`.
    pub fn self_coherence(&self, variant: Variant) -> Result<SelfCoherence> {
        match self.noise.self_coherence_fwhm_us {
            Some(w) => SelfCoherence::parametric(w * 1e-6),
            None => Ok(SelfCoherence::from_fm_noise(variant.sigma_fm)),
        }
    }

    pub fn delta_t(&self) -> Option<f64> {
        self.interference.delta_t_ps.map(|t| t * 1e-12)
    }

    pub fn delta_t_grid(&self) -> Vec<f64> {
        self.interference.delta_t_scan_ps.map_or_else(Vec::new, |s| s.values().iter().map(|t| t * 1e-12).collect())
    }

    pub fn delta_t_cap_grid(&self) -> Vec<f64> {
        self.detection.delta_t_cap_scan_us.map_or_else(Vec::new, |s| s.values().iter().map(|t| t * 1e-6).collect())
    }

    pub fn delta_t_cap_targets(&self) -> Vec<f64> {
        self.detection.delta_t_cap_us.iter().map(|t| t * 1e-6).collect()
    }

    pub fn gate(&self) -> f64 {
        self.detection.gate_half_width_ns * 1e-9
    }

    pub fn simulation_plan(&self) -> SimulationPlan {
        let p = &self.plan;
        SimulationPlan {
            duration: p.duration_s,
            envelope_dt: p.envelope_dt_ns * 1e-9,
            phase_dt: p.phase_dt_ns * 1e-9,
            mean_click_rate: p.mean_click_rate_hz,
            master_seed: p.seed,
            trials: p.trials,
            bin_width: p.bin_width_ns * 1e-9,
            range: p.range_us * 1e-6,
            execution: Execution::Parallel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
name = "custom"
mode = "histogram"

[interference]
delta_t_ps = 0.0
delta_f_mhz = [3.0]
"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.laser, Laser::default());
        assert_eq!(c.variants(), vec![Variant::new(3e6, 0.0)]);
        assert_eq!(c.simulation_plan().bin_count(), 400);
    }

    #[test]
    fn rejects_inconsistent_modes() {
        let both = MINIMAL.replace("delta_t_ps = 0.0", "delta_t_ps = 0.0\ndelta_t_scan_ps = { start = 0.0, stop = 1.0, points = 3 }");
        assert!(matches!(ScenarioConfig::parse(&both), Err(Error::Config(_))));
        let unsorted = MINIMAL.replace("[3.0]", "[3.0, 1.0]");
        assert!(matches!(ScenarioConfig::parse(&unsorted), Err(Error::Config(_))));
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(ScenarioConfig::parse(&unknown), Err(Error::ConfigParse(_))));
        let sync = format!("{MINIMAL}\n[noise]\nphase_mode = \"synchronized\"\n");
        assert!(matches!(ScenarioConfig::parse(&sync), Err(Error::Config(_))));
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            0.1f64..2000.0,
            1usize..40,
            prop::collection::vec(-10.0f64..10.0, 1..4),
            prop::collection::vec(0.0f64..1000.0, 1..4),
            any::<u64>(),
            prop::option::of(0.01f64..100.0),
            prop_oneof![Just(RunMode::Histogram), Just(RunMode::DelayScan)],
        )
            .prop_map(|(wl, modes, mut df, mut sfm, seed, fwhm, mode)| {
                df.sort_by(f64::total_cmp);
                sfm.sort_by(f64::total_cmp);
                let mut c = ScenarioConfig {
                    name: format!("p{seed}"),
                    mode,
                    laser: Laser { carrier_wavelength_nm: wl, mode_count: modes, ..Laser::default() },
                    interference: Interference { delta_f_mhz: df, ..Interference::default() },
                    noise: Noise { sigma_fm_khz: sfm, self_coherence_fwhm_us: fwhm, ..Noise::default() },
                    detection: Detection::default(),
                    plan: Plan { seed, ..Plan::default() },
                    output: Output::default(),
                };
                match mode {
                    RunMode::Histogram => c.interference.delta_t_ps = Some(wl / 7.0),
                    _ => {
                        c.interference.delta_t_scan_ps = Some(Scan { start: -wl, stop: wl, points: modes });
                        c.detection.delta_t_cap_us = vec![0.0, wl / 1000.0];
                    }
                }
                c
            })
    }

    proptest! {
        #[test]
        fn toml_round_trip(c in arb_config()) {
            c.validate().unwrap();
            let text = c.to_toml().unwrap();
            let back = ScenarioConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_toml().unwrap(), text);
        }
    }
}
