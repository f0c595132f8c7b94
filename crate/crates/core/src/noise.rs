//! AOM-imposed phases: inter-arm phase scrambling, FM noise, and the
//! self-coherence envelope |Γ(ΔT)| it produces.
//!
//! FM noise is an Ornstein–Uhlenbeck instantaneous-frequency deviation δf(t)
//! with stationary standard deviation σ_FM; its phase is φ_FM = 2π ∫ δf dt.
//! In independent mode each arm also receives piecewise-constant uniform
//! phases with exponential holding times, and the FM noise drives AOM1 only.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::seed::{self, stream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseMode {
    /// Both AOMs share one RF source: the inter-arm phase stays constant.
    Synchronized,
    #[default]
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    fn tag(self) -> u64 {
        match self {
            Arm::One => 1,
            Arm::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AomConfig {
    pub rf_frequency_1: f64,
    pub rf_frequency_2: f64,
    pub phase_mode: PhaseMode,
    pub sigma_fm: f64,
    pub fm_correlation_time: f64,
    pub phase_scramble_rate: f64,
}

impl Default for AomConfig {
    fn default() -> Self {
        AomConfig {
            rf_frequency_1: 80e6,
            rf_frequency_2: 80e6,
            phase_mode: PhaseMode::Independent,
            sigma_fm: 0.0,
            fm_correlation_time: 10e-6,
            phase_scramble_rate: 1e3,
        }
    }
}

impl AomConfig {
    /// Independent drives at `base` and `base + delta_f`.
    pub fn independent(base: f64, delta_f: f64, sigma_fm: f64) -> Self {
        AomConfig {
            rf_frequency_1: base,
            rf_frequency_2: base + delta_f,
            sigma_fm,
            ..AomConfig::default()
        }
    }

    pub fn delta_f(&self) -> f64 {
        self.rf_frequency_2 - self.rf_frequency_1
    }

    pub fn delta_omega(&self) -> f64 {
        TAU * self.delta_f()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_fm >= 0.0 && self.sigma_fm.is_finite()) {
            return Err(Error::Config(format!("sigma_fm must be ≥ 0, got {}", self.sigma_fm)));
        }
        if !(self.fm_correlation_time > 0.0) {
            return Err(Error::Config("fm_correlation_time must be positive".into()));
        }
        if self.phase_mode == PhaseMode::Independent && !(self.phase_scramble_rate > 0.0) {
            return Err(Error::Config(
                "phase_scramble_rate must be positive in independent mode".into(),
            ));
        }
        if self.phase_mode == PhaseMode::Synchronized && self.delta_f() != 0.0 {
            return Err(Error::Config("synchronized AOMs must share one RF frequency".into()));
        }
        Ok(())
    }

    fn fm_applies_to(&self, arm: Arm) -> bool {
        self.sigma_fm > 0.0 && (self.phase_mode == PhaseMode::Synchronized || arm == Arm::One)
    }
}

/// Sampled excess phase of one arm on a uniform grid.
///
/// The FM component is stored on the grid; scramble jumps are stored as
/// `(time, new_phase)` events since they are piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProcess {
    pub start: f64,
    pub dt: f64,
    pub fm_phase: Vec<f64>,
    pub frequency_deviation: Vec<f64>,
    pub initial_scramble: f64,
    pub jumps: Vec<(f64, f64)>,
    pub seed: u64,
}

impl PhaseProcess {
    pub fn len(&self) -> usize {
        self.fm_phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fm_phase.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.start + (self.len().saturating_sub(1)) as f64 * self.dt
    }

    pub fn sample_time(&self, index: usize) -> f64 {
        self.start + index as f64 * self.dt
    }

    pub fn sample_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.sample_time(i))
    }

    /// Total excess phase at each grid sample.
    pub fn phase_values(&self) -> Vec<f64> {
        self.sample_times()
            .zip(&self.fm_phase)
            .map(|(t, fm)| fm + self.scramble_at(t))
            .collect()
    }

    pub fn scramble_at(&self, t: f64) -> f64 {
        match self.jumps.partition_point(|&(tj, _)| tj <= t) {
            0 => self.initial_scramble,
            k => self.jumps[k - 1].1,
        }
    }

    /// FM phase by linear interpolation, clamped to the sampled span.
    pub fn fm_phase_at(&self, t: f64) -> f64 {
        let n = self.len();
        let x = ((t - self.start) / self.dt).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return self.fm_phase[0];
        }
        let w = x - i as f64;
        self.fm_phase[i] * (1.0 - w) + self.fm_phase[i + 1] * w
    }

    pub fn phase_at(&self, t: f64) -> f64 {
        self.fm_phase_at(t) + self.scramble_at(t)
    }
}

/// Stateful generator for one arm's phase, producing consecutive grid chunks.
pub struct PhaseGenerator {
    dt: f64,
    seed: u64,
    next_index: u64,
    fm: Option<FmState>,
    scramble: Option<ScrambleState>,
}

struct FmState {
    rng: SimRng,
    decay: f64,
    kick: f64,
    deviation: f64,
    phase: f64,
}

struct ScrambleState {
    rng: SimRng,
    holding: Exp<f64>,
    current: f64,
    next_jump: f64,
}

impl PhaseGenerator {
    pub fn new(config: &AomConfig, arm: Arm, dt: f64, seed: u64) -> Result<Self> {
        config.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config("phase sampling step must be positive".into()));
        }
        let limit = config.fm_correlation_time / 4.0;
        if dt >= limit {
            return Err(Error::Discretization { step: dt, limit });
        }
        // Synchronized arms draw from the same stream and are identical.
        let arm_tag = match config.phase_mode {
            PhaseMode::Synchronized => Arm::One.tag(),
            PhaseMode::Independent => arm.tag(),
        };
        let fm = config.fm_applies_to(arm).then(|| {
            let mut rng = seed::rng(seed::derive(seed, &[stream::ARM, arm_tag, 0]));
            let decay = (-dt / config.fm_correlation_time).exp();
            let z: f64 = StandardNormal.sample(&mut rng);
            FmState {
                rng,
                decay,
                kick: config.sigma_fm * (1.0 - decay * decay).sqrt(),
                deviation: config.sigma_fm * z,
                phase: 0.0,
            }
        });
        let scramble = match config.phase_mode {
            PhaseMode::Synchronized => None,
            PhaseMode::Independent => {
                let mut rng = seed::rng(seed::derive(seed, &[stream::ARM, arm_tag, 1]));
                let holding = Exp::new(config.phase_scramble_rate)
                    .map_err(|e| Error::Config(format!("scramble rate: {e}")))?;
                let current = rng.random::<f64>() * TAU;
                let next_jump = holding.sample(&mut rng);
                Some(ScrambleState { rng, holding, current, next_jump })
            }
        };
        Ok(PhaseGenerator { dt, seed, next_index: 0, fm, scramble })
    }

    /// Produces grid samples `k0 ..= k0 + steps`; consecutive chunks share
    /// their boundary sample.
    pub fn next_chunk(&mut self, steps: usize) -> PhaseProcess {
        self.chunk(steps, true)
    }

    /// As [`Self::next_chunk`], but an arm without FM noise is returned as a
    /// two-sample grid spanning the chunk.
    pub fn next_span(&mut self, steps: usize) -> PhaseProcess {
        self.chunk(steps, false)
    }

    fn chunk(&mut self, steps: usize, dense: bool) -> PhaseProcess {
        let k0 = self.next_index;
        let start = k0 as f64 * self.dt;
        let mut dt = self.dt;
        let mut fm_phase = Vec::with_capacity(steps + 1);
        let mut deviation = Vec::with_capacity(steps + 1);
        match &mut self.fm {
            Some(fm) => {
                fm_phase.push(fm.phase);
                deviation.push(fm.deviation);
                for _ in 0..steps {
                    let z: f64 = StandardNormal.sample(&mut fm.rng);
                    let next = fm.decay * fm.deviation + fm.kick * z;
                    fm.phase += PI * self.dt * (fm.deviation + next);
                    fm.deviation = next;
                    fm_phase.push(fm.phase);
                    deviation.push(fm.deviation);
                }
            }
            None => {
                let mut n = steps + 1;
                if !dense && steps > 1 {
                    dt *= steps as f64;
                    n = 2;
                }
                fm_phase.resize(n, 0.0);
                deviation.resize(n, 0.0);
            }
        }
        let end = (k0 + steps as u64) as f64 * self.dt;
        let (initial_scramble, jumps) = match &mut self.scramble {
            Some(s) => {
                let initial = s.current;
                let mut jumps = Vec::new();
                while s.next_jump <= end {
                    s.current = s.rng.random::<f64>() * TAU;
                    jumps.push((s.next_jump, s.current));
                    s.next_jump += s.holding.sample(&mut s.rng);
                }
                (initial, jumps)
            }
            None => (0.0, Vec::new()),
        };
        self.next_index = k0 + steps as u64;
        PhaseProcess {
            start,
            dt,
            fm_phase,
            frequency_deviation: deviation,
            initial_scramble,
            jumps,
            seed: self.seed,
        }
    }
}

/// Samples one arm's excess phase over `[0, duration]`.
pub fn sample_phase_process(
    config: &AomConfig,
    arm: Arm,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<PhaseProcess> {
    if !(dt > 0.0 && duration > dt) {
        return Err(Error::Config(format!(
            "need duration > dt > 0, got duration {duration:e}, dt {dt:e}"
        )));
    }
    let steps = (duration / dt).ceil() as usize;
    Ok(PhaseGenerator::new(config, arm, dt, seed)?.next_chunk(steps))
}

/// |Γ(ΔT)| = exp(−4 ln2 ΔT² / fwhm²).
pub fn gamma_cap_parametric(fwhm: f64, delta_t_cap: f64) -> f64 {
    if fwhm.is_infinite() {
        return 1.0;
    }
    (-4.0 * LN_2 * delta_t_cap * delta_t_cap / (fwhm * fwhm)).exp()
}

/// Short-lag (Gaussian) limit of the OU self-coherence:
/// |Γ| ≈ exp(−(2π σ ΔT)²/2), whose FWHM is sqrt(2 ln2)/(π σ).
pub fn fm_gaussian_limit_fwhm(sigma_fm: f64) -> f64 {
    if sigma_fm == 0.0 {
        f64::INFINITY
    } else {
        (2.0 * LN_2).sqrt() / (PI * sigma_fm)
    }
}

/// Inverse of [`fm_gaussian_limit_fwhm`].
pub fn sigma_fm_for_fwhm(fwhm: f64) -> f64 {
    (2.0 * LN_2).sqrt() / (PI * fwhm)
}

/// Exact |Γ(ΔT)| for OU frequency noise: the phase increment is Gaussian
/// with variance (2πσ)²·2τ²(x − 1 + e^(−x)), x = |ΔT|/τ.
pub fn ou_self_coherence(sigma_fm: f64, correlation_time: f64, delta_t_cap: f64) -> f64 {
    let x = delta_t_cap.abs() / correlation_time;
    let var = (TAU * sigma_fm).powi(2) * 2.0 * correlation_time.powi(2) * (x - 1.0 + (-x).exp());
    (-0.5 * var).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelfCoherence {
    ParametricGaussian { fwhm: f64 },
    Empirical { delays: Vec<f64>, values: Vec<f64>, samples: usize },
}

impl SelfCoherence {
    /// Γ ≡ 1.
    pub fn perfect() -> Self {
        SelfCoherence::ParametricGaussian { fwhm: f64::INFINITY }
    }

    pub fn parametric(fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::Config(format!("self-coherence FWHM must be positive, got {fwhm}")));
        }
        Ok(SelfCoherence::ParametricGaussian { fwhm })
    }

    /// Gaussian-limit envelope implied by FM noise of standard deviation `sigma_fm`.
    pub fn from_fm_noise(sigma_fm: f64) -> Self {
        SelfCoherence::ParametricGaussian { fwhm: fm_gaussian_limit_fwhm(sigma_fm) }
    }

    pub fn eval(&self, delta_t_cap: f64) -> f64 {
        match self {
            SelfCoherence::ParametricGaussian { fwhm } => gamma_cap_parametric(*fwhm, delta_t_cap),
            SelfCoherence::Empirical { delays, values, .. } => {
                let x = delta_t_cap.abs();
                let j = delays.partition_point(|&d| d <= x);
                if j == 0 {
                    values[0]
                } else if j == delays.len() {
                    values[j - 1]
                } else {
                    let w = (x - delays[j - 1]) / (delays[j] - delays[j - 1]);
                    values[j - 1] * (1.0 - w) + values[j] * w
                }
            }
        }
    }

    /// Full width at half maximum; `None` when the envelope never reaches ½.
    pub fn fwhm(&self) -> Option<f64> {
        match self {
            SelfCoherence::ParametricGaussian { fwhm } => fwhm.is_finite().then_some(*fwhm),
            SelfCoherence::Empirical { delays, values, .. } => {
                let j = values.iter().position(|&v| v <= 0.5)?;
                if j == 0 {
                    return Some(0.0);
                }
                let w = (values[j - 1] - 0.5) / (values[j - 1] - values[j]);
                Some(2.0 * (delays[j - 1] + w * (delays[j] - delays[j - 1])))
            }
        }
    }
}

/// Time-averaged |⟨exp(i[φ_FM(t+ΔT) − φ_FM(t)])⟩| over the trajectory.
pub fn gamma_cap_empirical(p: &PhaseProcess, delta_t_grid: &[f64]) -> Result<SelfCoherence> {
    if delta_t_grid.is_empty() || delta_t_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Estimation("ΔT grid must be non-empty and nonnegative".into()));
    }
    let max_lag = delta_t_grid.iter().cloned().fold(0.0, f64::max);
    let duration = p.end() - p.start;
    if duration < 10.0 * max_lag {
        return Err(Error::Estimation(format!(
            "trajectory spans {duration:e} s; at least {:e} s required",
            10.0 * max_lag
        )));
    }
    let phase = &p.fm_phase;
    let n = phase.len();
    let values = delta_t_grid
        .iter()
        .map(|&lag| {
            let x = lag / p.dt;
            let k = x.floor() as usize;
            let w = x - k as f64;
            let count = n - k - 1;
            let sum: Complex64 = (0..count)
                .map(|i| {
                    let later = phase[i + k] * (1.0 - w) + phase[i + k + 1] * w;
                    Complex64::from_polar(1.0, later - phase[i])
                })
                .sum();
            (sum / count as f64).norm()
        })
        .collect();
    Ok(SelfCoherence::Empirical {
        delays: delta_t_grid.to_vec(),
        values,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn independent(sigma_fm: f64, tau: f64, rate: f64) -> AomConfig {
        AomConfig {
            sigma_fm,
            fm_correlation_time: tau,
            phase_scramble_rate: rate,
            ..AomConfig::default()
        }
    }

    #[test]
    fn synchronized_without_fm_is_constant_and_shared() {
        let cfg = AomConfig { phase_mode: PhaseMode::Synchronized, ..AomConfig::default() };
        let a = sample_phase_process(&cfg, Arm::One, 1e-3, 1e-7, 3).unwrap();
        let b = sample_phase_process(&cfg, Arm::Two, 1e-3, 1e-7, 3).unwrap();
        assert_eq!(a.phase_values(), b.phase_values());
        assert!(a.phase_values().iter().all(|&v| v == a.phase_values()[0]));
    }

    #[test]
    fn synchronized_with_fm_is_shared() {
        let cfg = AomConfig {
            phase_mode: PhaseMode::Synchronized,
            sigma_fm: 1e5,
            ..AomConfig::default()
        };
        let a = sample_phase_process(&cfg, Arm::One, 1e-3, 1e-7, 3).unwrap();
        let b = sample_phase_process(&cfg, Arm::Two, 1e-3, 1e-7, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn independent_phase_difference_averages_out() {
        let cfg = independent(0.0, 10e-6, 1e7);
        let n = 1_000_000;
        let dt = 1e-8;
        let duration = (n - 1) as f64 * dt;
        let a = sample_phase_process(&cfg, Arm::One, duration, dt, 11).unwrap();
        let b = sample_phase_process(&cfg, Arm::Two, duration, dt, 11).unwrap();
        assert_eq!(a.len(), n);
        let sum: Complex64 = a
            .phase_values()
            .iter()
            .zip(b.phase_values())
            .map(|(p1, p2)| Complex64::from_polar(1.0, p2 - p1))
            .sum();
        let modulus = (sum / n as f64).norm();
        assert!(modulus < 0.01, "circular mean {modulus}");
    }

    #[test]
    fn reproducible_and_chunk_consistent() {
        let cfg = independent(5e4, 1e-6, 1e4);
        let a = sample_phase_process(&cfg, Arm::One, 1e-3, 1e-8, 99).unwrap();
        let b = sample_phase_process(&cfg, Arm::One, 1e-3, 1e-8, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.sample_times().zip(a.sample_times().skip(1)).all(|(x, y)| y > x));

        let mut gen = PhaseGenerator::new(&cfg, Arm::One, 1e-8, 99).unwrap();
        let c1 = gen.next_chunk(40_000);
        let c2 = gen.next_chunk(60_000);
        assert_eq!(c1.fm_phase.last(), c2.fm_phase.first());
        assert_eq!(c2.fm_phase.last(), a.fm_phase.last());
        assert_eq!(c1.fm_phase[..], a.fm_phase[..=40_000]);
    }

    #[test]
    fn rejects_coarse_step_and_bad_config() {
        let cfg = independent(5e4, 1e-6, 1e3);
        assert!(matches!(
            sample_phase_process(&cfg, Arm::One, 1e-3, 0.3e-6, 1),
            Err(Error::Discretization { .. })
        ));
        assert!(matches!(
            sample_phase_process(&cfg, Arm::One, 1e-9, 1e-8, 1),
            Err(Error::Config(_))
        ));
        let bad = independent(-1.0, 1e-6, 1e3);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = independent(0.0, 1e-6, 0.0);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn parametric_values() {
        assert_eq!(gamma_cap_parametric(1.18e-6, 0.0), 1.0);
        assert_relative_eq!(gamma_cap_parametric(1.18e-6, 0.59e-6), 0.5, epsilon = 1e-12);
        // formula evaluation (numpy): 1.6480788726e-8
        assert_relative_eq!(gamma_cap_parametric(1.18e-6, 3e-6), 1.6480788726e-8, max_relative = 1e-8);
        assert_relative_eq!(sigma_fm_for_fwhm(1.18e-6), 317_611.229, max_relative = 1e-8);
        assert_relative_eq!(fm_gaussian_limit_fwhm(sigma_fm_for_fwhm(2e-6)), 2e-6);
    }

    #[test]
    fn empirical_without_fm_is_unity() {
        let cfg = independent(0.0, 10e-6, 1e3);
        let p = sample_phase_process(&cfg, Arm::One, 1e-3, 1e-7, 5).unwrap();
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 5e-6).collect();
        let g = gamma_cap_empirical(&p, &grid).unwrap();
        for d in &grid {
            assert!((g.eval(*d) - 1.0).abs() < 1e-9);
        }
        assert!(g.fwhm().is_none());
    }

    #[test]
    fn empirical_requires_long_trajectory() {
        let cfg = independent(1e5, 10e-6, 1e3);
        let p = sample_phase_process(&cfg, Arm::One, 1e-4, 1e-7, 5).unwrap();
        match gamma_cap_empirical(&p, &[0.0, 2e-5]) {
            Err(Error::Estimation(msg)) => assert!(msg.contains("2e-4")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fm_noise_decays_below_half() {
        let cfg = independent(5e4, 1e-6, 1e3);
        let p = sample_phase_process(&cfg, Arm::One, 0.1, 1e-8, 21).unwrap();
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-6).collect();
        let g = gamma_cap_empirical(&p, &grid).unwrap();
        assert!(g.eval(1e-8) > 0.99);
        let fwhm = g.fwhm().expect("envelope should cross one half");
        // exact OU self-coherence, half-maximum found by bisection
        let (mut lo, mut hi) = (0.0, 100e-6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ou_self_coherence(5e4, 1e-6, mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(fwhm, 2.0 * lo, max_relative = 0.1);
    }
}
