//! Closed-form beamsplitter output intensities and two-detector coincidence
//! rates, plus visibility extraction from coincidence traces.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::noise::SelfCoherence;
use crate::spectral::CoherenceFunction;

/// Two-arm interferometer: coherence model, optical delays, and the carrier
/// plus AOM frequencies of each input.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceConfig {
    pub gamma: CoherenceFunction,
    pub gamma_cap: SelfCoherence,
    /// Time of flight of arm 1 and arm 2 to the beamsplitter outputs.
    pub t1: f64,
    pub t2: f64,
    pub carrier_frequency: f64,
    pub rf_frequency_1: f64,
    pub rf_frequency_2: f64,
    pub field_scale: f64,
}

impl InterferenceConfig {
    pub fn new(gamma: CoherenceFunction, gamma_cap: SelfCoherence) -> Self {
        InterferenceConfig {
            gamma,
            gamma_cap,
            t1: 0.0,
            t2: 0.0,
            carrier_frequency: 0.0,
            rf_frequency_1: 0.0,
            rf_frequency_2: 0.0,
            field_scale: 1.0,
        }
    }

    /// Sets `t1 = 0`, `t2 = delta_t`.
    pub fn with_delay(mut self, delta_t: f64) -> Self {
        self.t1 = 0.0;
        self.t2 = delta_t;
        self
    }

    pub fn with_frequencies(mut self, carrier: f64, rf_1: f64, rf_2: f64) -> Self {
        self.carrier_frequency = carrier;
        self.rf_frequency_1 = rf_1;
        self.rf_frequency_2 = rf_2;
        self
    }

    /// Shorthand for a beat at `delta_f` without a physical carrier.
    pub fn with_delta_f(self, delta_f: f64) -> Self {
        let carrier = self.carrier_frequency;
        self.with_frequencies(carrier, 0.0, delta_f)
    }

    pub fn with_field_scale(mut self, field_scale: f64) -> Self {
        self.field_scale = field_scale;
        self
    }

    pub fn delta_t(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn delta_omega(&self) -> f64 {
        TAU * (self.rf_frequency_2 - self.rf_frequency_1)
    }

    pub fn omega_1(&self) -> f64 {
        TAU * (self.carrier_frequency + self.rf_frequency_1)
    }

    pub fn omega_2(&self) -> f64 {
        TAU * (self.carrier_frequency + self.rf_frequency_2)
    }

    /// ω₂t₂ − ω₁t₁, written so the large carrier term multiplies Δt only.
    pub fn static_phase(&self) -> f64 {
        TAU * self.carrier_frequency * self.delta_t()
            + TAU * (self.rf_frequency_2 * self.t2 - self.rf_frequency_1 * self.t1)
    }

    pub fn intensity_scale(&self) -> f64 {
        self.field_scale * self.field_scale
    }
}

/// Output intensities (I₃, I₄) at time `t` for inter-arm phase Δφ.
///
/// I₃ = |E₀|²{1 + |γ| sin[𝒜 + arg γ* − Δω t]}, I₄ the complement, with
/// 𝒜 = ω₂t₂ − ω₁t₁ − Δφ. For a real positive γ this is the textbook form.
pub fn output_intensities(config: &InterferenceConfig, delta_phi: f64, t: f64) -> (f64, f64) {
    let gamma = config.gamma.gamma(config.delta_t());
    cross_term_intensities(config, gamma, delta_phi, t)
}

/// As [`output_intensities`] with γ(Δt) already evaluated.
pub fn cross_term_intensities(
    config: &InterferenceConfig,
    gamma: Complex64,
    delta_phi: f64,
    t: f64,
) -> (f64, f64) {
    let arg = config.delta_omega() * t - config.static_phase() + delta_phi;
    let cross = gamma.conj() * Complex64::from_polar(1.0, arg);
    let scale = config.intensity_scale();
    (scale * (1.0 - cross.im), scale * (1.0 + cross.im))
}

/// Equal-frequency singles intensities; time-independent for fixed Δφ.
pub fn singles_intensity(config: &InterferenceConfig, delta_phi: f64, t: f64) -> Result<(f64, f64)> {
    if config.delta_omega() != 0.0 {
        return Err(Error::ModelValidity(
            "singles_intensity requires equal input frequencies; use output_intensities".into(),
        ));
    }
    Ok(output_intensities(config, delta_phi, t))
}

/// Phase argument and detection times entering the instantaneous correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationKernel {
    pub a: f64,
    pub delta_phi: f64,
    pub detect_1: f64,
    pub detect_2: f64,
    pub delta_t_cap: f64,
}

impl CorrelationKernel {
    pub fn new(config: &InterferenceConfig, delta_phi: f64, detect_1: f64, detect_2: f64) -> Self {
        Self::from_phase(config.static_phase() - delta_phi, delta_phi, detect_1, detect_2)
    }

    /// Kernel with an explicit 𝒜.
    pub fn from_phase(a: f64, delta_phi: f64, detect_1: f64, detect_2: f64) -> Self {
        CorrelationKernel { a, delta_phi, detect_1, detect_2, delta_t_cap: detect_2 - detect_1 }
    }
}

/// ⟨I₃(T₁)I₄(T₂)⟩/|E₀|⁴ before phase averaging:
/// 1 + |γ| s₁ − |γ| s₂ − |γ|² s₁ s₂ with s_k = sin(𝒜 − Δω T_k).
pub fn coincidence_instantaneous(kernel: &CorrelationKernel, config: &InterferenceConfig) -> f64 {
    let g = config.gamma.magnitude(config.delta_t());
    let dw = config.delta_omega();
    let s1 = (kernel.a - dw * kernel.detect_1).sin();
    let s2 = (kernel.a - dw * kernel.detect_2).sin();
    1.0 + g * s1 - g * s2 - g * g * s1 * s2
}

/// Phase-averaged normalized coincidence
/// c = 1 − ½ |γ(Δt)|² |Γ(ΔT)| cos(Δω ΔT).
pub fn coincidence_normalized(delta_t: f64, delta_t_cap: f64, config: &InterferenceConfig) -> f64 {
    let g = config.gamma.magnitude(delta_t);
    1.0 - 0.5 * g * g * config.gamma_cap.eval(delta_t_cap) * (config.delta_omega() * delta_t_cap).cos()
}

/// Coincidence surface over (Δt, ΔT), row-major with Δt as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub delta_t: Vec<f64>,
    pub delta_t_cap: Vec<f64>,
    pub values: Vec<f64>,
}

impl Surface {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.delta_t_cap.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.delta_t_cap.len();
        &self.values[row * n..(row + 1) * n]
    }

    /// Iterates `(Δt, ΔT, c)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.delta_t_cap.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.delta_t[k / n], self.delta_t_cap[k % n], c))
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Config(format!("{name} grid is not sorted")));
    }
    Ok(())
}

pub fn surface(
    delta_t_grid: &[f64],
    delta_t_cap_grid: &[f64],
    config: &InterferenceConfig,
    execution: Execution,
) -> Result<Surface> {
    check_grid("Δt", delta_t_grid)?;
    check_grid("ΔT", delta_t_cap_grid)?;
    let rows = exec::map_range(execution, delta_t_grid.len(), |i| {
        let dt = delta_t_grid[i];
        delta_t_cap_grid
            .iter()
            .map(|&dtc| coincidence_normalized(dt, dtc, config))
            .collect::<Vec<_>>()
    });
    Ok(Surface {
        delta_t: delta_t_grid.to_vec(),
        delta_t_cap: delta_t_cap_grid.to_vec(),
        values: rows.concat(),
    })
}

/// c along Δt at fixed ΔT.
pub fn delay_trace(delta_t_grid: &[f64], delta_t_cap: f64, config: &InterferenceConfig) -> Vec<(f64, f64)> {
    delta_t_grid
        .iter()
        .map(|&dt| (dt, coincidence_normalized(dt, delta_t_cap, config)))
        .collect()
}

/// c along ΔT at fixed Δt.
pub fn detection_trace(delta_t: f64, delta_t_cap_grid: &[f64], config: &InterferenceConfig) -> Vec<(f64, f64)> {
    delta_t_cap_grid
        .iter()
        .map(|&dtc| (dtc, coincidence_normalized(delta_t, dtc, config)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BaselineStrategy {
    /// Normalized traces: the non-interfering level is exactly 1.
    #[default]
    Normalized,
    /// Mean of the outermost fraction of samples (half from each end).
    OuterFraction(f64),
}

impl BaselineStrategy {
    pub fn outer_default() -> Self {
        BaselineStrategy::OuterFraction(0.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Dip,
    Peak,
    /// No feature above the noise floor.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityResult {
    pub kind: FeatureKind,
    pub visibility: f64,
    pub baseline: f64,
    pub extremum: f64,
    pub extremum_location: f64,
    pub noise: f64,
}

pub fn extract_visibility(trace: &[(f64, f64)], strategy: BaselineStrategy) -> Result<VisibilityResult> {
    let n = trace.len();
    if n < 5 {
        return Err(Error::Estimation(format!("trace has {n} samples; at least 5 required")));
    }
    let fraction = match strategy {
        BaselineStrategy::OuterFraction(f) => f,
        BaselineStrategy::Normalized => 0.2,
    };
    let per_side = ((fraction * n as f64 / 2.0).ceil() as usize).clamp(1, n / 2);
    let outer: Vec<f64> = trace[..per_side]
        .iter()
        .chain(&trace[n - per_side..])
        .map(|p| p.1)
        .collect();
    let outer_mean = outer.iter().sum::<f64>() / outer.len() as f64;
    let noise = if outer.len() > 1 {
        (outer.iter().map(|v| (v - outer_mean).powi(2)).sum::<f64>() / (outer.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let baseline = match strategy {
        BaselineStrategy::Normalized => 1.0,
        BaselineStrategy::OuterFraction(_) => outer_mean,
    };
    if !(baseline > 0.0) {
        return Err(Error::Estimation(format!("baseline {baseline} is not positive")));
    }
    let (lo, hi) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let &(location, extremum) = trace
        .iter()
        .max_by(|a, b| (a.1 - baseline).abs().total_cmp(&(b.1 - baseline).abs()))
        .expect("non-empty trace");
    if hi - lo <= 3.0 * noise {
        return Ok(VisibilityResult {
            kind: FeatureKind::Flat,
            visibility: 0.0,
            baseline,
            extremum,
            extremum_location: location,
            noise,
        });
    }
    Ok(VisibilityResult {
        kind: if extremum < baseline { FeatureKind::Dip } else { FeatureKind::Peak },
        visibility: (baseline - extremum).abs() / baseline,
        baseline,
        extremum,
        extremum_location: location,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const TP: f64 = 10.57e-12;

    fn fig2(delta_f: f64) -> InterferenceConfig {
        InterferenceConfig::new(
            CoherenceFunction::gaussian_revival(0.67e-12, TP).unwrap(),
            SelfCoherence::parametric(1.18e-6).unwrap(),
        )
        .with_delta_f(delta_f)
    }

    fn flat_gamma(delta_f: f64) -> InterferenceConfig {
        // γ ≡ 1: a coherence table that never decays.
        let cf = CoherenceFunction::tabulated(
            vec![0.0, 1.0],
            vec![Complex64::new(1.0, 0.0); 2],
            None,
        )
        .unwrap();
        InterferenceConfig::new(cf, SelfCoherence::perfect()).with_delta_f(delta_f)
    }

    fn zero_gamma() -> InterferenceConfig {
        let cf = CoherenceFunction::tabulated(
            vec![0.0, 1e-15, 1.0],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            None,
        )
        .unwrap();
        InterferenceConfig::new(cf, SelfCoherence::perfect()).with_delay(1e-12)
    }

    #[test]
    fn singles_extremes() {
        // ω₀Δt − Δφ = π/2 with Δt = 0 → Δφ = −π/2
        let cfg = flat_gamma(0.0).with_field_scale(2.0);
        let (i3, i4) = singles_intensity(&cfg, -std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert_relative_eq!(i3, 8.0, epsilon = 1e-12);
        assert_relative_eq!(i4, 0.0, epsilon = 1e-12);

        let (i3, i4) = singles_intensity(&zero_gamma(), 1.234, 0.0).unwrap();
        assert_eq!((i3, i4), (1.0, 1.0));

        assert!(matches!(singles_intensity(&flat_gamma(3e6), 0.0, 0.0), Err(Error::ModelValidity(_))));
    }

    #[test]
    fn singles_wash_out_under_random_phase() {
        let cfg = flat_gamma(0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let (mut s3, mut s4) = (0.0, 0.0);
        for _ in 0..n {
            let (i3, i4) = singles_intensity(&cfg, rng.random::<f64>() * TAU, 0.0).unwrap();
            assert_relative_eq!(i3 + i4, 2.0, epsilon = 1e-12);
            s3 += i3;
            s4 += i4;
        }
        // std of the mean = sqrt(1/2)/sqrt(n)
        let tol = 3.0 * (0.5f64).sqrt() / (n as f64).sqrt();
        assert!((s3 / n as f64 - 1.0).abs() < tol);
        assert!((s4 / n as f64 - 1.0).abs() < tol);
    }

    #[test]
    fn instantaneous_values() {
        let k = CorrelationKernel::from_phase(0.3, 0.0, 1e-6, 2e-6);
        assert_eq!(coincidence_instantaneous(&k, &zero_gamma()), 1.0);
        assert_eq!(k.delta_t_cap, 2e-6 - 1e-6);

        let k = CorrelationKernel::from_phase(std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0);
        assert_relative_eq!(coincidence_instantaneous(&k, &flat_gamma(0.0)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn instantaneous_phase_average_converges() {
        let cfg = flat_gamma(0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let k = CorrelationKernel::new(&cfg, rng.random::<f64>() * TAU, 0.0, 0.0);
                coincidence_instantaneous(&k, &cfg)
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn normalized_values() {
        let cfg = fig2(0.0);
        assert_relative_eq!(coincidence_normalized(0.0, 0.0, &cfg), 0.5, epsilon = 1e-15);
        assert_relative_eq!(coincidence_normalized(TP / 2.0, 0.3e-6, &cfg), 1.0, epsilon = 1e-12);

        let beat = flat_gamma(3e6);
        // formula evaluation (numpy): 0.51570842, 1.49605735
        assert_relative_eq!(coincidence_normalized(0.0, 0.32e-6, &beat), 0.5157084194, epsilon = 1e-9);
        assert_relative_eq!(coincidence_normalized(0.0, 0.16e-6, &beat), 1.4960573507, epsilon = 1e-9);
    }

    #[test]
    fn surface_layout_and_minima() {
        let cfg = fig2(0.0);
        let dts: Vec<f64> = (-2..=2).map(|n| n as f64 * TP).collect();
        let dtcs = vec![-1e-6, 0.0, 1e-6];
        let s = surface(&dts, &dtcs, &cfg, Execution::Parallel).unwrap();
        assert_eq!(s.values.len(), 15);
        for r in 0..5 {
            assert!((s.get(r, 1) - 0.5).abs() < 1e-9);
            assert!(s.get(r, 0) > 0.5);
        }
        let cells: Vec<_> = s.cells().collect();
        assert_eq!(cells[4], (dts[1], 0.0, s.get(1, 1)));
        assert_eq!(s, surface(&dts, &dtcs, &cfg, Execution::Sequential).unwrap());
        assert!(matches!(surface(&[], &dtcs, &cfg, Execution::Sequential), Err(Error::Config(_))));
        assert!(matches!(surface(&[1.0, 0.0], &dtcs, &cfg, Execution::Sequential), Err(Error::Config(_))));
    }

    #[test]
    fn surface_beat_period() {
        // |Γ| ≡ 1 so the envelope does not pull the minima
        let cfg = flat_gamma(3e6);
        let dtcs: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-9).collect();
        let trace = detection_trace(0.0, &dtcs, &cfg);
        // local minima along ΔT fall at multiples of 1/Δf = 333.3 ns
        let minima: Vec<f64> = trace
            .windows(3)
            .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
            .map(|w| w[1].0)
            .collect();
        assert_eq!(minima.len(), 2);
        assert!((minima[0] - 333.3e-9).abs() < 1e-9);
        assert!((minima[1] - 666.7e-9).abs() < 1e-9);
    }

    #[test]
    fn zero_coherence_surface_is_flat() {
        let s = surface(&[1e-12, 2e-12], &[0.0, 1e-6], &zero_gamma(), Execution::Sequential).unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn visibility_dip_peak_flat() {
        let cfg = fig2(0.0);
        let grid: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.1e-12).collect();
        let v = extract_visibility(&delay_trace(&grid, 0.0, &cfg), BaselineStrategy::Normalized).unwrap();
        assert_eq!(v.kind, FeatureKind::Dip);
        assert_relative_eq!(v.visibility, 0.5, epsilon = 1e-12);
        assert_eq!(v.extremum_location, 0.0);

        let beat = fig2(3e6);
        let v = extract_visibility(&delay_trace(&grid, 0.16e-6, &beat), BaselineStrategy::outer_default())
            .unwrap();
        assert_eq!(v.kind, FeatureKind::Peak);

        let flat: Vec<(f64, f64)> = grid.iter().map(|&x| (x, 1.0)).collect();
        let v = extract_visibility(&flat, BaselineStrategy::Normalized).unwrap();
        assert_eq!(v.kind, FeatureKind::Flat);
        assert_eq!(v.visibility, 0.0);

        assert!(extract_visibility(&flat[..4], BaselineStrategy::Normalized).is_err());
    }

    proptest! {
        #[test]
        fn coincidence_bounds_and_symmetry(
            dt in -40e-12f64..40e-12,
            dtc in -3e-6f64..3e-6,
            df in -10e6f64..10e6,
            fwhm_us in 0.1f64..5.0,
        ) {
            let cfg = InterferenceConfig::new(
                CoherenceFunction::gaussian_revival(0.67e-12, TP).unwrap(),
                SelfCoherence::parametric(fwhm_us * 1e-6).unwrap(),
            ).with_delta_f(df);
            let c = coincidence_normalized(dt, dtc, &cfg);
            prop_assert!((0.5..=1.5).contains(&c));
            prop_assert!((c - coincidence_normalized(dt, -dtc, &cfg)).abs() < 1e-15);
            prop_assert!((c - coincidence_normalized(dt + TP, dtc, &cfg)).abs() < 1e-9);
        }

        #[test]
        fn beat_minimum_at_zero(df in 0.5e6f64..10e6, dtc in -3e-6f64..3e-6) {
            let cfg = flat_gamma(df);
            prop_assert!(coincidence_normalized(0.0, 0.0, &cfg) <= coincidence_normalized(0.0, dtc, &cfg) + 1e-15);
        }
    }
}
