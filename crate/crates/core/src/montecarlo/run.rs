use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::analytic::{cross_term_intensities, InterferenceConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::noise::{AomConfig, Arm, PhaseGenerator, PhaseMode, SelfCoherence};
use crate::seed::{self, stream};
use crate::spectral::CoherenceFunction;

use super::correlate::{correlate, normalize, CoincidenceHistogram};
use super::detect::{Detector, DetectorId, TimestampStream};
use super::plan::SimulationPlan;

/// Envelope steps handled per streamed chunk.
const CHUNK_STEPS: u64 = 100_000;

/// Source and interferometer settings shared by every variant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub coherence: CoherenceFunction,
    pub carrier_frequency: f64,
    pub rf_base: f64,
    pub phase_mode: PhaseMode,
    pub fm_correlation_time: f64,
    pub phase_scramble_rate: f64,
    pub field_scale: f64,
}

impl Physics {
    pub fn new(coherence: CoherenceFunction, carrier_frequency: f64) -> Self {
        let aom = AomConfig::default();
        Physics {
            coherence,
            carrier_frequency,
            rf_base: aom.rf_frequency_1,
            phase_mode: aom.phase_mode,
            fm_correlation_time: aom.fm_correlation_time,
            phase_scramble_rate: aom.phase_scramble_rate,
            field_scale: 1.0,
        }
    }

    pub fn aom(&self, variant: Variant) -> AomConfig {
        AomConfig {
            rf_frequency_1: self.rf_base,
            rf_frequency_2: self.rf_base + variant.delta_f,
            phase_mode: self.phase_mode,
            sigma_fm: variant.sigma_fm,
            fm_correlation_time: self.fm_correlation_time,
            phase_scramble_rate: self.phase_scramble_rate,
        }
    }

    /// Analytic counterpart of a variant at optical delay `delta_t`.
    pub fn interference(&self, variant: Variant, delta_t: f64) -> InterferenceConfig {
        let aom = self.aom(variant);
        InterferenceConfig::new(self.coherence.clone(), SelfCoherence::from_fm_noise(variant.sigma_fm))
            .with_frequencies(self.carrier_frequency, aom.rf_frequency_1, aom.rf_frequency_2)
            .with_delay(delta_t)
            .with_field_scale(self.field_scale)
    }
}

/// AOM detuning and FM noise level of one simulated configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub delta_f: f64,
    pub sigma_fm: f64,
}

impl Variant {
    pub fn new(delta_f: f64, sigma_fm: f64) -> Self {
        Variant { delta_f, sigma_fm }
    }
}

/// One trial: phases and detections are streamed chunk by chunk so the
/// envelope trace is never materialized.
pub fn simulate_trial(
    physics: &Physics,
    variant: Variant,
    delta_t: f64,
    plan: &SimulationPlan,
    trial: u32,
    trial_seed: u64,
) -> Result<(TimestampStream, TimestampStream)> {
    let aom = physics.aom(variant);
    aom.validate()?;
    plan.validate(variant.delta_f, false)?;
    let config = physics.interference(variant, delta_t);
    let gamma: Complex64 = config.gamma.gamma(delta_t);
    let scale = config.intensity_scale();
    let bound = scale * (1.0 + gamma.norm());
    let edt = plan.envelope_dt;
    let pdt = plan.phase_dt;

    let mut gen_1 = PhaseGenerator::new(&aom, Arm::One, pdt, trial_seed)?;
    let mut gen_2 = PhaseGenerator::new(&aom, Arm::Two, pdt, trial_seed)?;
    let det_seed = |k| seed::derive(trial_seed, &[stream::DETECTOR, k]);
    let mut det_3 = Detector::new(plan.mean_click_rate, edt, scale, bound, det_seed(1))?;
    let mut det_4 = Detector::new(plan.mean_click_rate, edt, scale, bound, det_seed(2))?;

    let total = plan.envelope_steps();
    let phase_steps = ((CHUNK_STEPS as f64 * edt / pdt).ceil() as usize).max(1);
    let (mut t3, mut t4) = (Vec::new(), Vec::new());
    let mut done = 0;
    while done < total {
        let p1 = gen_1.next_span(phase_steps);
        let p2 = gen_2.next_span(phase_steps);
        let end = ((p1.end() / edt).floor() as u64).clamp(done + 1, total);
        let intensity = |k: u64| {
            let t = k as f64 * edt;
            cross_term_intensities(&config, gamma, p2.phase_at(t) - p1.phase_at(t), t)
        };
        det_3.run_until(end, |k| intensity(k).0, &mut t3);
        det_4.run_until(end, |k| intensity(k).1, &mut t4);
        done = end;
    }
    Ok((
        TimestampStream { detector: DetectorId::D1, times: t3, trial, seed: det_seed(1) },
        TimestampStream { detector: DetectorId::D2, times: t4, trial, seed: det_seed(2) },
    ))
}

/// Trial-summed coincidence histogram of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRun {
    pub variant: Variant,
    pub delta_t: f64,
    pub raw: CoincidenceHistogram,
    pub normalized: CoincidenceHistogram,
    pub singles: (u64, u64),
    /// Total simulated time over all trials.
    pub exposure: f64,
}

fn trial_counts(
    physics: &Physics,
    variant: Variant,
    delta_t: f64,
    plan: &SimulationPlan,
    seeds: impl Fn(usize) -> u64 + Sync,
    execution: exec::Execution,
) -> Result<(CoincidenceHistogram, (u64, u64))> {
    let trials = exec::map_range(execution, plan.trials, |t| -> Result<_> {
        let (s1, s2) = simulate_trial(physics, variant, delta_t, plan, t as u32, seeds(t))?;
        Ok((correlate(&s1, &s2, plan.bin_width, plan.range), (s1.len() as u64, s2.len() as u64)))
    });
    let mut hist = CoincidenceHistogram::empty(plan.bin_width, plan.range);
    let mut singles = (0, 0);
    for r in trials {
        let (h, (n1, n2)) = r?;
        hist.merge(&h)?;
        singles.0 += n1;
        singles.1 += n2;
    }
    Ok((hist, singles))
}

fn normalize_counts(hist: &CoincidenceHistogram, singles: (u64, u64), exposure: f64) -> Result<CoincidenceHistogram> {
    normalize(hist, exposure, (singles.0 as f64 / exposure, singles.1 as f64 / exposure))
}

/// Runs `plan.trials` trials of one variant (trials in parallel under
/// `plan.execution`) and normalizes by the measured singles rates.
pub fn histogram_run(
    physics: &Physics,
    variant: Variant,
    variant_index: u64,
    delta_t: f64,
    plan: &SimulationPlan,
) -> Result<HistogramRun> {
    plan.validate(variant.delta_f, true)?;
    let seeds = |t: usize| {
        seed::derive(plan.master_seed, &[stream::VARIANT, variant_index, stream::TRIAL, t as u64])
    };
    let (raw, singles) = trial_counts(physics, variant, delta_t, plan, seeds, plan.execution)?;
    let exposure = plan.duration * plan.trials as f64;
    let normalized = normalize_counts(&raw, singles, exposure)?;
    Ok(HistogramRun { variant, delta_t, raw, normalized, singles, exposure })
}

/// Gated coincidence at one (Δt, ΔT) point of a delay scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub delta_t: f64,
    pub delta_t_cap: f64,
    pub counts_raw: u64,
    pub value: f64,
    pub sigma: f64,
}

/// Sums bins whose centers lie within `gate` of `target`, normalized by the
/// matching number of accidental bins. σ counts an empty gate as one click.
fn gated(h: &CoincidenceHistogram, target: f64, gate: f64) -> Result<(u64, f64, f64)> {
    let baseline = h
        .baseline()
        .ok_or_else(|| Error::Normalization("gating needs a normalized histogram".into()))?;
    let bins: Vec<usize> = h
        .bin_centers()
        .iter()
        .enumerate()
        .filter(|(_, &c)| (c - target).abs() <= gate)
        .map(|(i, _)| i)
        .collect();
    if bins.is_empty() {
        return Err(Error::Plan(format!("no histogram bin within {gate:e} s of ΔT = {target:e} s")));
    }
    let counts: u64 = bins.iter().map(|&i| h.counts[i]).sum();
    let acc = baseline * bins.len() as f64;
    Ok((counts, counts as f64 / acc, (counts.max(1) as f64).sqrt() / acc))
}

/// Coincidence versus optical delay at fixed detection delays. Points run in
/// parallel, trials of a point sequentially.
pub fn delay_scan(
    physics: &Physics,
    variant: Variant,
    variant_index: u64,
    delta_t_grid: &[f64],
    delta_t_cap_targets: &[f64],
    gate: f64,
    plan: &SimulationPlan,
) -> Result<Vec<ScanPoint>> {
    plan.validate(variant.delta_f, true)?;
    if let Some(t) = delta_t_cap_targets.iter().find(|t| t.abs() + gate > plan.range) {
        return Err(Error::Plan(format!("ΔT = {t:e} s ± gate exceeds histogram range {:e} s", plan.range)));
    }
    let points = exec::map_range(plan.execution, delta_t_grid.len(), |i| -> Result<Vec<ScanPoint>> {
        let delta_t = delta_t_grid[i];
        let seeds = |t: usize| {
            seed::derive(
                plan.master_seed,
                &[stream::VARIANT, variant_index, stream::SCAN_POINT, i as u64, stream::TRIAL, t as u64],
            )
        };
        let (raw, singles) =
            trial_counts(physics, variant, delta_t, plan, seeds, exec::Execution::Sequential)?;
        let h = normalize_counts(&raw, singles, plan.duration * plan.trials as f64)?;
        delta_t_cap_targets
            .iter()
            .map(|&target| {
                let (counts_raw, value, sigma) = gated(&h, target, gate)?;
                Ok(ScanPoint { delta_t, delta_t_cap: target, counts_raw, value, sigma })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(delta_t_grid.len() * delta_t_cap_targets.len());
    for p in points {
        out.extend(p?);
    }
    Ok(out)
}

/// First-order fringe visibility at one optical delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub delta_t: f64,
    pub visibility: f64,
    pub sigma: f64,
    pub mean_counts: f64,
}

/// Singles fringe visibility versus Δt with phase-locked arms. At each Δt
/// the delay is dithered over one optical period in `dithers` steps and
/// the first Fourier component of the D1 counts gives the visibility.
pub fn fringe_scan(
    physics: &Physics,
    sigma_fm: f64,
    delta_t_grid: &[f64],
    dithers: usize,
    plan: &SimulationPlan,
) -> Result<Vec<FringePoint>> {
    if physics.phase_mode != PhaseMode::Synchronized {
        return Err(Error::Config("fringe scans need synchronized AOM phases".into()));
    }
    if dithers < 3 {
        return Err(Error::Config(format!("fringe scans need at least 3 dither steps, got {dithers}")));
    }
    if !(physics.carrier_frequency > 0.0) {
        return Err(Error::Config("fringe scans need a positive carrier frequency".into()));
    }
    let variant = Variant::new(0.0, sigma_fm);
    plan.validate(0.0, false)?;
    let optical_period = 1.0 / physics.carrier_frequency;
    let points = exec::map_range(plan.execution, delta_t_grid.len(), |i| -> Result<FringePoint> {
        let delta_t = delta_t_grid[i];
        let mut counts = Vec::with_capacity(dithers);
        for k in 0..dithers {
            let mut n = 0u64;
            for t in 0..plan.trials {
                let s = seed::derive(
                    plan.master_seed,
                    &[stream::SCAN_POINT, i as u64, stream::TRIAL, t as u64, k as u64],
                );
                let shift = k as f64 / dithers as f64 * optical_period;
                let (d1, _) = simulate_trial(physics, variant, delta_t + shift, plan, t as u32, s)?;
                n += d1.len() as u64;
            }
            counts.push(n as f64);
        }
        let total: f64 = counts.iter().sum();
        let phase = |k: usize| TAU * k as f64 / dithers as f64;
        let first: Complex64 =
            counts.iter().enumerate().map(|(k, &n)| n * Complex64::from_polar(1.0, -phase(k))).sum();
        if total == 0.0 {
            return Ok(FringePoint { delta_t, visibility: 0.0, sigma: f64::INFINITY, mean_counts: 0.0 });
        }
        let psi = first.arg();
        let var: f64 = counts.iter().enumerate().map(|(k, &n)| n * (phase(k) + psi).cos().powi(2)).sum();
        Ok(FringePoint {
            delta_t,
            visibility: 2.0 * first.norm() / total,
            sigma: 2.0 * var.sqrt() / total,
            mean_counts: total / dithers as f64,
        })
    });
    points.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::coincidence_normalized;
    use crate::exec::Execution;

    fn flat_physics() -> Physics {
        let cf = CoherenceFunction::gaussian_revival(0.67e-12, 10.57e-12).unwrap();
        Physics::new(cf, 0.0)
    }

    fn short_plan(execution: Execution) -> SimulationPlan {
        SimulationPlan {
            duration: 0.05,
            mean_click_rate: 2e5,
            trials: 2,
            master_seed: 11,
            execution,
            ..SimulationPlan::default()
        }
    }

    #[test]
    fn histogram_is_reproducible_across_strategies() {
        let p = flat_physics();
        let v = Variant::new(3e6, 0.0);
        let a = histogram_run(&p, v, 0, 0.0, &short_plan(Execution::Parallel)).unwrap();
        let b = histogram_run(&p, v, 0, 0.0, &short_plan(Execution::Sequential)).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.singles, b.singles);
    }

    #[test]
    fn singles_rate_matches_plan() {
        let p = flat_physics();
        let plan = short_plan(Execution::Parallel);
        // off the dip, so the slowly scrambled fringe does not modulate the singles
        let r = histogram_run(&p, Variant::new(0.0, 0.0), 0, 5e-12, &plan).unwrap();
        let expected = plan.mean_click_rate * r.exposure;
        for n in [r.singles.0, r.singles.1] {
            assert!((n as f64 - expected).abs() < 5.0 * expected.sqrt(), "{n} vs {expected}");
        }
    }

    #[test]
    fn histogram_follows_beat() {
        let p = flat_physics();
        let v = Variant::new(3e6, 0.0);
        let plan = SimulationPlan { duration: 0.5, ..short_plan(Execution::Parallel) };
        let r = histogram_run(&p, v, 0, 0.0, &plan).unwrap();
        let cfg = p.interference(v, 0.0);
        let values = r.normalized.normalized_values();
        let sigma = r.normalized.poisson_sigma();
        let mut chi2 = 0.0;
        for ((x, y), s) in r.normalized.bin_centers().iter().zip(&values).zip(&sigma) {
            let c = coincidence_normalized(0.0, *x, &cfg);
            chi2 += ((y - c) / s).powi(2);
        }
        let dof = values.len() as f64;
        assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 {chi2} for {dof} bins");
    }

    #[test]
    fn delay_scan_sees_the_dip() {
        let p = flat_physics();
        let plan = SimulationPlan { duration: 0.2, range: 0.1e-6, ..short_plan(Execution::Parallel) };
        let pts =
            delay_scan(&p, Variant::new(0.0, 0.0), 0, &[0.0, 5.0e-12], &[0.0], 20e-9, &plan).unwrap();
        assert!((pts[0].value - 0.5).abs() < 4.0 * pts[0].sigma, "{:?}", pts[0]);
        assert!((pts[1].value - 1.0).abs() < 4.0 * pts[1].sigma, "{:?}", pts[1]);
    }

    #[test]
    fn fringe_needs_synchronized_arms() {
        let p = flat_physics();
        let plan = short_plan(Execution::Sequential);
        assert!(matches!(fringe_scan(&p, 0.0, &[0.0], 8, &plan), Err(Error::Config(_))));
    }

    #[test]
    fn fringe_visibility_tracks_gamma() {
        let mut p = flat_physics();
        p.phase_mode = PhaseMode::Synchronized;
        p.carrier_frequency = 354.8e12;
        let plan = SimulationPlan { duration: 0.01, mean_click_rate: 1e6, trials: 1, ..short_plan(Execution::Parallel) };
        let pts = fringe_scan(&p, 0.0, &[0.0, 0.3e-12, 3e-12], 8, &plan).unwrap();
        for pt in pts {
            let g = p.coherence.magnitude(pt.delta_t);
            assert!((pt.visibility - g).abs() < 5.0 * pt.sigma + 0.01, "{pt:?} vs {g}");
        }
    }
}
