//! Multi-mode laser spectrum and the complex degree of first-order coherence.
//!
//! All quantities live in the rotating frame of the carrier: a comb line at
//! optical frequency `ν_c + m·s` contributes `exp(i 2π m s Δt)` to γ(Δt).

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Spectral envelope used to weight the comb lines (power weights |a_m|²).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EnvelopeShape {
    #[default]
    Gaussian,
    Lorentzian,
    /// Explicit per-mode power weights, lowest frequency first.
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeComb {
    pub carrier_frequency: f64,
    pub mode_spacing: f64,
    pub envelope_fwhm: f64,
    /// |a_m| for m = -(N-1)/2 ..= (N-1)/2, normalized to unit power.
    pub amplitudes: Vec<f64>,
    pub field_scale: f64,
}

/// Converts a wavelength FWHM into a frequency FWHM at `wavelength`
/// (narrowband approximation Δν = c·Δλ/λ²).
pub fn wavelength_to_frequency_fwhm(wavelength: f64, wavelength_fwhm: f64) -> f64 {
    SPEED_OF_LIGHT * wavelength_fwhm / (wavelength * wavelength)
}

pub fn build_comb(
    carrier_wavelength: f64,
    wavelength_fwhm: f64,
    mode_spacing: f64,
    mode_count: usize,
    envelope_shape: &EnvelopeShape,
) -> Result<ModeComb> {
    for (name, v) in [
        ("carrier wavelength", carrier_wavelength),
        ("wavelength FWHM", wavelength_fwhm),
        ("mode spacing", mode_spacing),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    if mode_count == 0 || mode_count.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "mode count must be odd and positive (center mode required), got {mode_count}"
        )));
    }
    let envelope_fwhm = wavelength_to_frequency_fwhm(carrier_wavelength, wavelength_fwhm);
    let half = (mode_count / 2) as i64;
    let powers: Vec<f64> = match envelope_shape {
        EnvelopeShape::Gaussian => (-half..=half)
            .map(|m| {
                let dv = m as f64 * mode_spacing;
                (-4.0 * LN_2 * dv * dv / (envelope_fwhm * envelope_fwhm)).exp()
            })
            .collect(),
        EnvelopeShape::Lorentzian => (-half..=half)
            .map(|m| {
                let x = 2.0 * m as f64 * mode_spacing / envelope_fwhm;
                1.0 / (1.0 + x * x)
            })
            .collect(),
        EnvelopeShape::Tabulated(w) => {
            if w.len() != mode_count {
                return Err(Error::Config(format!(
                    "tabulated envelope has {} weights for {mode_count} modes",
                    w.len()
                )));
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Config("tabulated weights must be nonnegative".into()));
            }
            w.clone()
        }
    };
    let total: f64 = powers.iter().sum();
    if total <= 0.0 {
        return Err(Error::Config("comb has zero total power".into()));
    }
    Ok(ModeComb {
        carrier_frequency: SPEED_OF_LIGHT / carrier_wavelength,
        mode_spacing,
        envelope_fwhm,
        amplitudes: powers.iter().map(|p| (p / total).sqrt()).collect(),
        field_scale: 1.0,
    })
}

impl ModeComb {
    pub fn mode_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn revival_period(&self) -> f64 {
        1.0 / self.mode_spacing
    }

    /// Offset of mode `index` from the carrier, in Hz.
    pub fn mode_offset(&self, index: usize) -> f64 {
        (index as f64 - (self.mode_count() / 2) as f64) * self.mode_spacing
    }

    pub fn with_field_scale(mut self, field_scale: f64) -> Self {
        self.field_scale = field_scale;
        self
    }
}

/// γ(Δt) = Σ |a_m|² exp(i 2π (ν_m − ν_c) Δt).
pub fn gamma_from_comb(comb: &ModeComb, delta_t: f64) -> Complex64 {
    comb.amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| Complex64::from_polar(a * a, 2.0 * PI * comb.mode_offset(i) * delta_t))
        .sum()
}

/// Periodic train of Gaussian lobes, the nearest lobe dominating.
pub fn gaussian_revival_gamma(local_fwhm: f64, revival_period: f64, delta_t: f64) -> Result<f64> {
    if !(local_fwhm > 0.0 && revival_period > 0.0) {
        return Err(Error::Config("lobe FWHM and revival period must be positive".into()));
    }
    if local_fwhm >= revival_period / 4.0 {
        return Err(Error::ModelValidity(format!(
            "lobe FWHM {local_fwhm:e} s must be below a quarter of the revival period {revival_period:e} s"
        )));
    }
    Ok(gaussian_lobe(local_fwhm, revival_period, delta_t))
}

fn gaussian_lobe(fwhm: f64, period: f64, delta_t: f64) -> f64 {
    let offset = delta_t - (delta_t / period).round() * period;
    (-4.0 * LN_2 * offset * offset / (fwhm * fwhm)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoherenceFunction {
    CombDerived(ModeComb),
    GaussianRevival { local_fwhm: f64, revival_period: f64 },
    /// Samples of γ at nonnegative delays starting at 0; negative delays use
    /// Hermitian symmetry and, when a period is set, delays wrap.
    Tabulated {
        delays: Vec<f64>,
        values: Vec<Complex64>,
        revival_period: Option<f64>,
    },
}

impl CoherenceFunction {
    pub fn gaussian_revival(local_fwhm: f64, revival_period: f64) -> Result<Self> {
        gaussian_revival_gamma(local_fwhm, revival_period, 0.0)?;
        Ok(CoherenceFunction::GaussianRevival { local_fwhm, revival_period })
    }

    pub fn tabulated(
        delays: Vec<f64>,
        values: Vec<Complex64>,
        revival_period: Option<f64>,
    ) -> Result<Self> {
        if delays.len() != values.len() || delays.len() < 2 {
            return Err(Error::Config("tabulated coherence needs ≥ 2 matched samples".into()));
        }
        if delays[0] != 0.0 || delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "tabulated delays must start at 0 and increase strictly".into(),
            ));
        }
        let v0 = values[0];
        Ok(CoherenceFunction::Tabulated {
            delays,
            values: values.into_iter().map(|v| v / v0.norm()).collect(),
            revival_period,
        })
    }

    /// Complex γ(Δt).
    pub fn gamma(&self, delta_t: f64) -> Complex64 {
        match self {
            CoherenceFunction::CombDerived(comb) => gamma_from_comb(comb, delta_t),
            CoherenceFunction::GaussianRevival { local_fwhm, revival_period } => {
                Complex64::new(gaussian_lobe(*local_fwhm, *revival_period, delta_t), 0.0)
            }
            CoherenceFunction::Tabulated { delays, values, revival_period } => {
                let mut d = delta_t;
                if let Some(p) = revival_period {
                    d -= (d / p).round() * p;
                }
                let v = interpolate(delays, values, d.abs());
                if d < 0.0 {
                    v.conj()
                } else {
                    v
                }
            }
        }
    }

    pub fn magnitude(&self, delta_t: f64) -> f64 {
        self.gamma(delta_t).norm().min(1.0)
    }

    pub fn revival_period(&self) -> Option<f64> {
        match self {
            CoherenceFunction::CombDerived(c) => Some(c.revival_period()),
            CoherenceFunction::GaussianRevival { revival_period, .. } => Some(*revival_period),
            CoherenceFunction::Tabulated { revival_period, .. } => *revival_period,
        }
    }
}

fn interpolate(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

/// Coherence time t_c, taken as the FWHM of the central lobe of |γ(Δt)|².
///
/// Returns `f64::INFINITY` when |γ|² never drops to one half (for instance a
/// single-mode comb).
pub fn coherence_time(cf: &CoherenceFunction) -> Result<f64> {
    match cf {
        CoherenceFunction::GaussianRevival { local_fwhm, .. } => Ok(local_fwhm / 2f64.sqrt()),
        CoherenceFunction::CombDerived(comb) => {
            if comb.mode_count() == 1 {
                return Ok(f64::INFINITY);
            }
            let half_period = comb.revival_period() / 2.0;
            Ok(half_max_crossing(|t| cf.magnitude(t).powi(2), half_period, 4096)
                .map_or(f64::INFINITY, |x| 2.0 * x))
        }
        CoherenceFunction::Tabulated { delays, .. } => {
            let end = *delays.last().unwrap_or(&0.0);
            let end = cf.revival_period().map_or(end, |p| end.min(p / 2.0));
            half_max_crossing(|t| cf.magnitude(t).powi(2), end, 4 * delays.len())
                .map(|x| 2.0 * x)
                .ok_or_else(|| {
                    Error::Estimation("tabulated coherence has no resolvable central lobe".into())
                })
        }
    }
}

/// First delay in `(0, end]` at which `f` falls to 0.5, refined by bisection.
fn half_max_crossing(f: impl Fn(f64) -> f64, end: f64, scan_points: usize) -> Option<f64> {
    let step = end / scan_points as f64;
    let mut lo = 0.0;
    for k in 1..=scan_points {
        let hi = k as f64 * step;
        if f(hi) <= 0.5 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(m) > 0.5 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}
