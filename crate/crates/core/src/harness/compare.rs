use crate::analytic::{coincidence_normalized, InterferenceConfig};
use crate::error::{Error, Result};
use crate::montecarlo::CoincidenceHistogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub x: f64,
    pub reference: f64,
    pub observed: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub fraction_within_3sigma: f64,
    pub max_abs_residual: f64,
    pub max_abs_z: f64,
}

impl CompareReport {
    pub fn summary(&self) -> String {
        format!(
            "{} bins, {:.1}% within 3σ, max |residual| {:.4}, max |z| {:.2}",
            self.rows.len(),
            100.0 * self.fraction_within_3sigma,
            self.max_abs_residual,
            self.max_abs_z
        )
    }
}

/// Per-point z-scores of `observed` against `reference` on a shared grid.
pub fn compare(
    x_ref: &[f64],
    reference: &[f64],
    x_obs: &[f64],
    observed: &[f64],
    sigma: &[f64],
) -> Result<CompareReport> {
    if x_ref.len() != reference.len() || x_obs.len() != observed.len() || observed.len() != sigma.len() {
        return Err(Error::GridMismatch("column lengths differ".into()));
    }
    if x_ref.len() != x_obs.len() || x_ref.is_empty() {
        return Err(Error::GridMismatch(format!("{} reference points vs {} observed", x_ref.len(), x_obs.len())));
    }
    let spacing = x_ref.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min);
    let scale = x_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = if spacing.is_finite() && spacing > 0.0 { 1e-6 * spacing } else { 1e-12 * scale.max(1e-300) };
    if let Some(k) = (0..x_ref.len()).find(|&k| (x_ref[k] - x_obs[k]).abs() > tol) {
        return Err(Error::GridMismatch(format!(
            "point {k}: reference at {:e}, observed at {:e}",
            x_ref[k], x_obs[k]
        )));
    }
    let rows: Vec<CompareRow> = (0..x_ref.len())
        .map(|k| {
            let d = observed[k] - reference[k];
            let z = if d == 0.0 { 0.0 } else { d / sigma[k] };
            CompareRow { x: x_ref[k], reference: reference[k], observed: observed[k], sigma: sigma[k], z }
        })
        .collect();
    let within = rows.iter().filter(|r| r.z.abs() <= 3.0).count();
    Ok(CompareReport {
        fraction_within_3sigma: within as f64 / rows.len() as f64,
        max_abs_residual: rows.iter().map(|r| (r.observed - r.reference).abs()).fold(0.0, f64::max),
        max_abs_z: rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max),
        rows,
    })
}

/// Poisson σ implied by the reference itself: sqrt(c·b)/b for baseline b.
pub fn reference_sigma(reference: &[f64], baseline: f64) -> Vec<f64> {
    reference.iter().map(|c| (c.max(0.0) * baseline).sqrt() / baseline).collect()
}

/// Analytic coincidence averaged over each histogram bin.
pub fn histogram_reference(h: &CoincidenceHistogram, config: &InterferenceConfig) -> Vec<f64> {
    const SUB: usize = 8;
    (0..h.bin_count())
        .map(|b| {
            let (lo, _) = h.bin_edges(b);
            (0..SUB)
                .map(|k| {
                    let x = lo + (k as f64 + 0.5) / SUB as f64 * h.bin_width;
                    coincidence_normalized(config.delta_t(), x, config)
                })
                .sum::<f64>()
                / SUB as f64
        })
        .collect()
}

/// Normalized histogram against its analytic prediction, with σ from the
/// expected counts so empty bins are scored correctly.
pub fn compare_histogram(h: &CoincidenceHistogram, config: &InterferenceConfig) -> Result<CompareReport> {
    let baseline = h
        .baseline()
        .ok_or_else(|| Error::Normalization("comparison needs a normalized histogram".into()))?;
    let reference = histogram_reference(h, config);
    let sigma = reference_sigma(&reference, baseline);
    let x = h.bin_centers();
    compare(&x, &reference, &x, &h.normalized_values(), &sigma)
}
