//! Least-squares fits of coincidence histograms and delay scans.

use std::f64::consts::{LN_2, TAU};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error: error.abs() }
    }

    /// Whether two estimates agree within `k` joint standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.error.hypot(other.error)
    }
}

/// One interference lobe of a delay scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeFit {
    pub center: Estimate,
    pub height: Estimate,
    pub fwhm: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitResult {
    pub beat_frequency: Option<Estimate>,
    /// Modulation amplitude A of c = 1 − ½A·env·cos; visibility is A/2.
    pub amplitude: Option<Estimate>,
    pub envelope_fwhm: Option<Estimate>,
    pub lobes: Vec<LobeFit>,
    pub revival_period: Option<Estimate>,
    /// RMS of data − model, in normalized-coincidence units.
    pub residual_rms: f64,
    pub reduced_chi2: Option<f64>,
}

impl FitResult {
    pub fn visibility(&self) -> Option<Estimate> {
        self.amplitude.map(|a| Estimate::new(0.5 * a.value, 0.5 * a.error))
    }

    /// Fitted c(ΔT) of a beating or envelope fit; `None` for lobe fits.
    pub fn predict(&self, x: f64) -> Option<f64> {
        let a = self.amplitude?.value;
        let env = self.envelope_fwhm.map_or(1.0, |w| (-4.0 * LN_2 * (x / w.value).powi(2)).exp());
        let beat = self.beat_frequency.map_or(1.0, |f| (TAU * f.value * x).cos());
        Some(1.0 - 0.5 * a * env * beat)
    }
}

/// Generic weighted curve fit with a central-difference Jacobian.
struct Curve<'a, M> {
    x: &'a [f64],
    y: &'a [f64],
    w: &'a [f64],
    model: M,
    p: DVector<f64>,
}

impl<M: Fn(f64, &[f64]) -> f64> Curve<'_, M> {
    fn residual_at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).zip(self.w).map(|((&x, &y), &w)| w * ((self.model)(x, p) - y)),
        )
    }
}

impl<M: Fn(f64, &[f64]) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for Curve<'_, M> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(self.residual_at(self.p.as_slice()))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.p.len();
        let mut jac = DMatrix::zeros(self.x.len(), n);
        let mut q = self.p.as_slice().to_vec();
        for j in 0..n {
            let h = 1e-6 * self.p[j].abs().max(1e-3);
            q[j] = self.p[j] + h;
            let up = self.residual_at(&q);
            q[j] = self.p[j] - h;
            let down = self.residual_at(&q);
            q[j] = self.p[j];
            jac.set_column(j, &((up - down) / (2.0 * h)));
        }
        Some(jac)
    }
}

struct CurveFit {
    params: Vec<f64>,
    errors: Vec<f64>,
    reduced_chi2: f64,
    residual_rms: f64,
}

/// Weighted LM fit. With `absolute` the weights are 1/σ and the covariance
/// is (JᵀJ)⁻¹; otherwise it is scaled by the reduced χ².
fn fit_curve<M: Fn(f64, &[f64]) -> f64>(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    absolute: bool,
    model: M,
    p0: &[f64],
) -> Result<CurveFit> {
    let problem = Curve { x, y, w, model, p: DVector::from_column_slice(p0) };
    let (problem, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::Fit(format!(
            "did not converge: {:?} after {} evaluations, objective {:e}",
            report.termination, report.number_of_evaluations, report.objective_function
        )));
    }
    let params = problem.p.as_slice().to_vec();
    let r = problem.residuals().expect("residuals");
    let dof = x.len().saturating_sub(params.len()).max(1) as f64;
    let reduced_chi2 = r.norm_squared() / dof;
    let jac = problem.jacobian().expect("jacobian");
    let cov = (jac.transpose() * &jac)
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix; parameters are degenerate".into()))?;
    let scale = if absolute { 1.0 } else { reduced_chi2 };
    let errors = (0..params.len()).map(|j| (cov[(j, j)] * scale).max(0.0).sqrt()).collect();
    let residual_rms = (x
        .iter()
        .zip(y)
        .map(|(&x, &y)| ((problem.model)(x, &params) - y).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(CurveFit { params, errors, reduced_chi2, residual_rms })
}

fn weights(n: usize, sigma: Option<&[f64]>) -> Result<(Vec<f64>, bool)> {
    match sigma {
        None => Ok((vec![1.0; n], false)),
        Some(s) if s.len() != n => Err(Error::Fit(format!("{} sigmas for {n} samples", s.len()))),
        Some(s) => {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Fit("uncertainties must be positive and finite".into()));
            }
            Ok((s.iter().map(|v| 1.0 / v).collect(), true))
        }
    }
}

fn check_samples(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae for {} values", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::Fit(format!("need at least {min} samples, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite samples".into()));
    }
    Ok(())
}

/// Weighted least-squares amplitude for r ≈ a·g; returns (a, score).
fn linear_amplitude(r: &[f64], g: &[f64], w: &[f64]) -> (f64, f64) {
    let (mut sgg, mut srg) = (0.0, 0.0);
    for ((r, g), w) in r.iter().zip(g).zip(w) {
        let w2 = w * w;
        sgg += w2 * g * g;
        srg += w2 * r * g;
    }
    let a = if sgg > 0.0 { srg / sgg } else { 0.0 };
    let score = r.iter().zip(g).zip(w).map(|((r, g), w)| (w * (r - a * g)).powi(2)).sum();
    (a, score)
}

fn gaussian(x: f64, u: f64) -> f64 {
    (-4.0 * LN_2 * u * x * x).exp()
}

fn fwhm_from(u: f64, u_err: f64, scale: f64) -> Option<Estimate> {
    (u > 0.0).then(|| {
        let w = scale / u.sqrt();
        Estimate::new(w, 0.5 * w * u_err / u)
    })
}

fn significant(amplitude: f64, error: f64) -> Result<()> {
    if !(amplitude.abs() > 5.0 * error) {
        return Err(Error::Fit(format!(
            "no significant modulation: amplitude {amplitude:.4} ± {error:.4}"
        )));
    }
    Ok(())
}

/// Fits c(ΔT) = 1 − ½A·exp(−4ln2 ΔT²/W²)·cos(2πfΔT).
pub fn fit_beating(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    check_samples(x, y, 8)?;
    let (w, absolute) = weights(x.len(), sigma)?;
    let xs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sx: Vec<f64> = x.iter().map(|v| v / xs).collect();
    let span = sx[sx.len() - 1] - sx[0];
    let step = sx.windows(2).map(|p| (p[1] - p[0]).abs()).fold(f64::INFINITY, f64::min);
    let r: Vec<f64> = y.iter().map(|v| 2.0 * (1.0 - v)).collect();

    let (f_lo, f_hi) = (2.0 / span, 0.5 / step);
    let grid = 4000;
    let (mut best_f, mut best) = (f_lo, f64::INFINITY);
    for k in 0..=grid {
        let f = f_lo + (f_hi - f_lo) * k as f64 / grid as f64;
        let g: Vec<f64> = sx.iter().map(|&x| (TAU * f * x).cos()).collect();
        let (_, score) = linear_amplitude(&r, &g, &w);
        if score < best {
            best = score;
            best_f = f;
        }
    }
    let g: Vec<f64> = sx.iter().map(|&x| (TAU * best_f * x).cos()).collect();
    let (a0, _) = linear_amplitude(&r, &g, &w);

    let model = |x: f64, p: &[f64]| 1.0 - 0.5 * p[0] * gaussian(x, p[2]) * (TAU * p[1] * x).cos();
    let fit = fit_curve(&sx, y, &w, absolute, model, &[a0, best_f, 0.0])?;
    let (a, f, u) = (fit.params[0], fit.params[1].abs(), fit.params[2]);
    if f * span < 3.0 {
        return Err(Error::Fit(format!(
            "fitted frequency {:e} Hz gives {:.2} periods in range; need 3",
            f / xs,
            f * span
        )));
    }
    significant(a, fit.errors[0])?;
    Ok(FitResult {
        beat_frequency: Some(Estimate::new(f / xs, fit.errors[1] / xs)),
        amplitude: Some(Estimate::new(a, fit.errors[0])),
        envelope_fwhm: fwhm_from(u, fit.errors[2], xs),
        residual_rms: fit.residual_rms,
        reduced_chi2: absolute.then_some(fit.reduced_chi2),
        ..FitResult::default()
    })
}

/// Fits c(ΔT) = 1 − ½A·exp(−4ln2 ΔT²/W²), the unbeaten dip.
pub fn fit_envelope(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    check_samples(x, y, 5)?;
    let (w, absolute) = weights(x.len(), sigma)?;
    let xs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sx: Vec<f64> = x.iter().map(|v| v / xs).collect();
    let r: Vec<f64> = y.iter().map(|v| 2.0 * (1.0 - v)).collect();

    let (mut best_u, mut best) = (0.0, f64::INFINITY);
    for k in 0..=80 {
        let u = if k == 0 { 0.0 } else { 10f64.powf(-2.0 + 5.0 * k as f64 / 80.0) };
        let g: Vec<f64> = sx.iter().map(|&x| gaussian(x, u)).collect();
        let (_, score) = linear_amplitude(&r, &g, &w);
        if score < best {
            best = score;
            best_u = u;
        }
    }
    let g: Vec<f64> = sx.iter().map(|&x| gaussian(x, best_u)).collect();
    let (a0, _) = linear_amplitude(&r, &g, &w);

    let model = |x: f64, p: &[f64]| 1.0 - 0.5 * p[0] * gaussian(x, p[1]);
    let fit = fit_curve(&sx, y, &w, absolute, model, &[a0, best_u])?;
    significant(fit.params[0], fit.errors[0])?;
    Ok(FitResult {
        amplitude: Some(Estimate::new(fit.params[0], fit.errors[0])),
        envelope_fwhm: fwhm_from(fit.params[1], fit.errors[1], xs),
        residual_rms: fit.residual_rms,
        reduced_chi2: absolute.then_some(fit.reduced_chi2),
        ..FitResult::default()
    })
}

/// Amplitude A of y ≈ 1 − ½A·shape with the shape held fixed.
pub fn fit_template_amplitude(y: &[f64], sigma: &[f64], shape: &[f64]) -> Result<Estimate> {
    if y.len() != sigma.len() || y.len() != shape.len() {
        return Err(Error::Fit("template, data and sigma lengths differ".into()));
    }
    let (w, _) = weights(y.len(), Some(sigma))?;
    let r: Vec<f64> = y.iter().map(|v| 2.0 * (1.0 - v)).collect();
    let (a, _) = linear_amplitude(&r, shape, &w);
    let sgg: f64 = shape.iter().zip(&w).map(|(g, w)| (w * g).powi(2)).sum();
    if sgg == 0.0 {
        return Err(Error::Fit("template vanishes on the sampled grid".into()));
    }
    Ok(Estimate::new(a, 2.0 / sgg.sqrt()))
}

/// Template amplitude for a normalized Poisson histogram, with bin variances
/// taken from the fitted model `(1 − A·g/2) / baseline` rather than from the
/// observed counts, which would favour bins that fluctuated low.
pub fn fit_template_amplitude_poisson(y: &[f64], baseline: f64, shape: &[f64]) -> Result<Estimate> {
    if !(baseline > 0.0) {
        return Err(Error::Fit(format!("baseline must be positive, got {baseline}")));
    }
    let floor = 1.0 / baseline;
    let sigma_of = |a: f64| -> Vec<f64> {
        shape.iter().map(|g| ((1.0 - 0.5 * a * g).max(floor) / baseline).sqrt()).collect()
    };
    let mut est = fit_template_amplitude(y, &sigma_of(0.0), shape)?;
    for _ in 0..20 {
        let next = fit_template_amplitude(y, &sigma_of(est.value), shape)?;
        let done = (next.value - est.value).abs() < 1e-9;
        est = next;
        if done {
            break;
        }
    }
    Ok(est)
}

/// Location of the beat minimum nearest ΔT = 0 for a known frequency `f`,
/// from the linear fit 1 − c = a·cos(2πfΔT) + b·sin(2πfΔT).
pub fn beat_minimum_offset(x: &[f64], y: &[f64], sigma: &[f64], f: f64) -> Result<Estimate> {
    check_samples(x, y, 5)?;
    let (w, _) = weights(x.len(), Some(sigma))?;
    if !(f > 0.0) {
        return Err(Error::Fit(format!("beat frequency must be positive, got {f}")));
    }
    let omega = TAU * f;
    let mut m = nalgebra::Matrix2::zeros();
    let mut v = nalgebra::Vector2::zeros();
    for ((&x, &y), &w) in x.iter().zip(y).zip(&w) {
        let g = nalgebra::Vector2::new((omega * x).cos(), (omega * x).sin());
        m += w * w * g * g.transpose();
        v += w * w * (1.0 - y) * g;
    }
    let cov = m.try_inverse().ok_or_else(|| Error::Fit("grid does not resolve the beat phase".into()))?;
    let p = cov * v;
    let (a, b) = (p[0], p[1]);
    let r2 = a * a + b * b;
    significant(r2.sqrt(), cov[(0, 0)].max(cov[(1, 1)]).sqrt())?;
    let grad = nalgebra::Vector2::new(-b / r2, a / r2);
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Ok(Estimate::new(b.atan2(a) / omega, var.sqrt() / omega))
}

/// Finds bumps of `signal` above half its maximum (and above 3σ when
/// uncertainties are given) and fits a Gaussian plus offset to each.
pub fn locate_lobes(x: &[f64], signal: &[f64], sigma: Option<&[f64]>) -> Result<Vec<LobeFit>> {
    check_samples(x, signal, 5)?;
    let (w, absolute) = weights(x.len(), sigma)?;
    let peak = signal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let noise = sigma.map_or(0.0, |s| {
        let mut s = s.to_vec();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    });
    let threshold = (0.5 * peak).max(3.0 * noise);
    if !(peak > threshold) && noise > 0.0 {
        return Ok(Vec::new());
    }

    let mut groups = Vec::new();
    let mut i = 0;
    while i < x.len() {
        if signal[i] > threshold {
            let start = i;
            while i < x.len() && signal[i] > threshold {
                i += 1;
            }
            groups.push((start, i));
        } else {
            i += 1;
        }
    }

    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let mut lobes = Vec::new();
    for (k, &(a, b)) in groups.iter().enumerate() {
        let pad = (b - a).max(3);
        let lo = a.saturating_sub(pad).max(if k > 0 { (groups[k - 1].1 + a) / 2 } else { 0 });
        let hi = (b + pad).min(x.len()).min(groups.get(k + 1).map_or(x.len(), |g| (b + g.0) / 2 + 1));
        if hi - lo < 5 {
            continue;
        }
        let top = (a..b).max_by(|&p, &q| signal[p].total_cmp(&signal[q])).unwrap();
        let (x0, scale) = (x[top], step * (b - a).max(1) as f64);
        let sx: Vec<f64> = x[lo..hi].iter().map(|v| (v - x0) / scale).collect();
        let model = |x: f64, p: &[f64]| p[3] + p[0] * (-4.0 * LN_2 * ((x - p[1]) / p[2]).powi(2)).exp();
        let Ok(fit) = fit_curve(&sx, &signal[lo..hi], &w[lo..hi], absolute, model, &[signal[top], 0.0, 1.0, 0.0])
        else {
            continue;
        };
        let c = fit.params[1];
        if !(c >= sx[0] && c <= sx[sx.len() - 1]) || fit.params[0] <= 0.0 {
            continue;
        }
        lobes.push(LobeFit {
            center: Estimate::new(x0 + c * scale, fit.errors[1] * scale),
            height: Estimate::new(fit.params[0], fit.errors[0]),
            fwhm: fit.params[2].abs() * scale,
            residual_rms: fit.residual_rms,
        });
    }
    Ok(lobes)
}

/// Slope of lobe center against lobe index.
pub fn estimate_revival_period(lobes: &[LobeFit]) -> Result<Estimate> {
    if lobes.len() < 3 {
        return Err(Error::Fit(format!("insufficient features: {} lobes found, need 3", lobes.len())));
    }
    let mut centers: Vec<Estimate> = lobes.iter().map(|l| l.center).collect();
    centers.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut gaps: Vec<f64> = centers.windows(2).map(|p| p[1].value - p[0].value).collect();
    gaps.sort_by(f64::total_cmp);
    let guess = gaps[gaps.len() / 2];
    let n: Vec<f64> = centers.iter().map(|c| ((c.value - centers[0].value) / guess).round()).collect();
    let w: Vec<f64> = centers.iter().map(|c| 1.0 / c.error.max(1e-300).powi(2)).collect();

    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((n, c), w) in n.iter().zip(&centers).zip(&w) {
        s += w;
        sx += w * n;
        sy += w * c.value;
        sxx += w * n * n;
        sxy += w * n * c.value;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::Fit("lobes do not span distinct revival orders".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    let chi2: f64 = n
        .iter()
        .zip(&centers)
        .zip(&w)
        .map(|((n, c), w)| w * (c.value - intercept - slope * n).powi(2))
        .sum();
    let dof = centers.len() - 2;
    let inflate = if dof > 0 { (chi2 / dof as f64).max(1.0) } else { 1.0 };
    Ok(Estimate::new(slope, (s / det * inflate).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coincidence_normalized, delay_trace, InterferenceConfig};
    use crate::noise::SelfCoherence;
    use crate::spectral::CoherenceFunction;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    fn config(delta_f: f64, fwhm: f64) -> InterferenceConfig {
        let cf = CoherenceFunction::gaussian_revival(0.67e-12, 10.57e-12).unwrap();
        InterferenceConfig::new(cf, SelfCoherence::parametric(fwhm).unwrap()).with_delta_f(delta_f)
    }

    #[test]
    fn beating_recovers_generating_frequency() {
        let cfg = config(3e6, 1.18e-6);
        let x = linspace(-2e-6, 1.99e-6, 400);
        let y: Vec<f64> = x.iter().map(|&t| coincidence_normalized(0.0, t, &cfg)).collect();
        let fit = fit_beating(&x, &y, None).unwrap();
        let f = fit.beat_frequency.unwrap().value;
        assert!((f / 3e6 - 1.0).abs() < 1e-6, "{f}");
        assert!((fit.envelope_fwhm.unwrap().value / 1.18e-6 - 1.0).abs() < 1e-6);
        assert!((fit.visibility().unwrap().value - 0.5).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
        for (&t, &v) in x.iter().zip(&y).step_by(37) {
            assert!((fit.predict(t).unwrap() - v).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_trace_does_not_fit() {
        let x = linspace(-2e-6, 2e-6, 400);
        let y: Vec<f64> = x.iter().enumerate().map(|(k, _)| 1.0 + 1e-3 * ((k * 7919 % 13) as f64 - 6.0)).collect();
        assert!(matches!(fit_beating(&x, &y, Some(&vec![0.01; 400])), Err(Error::Fit(_))));
        assert!(matches!(fit_envelope(&x, &y, Some(&vec![0.01; 400])), Err(Error::Fit(_))));
    }

    #[test]
    fn envelope_width_recovered() {
        let cfg = config(0.0, 0.59e-6);
        let x = linspace(-2e-6, 2e-6, 401);
        let y: Vec<f64> = x.iter().map(|&t| coincidence_normalized(0.0, t, &cfg)).collect();
        let fit = fit_envelope(&x, &y, None).unwrap();
        assert!((fit.envelope_fwhm.unwrap().value / 0.59e-6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn template_amplitude() {
        let shape = vec![1.0, 0.5, 0.0, -0.5];
        let y: Vec<f64> = shape.iter().map(|g| 1.0 - 0.5 * 0.8 * g).collect();
        let a = fit_template_amplitude(&y, &[0.1; 4], &shape).unwrap();
        assert!((a.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn poisson_template_amplitude_is_unbiased_at_low_counts() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Poisson};
        let x = linspace(-2e-6, 2e-6, 400);
        let shape: Vec<f64> = x.iter().map(|&t| gaussian(t, 1.0 / (1.2e-6 * 1.2e-6))).collect();
        let baseline = 30.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mut naive, mut model) = (0.0, 0.0);
        let reps = 200;
        for _ in 0..reps {
            let y: Vec<f64> = shape
                .iter()
                .map(|g| Poisson::new(baseline * (1.0 - 0.5 * g)).unwrap().sample(&mut rng) / baseline)
                .collect();
            let sigma: Vec<f64> = y.iter().map(|v| (v * baseline).max(1.0).sqrt() / baseline).collect();
            naive += fit_template_amplitude(&y, &sigma, &shape).unwrap().value / reps as f64;
            model += fit_template_amplitude_poisson(&y, baseline, &shape).unwrap().value / reps as f64;
        }
        assert!((model - 1.0).abs() < 0.01, "{model}");
        assert!(naive - 1.0 > 0.02, "{naive}");
    }

    #[test]
    fn minimum_offset_of_shifted_beat() {
        let x = linspace(-2e-6, 2e-6, 401);
        let y: Vec<f64> = x.iter().map(|&t| 1.0 - 0.5 * (TAU * 3e6 * (t - 20e-9)).cos()).collect();
        let off = beat_minimum_offset(&x, &y, &vec![0.01; 401], 3e6).unwrap();
        assert!((off.value - 20e-9).abs() < 1e-15, "{off:?}");
    }

    #[test]
    fn revival_period_from_analytic_scan() {
        let cfg = config(0.0, 1.18e-6);
        let grid = linspace(-2.5 * 10.57e-12, 2.5 * 10.57e-12, 501);
        let trace = delay_trace(&grid, 0.0, &cfg);
        let x: Vec<f64> = trace.iter().map(|p| p.0).collect();
        let s: Vec<f64> = trace.iter().map(|p| 1.0 - p.1).collect();
        let lobes = locate_lobes(&x, &s, None).unwrap();
        assert_eq!(lobes.len(), 5);
        let t = estimate_revival_period(&lobes).unwrap();
        assert!((t.value / 10.57e-12 - 1.0).abs() < 1e-3, "{t:?}");
        assert!(estimate_revival_period(&lobes[..2]).is_err());
    }
}
