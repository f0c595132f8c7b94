use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analytic::{self, InterferenceConfig, Surface};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::montecarlo::{
    delay_scan, fringe_scan, histogram_run, simulate_trial, CoincidenceHistogram, FringePoint, HistogramRun,
    ScanPoint, SimulationPlan, Variant,
};
use crate::seed::{self, stream};

use super::config::{RunMode, ScenarioConfig};
use super::fit::{estimate_revival_period, fit_beating, fit_envelope, locate_lobes, FitResult};
use super::io::{self, Table};

/// File-name tag of a variant, e.g. `df3mhz_sfm317.6khz`.
pub fn variant_tag(v: Variant) -> String {
    format!("df{}mhz_sfm{}khz", v.delta_f / 1e6, v.sigma_fm / 1e3)
}

/// Analytic configuration of one variant at optical delay `delta_t`.
pub fn interference(cfg: &ScenarioConfig, v: Variant, delta_t: f64) -> Result<InterferenceConfig> {
    let mut ic = cfg.physics()?.interference(v, delta_t);
    ic.gamma_cap = cfg.self_coherence(v)?;
    Ok(ic)
}

pub fn analytic_surface(cfg: &ScenarioConfig, v: Variant, exec: Execution) -> Result<Surface> {
    let ic = interference(cfg, v, 0.0)?;
    analytic::surface(&cfg.delta_t_grid(), &cfg.delta_t_cap_grid(), &ic, exec)
}

/// Analytic ΔT trace at the scenario's Δt, sampled at the histogram bin centers.
pub fn analytic_histogram(cfg: &ScenarioConfig, v: Variant) -> Result<Vec<(f64, f64, f64)>> {
    let dt = cfg.delta_t().ok_or_else(|| Error::Config("scenario has no fixed delta_t_ps".into()))?;
    let ic = interference(cfg, v, dt)?;
    let h = CoincidenceHistogram::empty(cfg.simulation_plan().bin_width, cfg.simulation_plan().range);
    Ok(analytic::detection_trace(dt, &h.bin_centers(), &ic).into_iter().map(|(x, c)| (dt, x, c)).collect())
}

/// Analytic Δt scans, one block per fixed ΔT.
pub fn analytic_scan(cfg: &ScenarioConfig, v: Variant) -> Result<Vec<(f64, f64, f64)>> {
    let ic = interference(cfg, v, 0.0)?;
    let grid = cfg.delta_t_grid();
    let mut rows = Vec::new();
    for target in cfg.delta_t_cap_targets() {
        rows.extend(analytic::delay_trace(&grid, target, &ic).into_iter().map(|(dt, c)| (dt, target, c)));
    }
    Ok(rows)
}

/// |γ(Δt)|, the ideal single-photon fringe visibility.
pub fn analytic_fringe(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>> {
    let cf = cfg.coherence()?;
    Ok(cfg.delta_t_grid().into_iter().map(|dt| (dt, cf.magnitude(dt))).collect())
}

fn trace_rows(rows: &[(f64, f64, f64)]) -> Table {
    io::trace_table(rows.iter().copied())
}

/// Writes analytic output for every variant; returns the files written.
pub fn write_analytic(cfg: &ScenarioConfig, out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut put = |name: String, table: Table| -> Result<()> {
        let path = out.join(name);
        io::write_table(&path, &table)?;
        files.push(path);
        Ok(())
    };
    match cfg.mode {
        RunMode::Surface => {
            for v in cfg.variants() {
                put(format!("surface_{}.csv", variant_tag(v)), io::surface_table(&analytic_surface(cfg, v, exec)?))?;
            }
        }
        RunMode::Histogram => {
            for v in cfg.variants() {
                put(format!("analytic_{}.csv", variant_tag(v)), trace_rows(&analytic_histogram(cfg, v)?))?;
            }
        }
        RunMode::DelayScan => {
            for v in cfg.variants() {
                put(format!("analytic_scan_{}.csv", variant_tag(v)), trace_rows(&analytic_scan(cfg, v)?))?;
            }
        }
        RunMode::FringeScan => {
            let mut t = Table::new(&["delta_t_s", "fringe_visibility"]);
            for (dt, g) in analytic_fringe(cfg)? {
                t.push([dt.to_string(), g.to_string()]);
            }
            put("analytic_fringe.csv".into(), t)?;
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dump_timestamps: bool,
    pub execution: Execution,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { dump_timestamps: false, execution: Execution::Parallel }
    }
}

/// Monte Carlo results of a scenario, before any files are written.
#[derive(Debug, Clone, PartialEq)]
pub enum SimulationBundle {
    Histograms(Vec<HistogramRun>),
    Scans(Vec<(Variant, Vec<ScanPoint>)>),
    Fringes(Vec<(Variant, Vec<FringePoint>)>),
}

pub fn simulate(cfg: &ScenarioConfig, plan: &SimulationPlan) -> Result<SimulationBundle> {
    let physics = cfg.physics()?;
    let variants = cfg.variants();
    match cfg.mode {
        RunMode::Surface => Err(Error::Config(format!(
            "scenario `{}` is analytic-only; use the `analytic` subcommand",
            cfg.name
        ))),
        RunMode::Histogram => {
            let dt = cfg.delta_t().expect("validated");
            let runs = variants
                .iter()
                .enumerate()
                .map(|(i, &v)| histogram_run(&physics, v, i as u64, dt, plan))
                .collect::<Result<_>>()?;
            Ok(SimulationBundle::Histograms(runs))
        }
        RunMode::DelayScan => {
            let grid = cfg.delta_t_grid();
            let targets = cfg.delta_t_cap_targets();
            let scans = variants
                .iter()
                .enumerate()
                .map(|(i, &v)| Ok((v, delay_scan(&physics, v, i as u64, &grid, &targets, cfg.gate(), plan)?)))
                .collect::<Result<_>>()?;
            Ok(SimulationBundle::Scans(scans))
        }
        RunMode::FringeScan => {
            let grid = cfg.delta_t_grid();
            let fringes = variants
                .iter()
                .map(|&v| Ok((v, fringe_scan(&physics, v.sigma_fm, &grid, cfg.plan.fringe_dithers, plan)?)))
                .collect::<Result<_>>()?;
            Ok(SimulationBundle::Fringes(fringes))
        }
    }
}

/// Fits a ΔT trace: damped beating first, the plain envelope if no beat is found.
pub fn analyze_histogram(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    match fit_beating(x, y, sigma) {
        Ok(f) => Ok(f),
        Err(Error::Fit(beat)) => fit_envelope(x, y, sigma)
            .map_err(|e| Error::Fit(format!("beating: {beat}; envelope: {e}"))),
        Err(e) => Err(e),
    }
}

/// Lobes of a nonnegative signal (|c − 1| or fringe visibility) and their period.
pub fn analyze_lobes(x: &[f64], signal: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    let lobes = locate_lobes(x, signal, sigma)?;
    let period = estimate_revival_period(&lobes)?;
    let rms = (lobes.iter().map(|l| l.residual_rms.powi(2)).sum::<f64>() / lobes.len() as f64).sqrt();
    Ok(FitResult { revival_period: Some(period), lobes, residual_rms: rms, ..FitResult::default() })
}

/// [`analyze_histogram`] on a normalized histogram, refitted once with bin
/// variances from the first fit so low-count bins are not over-weighted.
pub fn analyze_counts(h: &CoincidenceHistogram) -> Result<FitResult> {
    let (x, y) = (h.bin_centers(), h.normalized_values());
    let first = analyze_histogram(&x, &y, Some(&histogram_sigma(h)))?;
    let b = h.baseline().unwrap_or(1.0);
    let sigma: Vec<f64> = x
        .iter()
        .map(|&t| (first.predict(t).unwrap_or(1.0) * b).max(1.0).sqrt() / b)
        .collect();
    analyze_histogram(&x, &y, Some(&sigma))
}

/// Poisson σ with empty bins floored at one count.
pub fn histogram_sigma(h: &CoincidenceHistogram) -> Vec<f64> {
    let b = h.baseline().unwrap_or(1.0);
    h.counts.iter().map(|&c| (c.max(1) as f64).sqrt() / b).collect()
}

/// Groups scan points by ΔT, keeping Δt order.
pub fn scan_groups(points: &[ScanPoint]) -> Vec<(f64, Vec<&ScanPoint>)> {
    let mut groups: BTreeMap<u64, (f64, Vec<&ScanPoint>)> = BTreeMap::new();
    for p in points {
        groups.entry(p.delta_t_cap.to_bits()).or_insert((p.delta_t_cap, Vec::new())).1.push(p);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Writes the simulation bundle plus fits and a run manifest.
pub fn write_simulation(
    cfg: &ScenarioConfig,
    plan: &SimulationPlan,
    out: &Path,
    opts: SimOptions,
) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let plan = SimulationPlan { execution: opts.execution, ..plan.clone() };
    let bundle = simulate(cfg, &plan)?;
    let mut files = Vec::new();
    let mut notes = Vec::new();
    let mut fits = Table::new(&io::FIT_COLUMNS);
    let mut manifest = Table::new(&[
        "label", "delta_f_hz", "sigma_fm_hz", "master_seed", "trials", "duration_s", "singles_1", "singles_2",
    ]);
    let put = |name: String, table: &Table, files: &mut Vec<PathBuf>| -> Result<()> {
        let path = out.join(name);
        io::write_table(&path, table)?;
        files.push(path);
        Ok(())
    };
    let mut record = |label: &str, v: Variant, singles: (u64, u64)| {
        manifest.push([
            label.to_string(),
            v.delta_f.to_string(),
            v.sigma_fm.to_string(),
            plan.master_seed.to_string(),
            plan.trials.to_string(),
            plan.duration.to_string(),
            singles.0.to_string(),
            singles.1.to_string(),
        ]);
    };
    match &bundle {
        SimulationBundle::Histograms(runs) => {
            for (i, run) in runs.iter().enumerate() {
                let tag = variant_tag(run.variant);
                put(format!("histogram_{tag}.csv"), &io::histogram_table(&run.normalized), &mut files)?;
                record(&tag, run.variant, run.singles);
                match analyze_counts(&run.normalized) {
                    Ok(fit) => io::push_fit(&mut fits, &tag, &fit),
                    Err(e) => notes.push(format!("{tag}: {e}")),
                }
                if opts.dump_timestamps {
                    let s = seed::derive(plan.master_seed, &[stream::VARIANT, i as u64, stream::TRIAL, 0]);
                    let (a, b) = simulate_trial(&cfg.physics()?, run.variant, run.delta_t, &plan, 0, s)?;
                    put(format!("timestamps_{tag}.csv"), &io::timestamps_table(&[a, b]), &mut files)?;
                }
            }
        }
        SimulationBundle::Scans(scans) => {
            for (v, points) in scans {
                let tag = variant_tag(*v);
                put(format!("mc_scan_{tag}.csv"), &io::scan_table(points), &mut files)?;
                let counts: u64 = points.iter().map(|p| p.counts_raw).sum();
                record(&tag, *v, (counts, 0));
                for (target, group) in scan_groups(points) {
                    let label = format!("{tag}@{target}");
                    let x: Vec<f64> = group.iter().map(|p| p.delta_t).collect();
                    let s: Vec<f64> = group.iter().map(|p| (p.value - 1.0).abs()).collect();
                    match analyze_lobes(&x, &s, Some(&group.iter().map(|p| p.sigma).collect::<Vec<_>>())) {
                        Ok(fit) => io::push_fit(&mut fits, &label, &fit),
                        Err(e) => notes.push(format!("{label}: {e}")),
                    }
                }
            }
        }
        SimulationBundle::Fringes(fringes) => {
            for (v, points) in fringes {
                let tag = variant_tag(*v);
                put(format!("fringe_{tag}.csv"), &io::fringe_table(points), &mut files)?;
                record(&tag, *v, (points.iter().map(|p| p.mean_counts as u64).sum(), 0));
                let x: Vec<f64> = points.iter().map(|p| p.delta_t).collect();
                let s: Vec<f64> = points.iter().map(|p| p.visibility).collect();
                let sig: Vec<f64> = points.iter().map(|p| p.sigma).collect();
                match analyze_lobes(&x, &s, Some(&sig)) {
                    Ok(fit) => io::push_fit(&mut fits, &tag, &fit),
                    Err(e) => notes.push(format!("{tag}: {e}")),
                }
            }
        }
    }
    put("fit.csv".into(), &fits, &mut files)?;
    put("runs.csv".into(), &manifest, &mut files)?;
    Ok((files, notes))
}

/// Labelled fits plus notes on curves that could not be fitted.
pub type Fits = (Vec<(String, FitResult)>, Vec<String>);

/// Fits every curve found in a CSV written by this crate.
pub fn analyze_table(t: &Table) -> Result<Fits> {
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    let mut attempt = |label: String, r: Result<FitResult>| match r {
        Ok(f) => fits.push((label, f)),
        Err(e) => notes.push(format!("{label}: {e}")),
    };
    if t.has_columns(&io::HISTOGRAM_COLUMNS) {
        let x = t.column("delta_T_s")?;
        let y = t.column("coincidence_normalized")?;
        let counts = t.column("counts_raw")?;
        let (sc, sy): (f64, f64) = counts.iter().zip(&y).fold((0.0, 0.0), |a, (c, y)| (a.0 + c, a.1 + y));
        let b = if sy > 0.0 { sc / sy } else { 1.0 };
        let sigma: Vec<f64> = counts.iter().map(|c| c.max(1.0).sqrt() / b).collect();
        attempt("histogram".into(), analyze_histogram(&x, &y, Some(&sigma)));
    } else if t.has_columns(&["delta_t_s", "fringe_visibility"]) {
        let x = t.column("delta_t_s")?;
        let v = t.column("fringe_visibility")?;
        let sigma = if t.has_columns(&["visibility_sigma"]) { Some(t.column("visibility_sigma")?) } else { None };
        attempt("fringe".into(), analyze_lobes(&x, &v, sigma.as_deref()));
    } else if t.has_columns(&io::SURFACE_COLUMNS) {
        let dt = t.column("delta_t_s")?;
        let dtc = t.column("delta_T_s")?;
        let c = t.column("coincidence_normalized")?;
        let sigma = if t.has_columns(&["poisson_sigma"]) { Some(t.column("poisson_sigma")?) } else { None };
        if dt.iter().all(|v| *v == dt[0]) {
            attempt(format!("delta_t={}", dt[0]), analyze_histogram(&dtc, &c, sigma.as_deref()));
        } else {
            let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (k, v) in dtc.iter().enumerate() {
                groups.entry(v.to_bits()).or_default().push(k);
            }
            let mut keys: Vec<_> = groups.into_iter().collect();
            keys.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)));
            for (key, idx) in keys {
                let x: Vec<f64> = idx.iter().map(|&k| dt[k]).collect();
                let s: Vec<f64> = idx.iter().map(|&k| (c[k] - 1.0).abs()).collect();
                let sg = sigma.as_ref().map(|sg| idx.iter().map(|&k| sg[k].max(1e-300)).collect::<Vec<_>>());
                attempt(format!("delta_T={}", f64::from_bits(key)), analyze_lobes(&x, &s, sg.as_deref()));
            }
        }
    } else {
        return Err(Error::Config(format!("unrecognized CSV columns {:?}", t.headers)));
    }
    if fits.is_empty() {
        return Err(Error::Fit(notes.join("; ")));
    }
    Ok((fits, notes))
}

type Curve = (Vec<f64>, Vec<f64>, Option<Vec<f64>>, Option<f64>);

/// Column pair (x, y) and σ of a curve CSV for comparison.
fn curve(t: &Table) -> Result<Curve> {
    let y = t.column("coincidence_normalized")?;
    let pick = |t: &Table| -> Result<Vec<f64>> {
        let dtc = t.column("delta_T_s")?;
        if !t.has_columns(&["delta_t_s"]) {
            return Ok(dtc);
        }
        let dt = t.column("delta_t_s")?;
        match (dt.iter().all(|v| *v == dt[0]), dtc.iter().all(|v| *v == dtc[0])) {
            (true, _) => Ok(dtc),
            (false, true) => Ok(dt),
            (false, false) => Err(Error::GridMismatch("CSV holds a two-dimensional grid".into())),
        }
    };
    let x = pick(t)?;
    if t.has_columns(&["counts_raw"]) {
        let counts = t.column("counts_raw")?;
        let (sc, sy) = counts.iter().zip(&y).fold((0.0, 0.0), |a, (c, y)| (a.0 + c, a.1 + y));
        let baseline = if sy > 0.0 { Some(sc / sy) } else { None };
        Ok((x, y, t.has_columns(&["poisson_sigma"]).then(|| t.column("poisson_sigma")).transpose()?, baseline))
    } else {
        Ok((x, y, None, None))
    }
}

/// Compares an observed curve CSV against a reference curve CSV.
pub fn compare_tables(reference: &Table, observed: &Table) -> Result<super::compare::CompareReport> {
    let (xr, yr, _, _) = curve(reference)?;
    let (xo, yo, sigma, baseline) = curve(observed)?;
    let sigma = match (baseline, sigma) {
        (Some(b), _) if observed.has_columns(&io::HISTOGRAM_COLUMNS) => super::compare::reference_sigma(&yr, b),
        (_, Some(s)) => s,
        _ => vec![0.0; yo.len()],
    };
    super::compare::compare(&xr, &yr, &xo, &yo, &sigma)
}
