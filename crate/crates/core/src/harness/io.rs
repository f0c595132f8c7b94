//! CSV tables. Floats are written with `Display`, which round-trips exactly.

use std::io::Write;
use std::path::Path;

use crate::analytic::Surface;
use crate::error::{Error, Result};
use crate::montecarlo::{CoincidenceHistogram, FringePoint, ScanPoint, TimestampStream};

use super::compare::CompareReport;
use super::fit::FitResult;

pub const SURFACE_COLUMNS: [&str; 3] = ["delta_t_s", "delta_T_s", "coincidence_normalized"];
pub const HISTOGRAM_COLUMNS: [&str; 4] = ["delta_T_s", "counts_raw", "coincidence_normalized", "poisson_sigma"];
pub const TIMESTAMP_COLUMNS: [&str; 2] = ["detector_id", "time_s"];
pub const SCAN_COLUMNS: [&str; 5] = ["delta_t_s", "delta_T_s", "counts_raw", "coincidence_normalized", "poisson_sigma"];
pub const FRINGE_COLUMNS: [&str; 4] = ["delta_t_s", "fringe_visibility", "visibility_sigma", "mean_counts"];
pub const FIT_COLUMNS: [&str; 4] = ["label", "quantity", "value", "std_error"];
pub const COMPARE_COLUMNS: [&str; 5] = ["x", "reference", "observed", "sigma", "z"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn has_columns(&self, names: &[&str]) -> bool {
        names.iter().all(|n| self.headers.iter().any(|h| h == n))
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("missing CSV column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|e| Error::Config(format!("column `{name}`: `{}`: {e}", r[i])))
            })
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(&mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&table.headers)?;
        for r in &table.rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { headers, rows })
}

pub fn surface_table(s: &Surface) -> Table {
    let mut t = Table::new(&SURFACE_COLUMNS);
    for (dt, dtc, c) in s.cells() {
        t.push([num(dt), num(dtc), num(c)]);
    }
    t
}

/// Analytic trace rows `(Δt, ΔT, c)`.
pub fn trace_table(rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Table {
    let mut t = Table::new(&SURFACE_COLUMNS);
    for (dt, dtc, c) in rows {
        t.push([num(dt), num(dtc), num(c)]);
    }
    t
}

pub fn histogram_table(h: &CoincidenceHistogram) -> Table {
    let mut t = Table::new(&HISTOGRAM_COLUMNS);
    let values = h.normalized_values();
    let sigma = h.poisson_sigma();
    for (k, x) in h.bin_centers().into_iter().enumerate() {
        t.push([num(x), h.counts[k].to_string(), num(values[k]), num(sigma[k])]);
    }
    t
}

pub fn timestamps_table(streams: &[TimestampStream]) -> Table {
    let mut t = Table::new(&TIMESTAMP_COLUMNS);
    for s in streams {
        for &time in &s.times {
            t.push([s.detector.label().to_string(), num(time)]);
        }
    }
    t
}

pub fn scan_table(points: &[ScanPoint]) -> Table {
    let mut t = Table::new(&SCAN_COLUMNS);
    for p in points {
        t.push([num(p.delta_t), num(p.delta_t_cap), p.counts_raw.to_string(), num(p.value), num(p.sigma)]);
    }
    t
}

pub fn fringe_table(points: &[FringePoint]) -> Table {
    let mut t = Table::new(&FRINGE_COLUMNS);
    for p in points {
        t.push([num(p.delta_t), num(p.visibility), num(p.sigma), num(p.mean_counts)]);
    }
    t
}

/// Appends the populated fields of `fit` under `label`.
pub fn push_fit(t: &mut Table, label: &str, fit: &FitResult) {
    let mut row = |q: &str, v: f64, e: f64| t.push([label.to_string(), q.to_string(), num(v), num(e)]);
    if let Some(f) = fit.beat_frequency {
        row("beat_frequency_hz", f.value, f.error);
    }
    if let Some(v) = fit.visibility() {
        row("visibility", v.value, v.error);
    }
    if let Some(w) = fit.envelope_fwhm {
        row("envelope_fwhm_s", w.value, w.error);
    }
    for (k, l) in fit.lobes.iter().enumerate() {
        row(&format!("lobe{k}_center_s"), l.center.value, l.center.error);
        row(&format!("lobe{k}_height"), l.height.value, l.height.error);
    }
    if let Some(p) = fit.revival_period {
        row("revival_period_s", p.value, p.error);
    }
    row("residual_rms", fit.residual_rms, 0.0);
}

pub fn compare_table(r: &CompareReport) -> Table {
    let mut t = Table::new(&COMPARE_COLUMNS);
    for row in &r.rows {
        t.push([num(row.x), num(row.reference), num(row.observed), num(row.sigma), num(row.z)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let mut t = Table::new(&["delta_T_s", "coincidence_normalized"]);
            for v in &values {
                t.push([num(*v), num(-v)]);
            }
            write_table(&path, &t).unwrap();
            let back = read_table(&path).unwrap();
            prop_assert_eq!(back.column("delta_T_s").unwrap(), values.clone());
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let t = Table::new(&["a"]);
        assert!(t.column("b").is_err());
    }
}
