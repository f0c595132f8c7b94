use crate::error::{Error, Result};

use super::detect::TimestampStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    Raw,
    /// Counts divided by the accidental level `baseline`.
    BaselineNormalized { baseline: f64 },
}

/// Start–stop histogram of ΔT = T₂ − T₁ over `[-range, range)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub range: f64,
    pub counts: Vec<u64>,
    pub total_pairs: u64,
    pub normalization: Normalization,
}

impl CoincidenceHistogram {
    pub fn empty(bin_width: f64, range: f64) -> Self {
        let bins = (2.0 * range / bin_width).round() as usize;
        CoincidenceHistogram {
            bin_width,
            range,
            counts: vec![0; bins],
            total_pairs: 0,
            normalization: Normalization::Raw,
        }
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let lo = -self.range + bin as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.bin_count())
            .map(|b| -self.range + (b as f64 + 0.5) * self.bin_width)
            .collect()
    }

    pub fn bin_of(&self, delta_t_cap: f64) -> Option<usize> {
        let x = ((delta_t_cap + self.range) / self.bin_width).floor();
        (x >= 0.0 && (x as usize) < self.bin_count()).then_some(x as usize)
    }

    pub fn baseline(&self) -> Option<f64> {
        match self.normalization {
            Normalization::Raw => None,
            Normalization::BaselineNormalized { baseline } => Some(baseline),
        }
    }

    /// Normalized coincidence per bin (raw counts when not normalized).
    pub fn normalized_values(&self) -> Vec<f64> {
        let b = self.baseline().unwrap_or(1.0);
        self.counts.iter().map(|&c| c as f64 / b).collect()
    }

    /// Poisson standard error per bin, in the units of [`Self::normalized_values`].
    pub fn poisson_sigma(&self) -> Vec<f64> {
        let b = self.baseline().unwrap_or(1.0);
        self.counts.iter().map(|&c| (c as f64).sqrt() / b).collect()
    }

    /// Adds raw counts of `other`; both must be raw and share the binning.
    pub fn merge(&mut self, other: &CoincidenceHistogram) -> Result<()> {
        if self.bin_count() != other.bin_count()
            || self.bin_width != other.bin_width
            || self.range != other.range
        {
            return Err(Error::GridMismatch("histograms have different binning".into()));
        }
        if self.normalization != Normalization::Raw || other.normalization != Normalization::Raw {
            return Err(Error::Normalization("only raw histograms can be merged".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_pairs += other.total_pairs;
        Ok(())
    }
}

/// Counts every pair with T₂ − T₁ in `[-range, range)` using a sliding
/// window over the sorted stop stream.
pub fn correlate(
    starts: &TimestampStream,
    stops: &TimestampStream,
    bin_width: f64,
    range: f64,
) -> CoincidenceHistogram {
    let mut h = CoincidenceHistogram::empty(bin_width, range);
    let stop = &stops.times;
    let mut lo = 0;
    for &t1 in &starts.times {
        while lo < stop.len() && stop[lo] < t1 - range {
            lo += 1;
        }
        let mut j = lo;
        while j < stop.len() && stop[j] < t1 + range {
            if let Some(b) = h.bin_of(stop[j] - t1) {
                h.counts[b] += 1;
                h.total_pairs += 1;
            }
            j += 1;
        }
    }
    h
}

/// Divides by the accidental level R₁·R₂·bin_width·duration.
pub fn normalize(h: &CoincidenceHistogram, duration: f64, rates: (f64, f64)) -> Result<CoincidenceHistogram> {
    if h.normalization != Normalization::Raw {
        return Err(Error::Normalization("histogram is already normalized".into()));
    }
    if !(rates.0 > 0.0 && rates.1 > 0.0 && duration > 0.0) {
        return Err(Error::Normalization(format!(
            "singles rates ({:e}, {:e}) /s and duration {duration:e} s must be positive",
            rates.0, rates.1
        )));
    }
    Ok(CoincidenceHistogram {
        normalization: Normalization::BaselineNormalized {
            baseline: rates.0 * rates.1 * h.bin_width * duration,
        },
        ..h.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::DetectorId;
    use proptest::prelude::*;

    fn stream(detector: DetectorId, times: Vec<f64>) -> TimestampStream {
        TimestampStream { detector, times, trial: 0, seed: 0 }
    }

    #[test]
    fn single_pair_lands_in_its_bin() {
        let h = correlate(
            &stream(DetectorId::D1, vec![1e-6]),
            &stream(DetectorId::D2, vec![1.05e-6]),
            10e-9,
            2e-6,
        );
        assert_eq!(h.total_pairs, 1);
        let b = h.counts.iter().position(|&c| c == 1).unwrap();
        let (lo, hi) = h.bin_edges(b);
        assert!(lo <= 50e-9 && 50e-9 < hi);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
    }

    #[test]
    fn empty_stream_gives_zero_histogram() {
        let h = correlate(&stream(DetectorId::D1, vec![]), &stream(DetectorId::D2, vec![1.0]), 1e-8, 1e-6);
        assert_eq!(h.total_pairs, 0);
        assert!(h.counts.iter().all(|&c| c == 0));
        assert_eq!(h.bin_count(), 200);
    }

    #[test]
    fn normalization_errors() {
        let h = CoincidenceHistogram::empty(1e-8, 1e-6);
        assert!(matches!(normalize(&h, 1.0, (0.0, 5.0)), Err(Error::Normalization(_))));
        let n = normalize(&h, 2.0, (10.0, 20.0)).unwrap();
        assert_eq!(n.baseline(), Some(10.0 * 20.0 * 1e-8 * 2.0));
        assert!(normalize(&n, 2.0, (1.0, 1.0)).is_err());
    }

    #[test]
    fn merge_requires_matching_bins() {
        let mut a = CoincidenceHistogram::empty(1e-8, 1e-6);
        let b = CoincidenceHistogram::empty(2e-8, 1e-6);
        assert!(a.merge(&b).is_err());
    }

    fn brute_force(s1: &[f64], s2: &[f64], bw: f64, range: f64) -> Vec<u64> {
        let mut counts = vec![0u64; (2.0 * range / bw).round() as usize];
        for &a in s1 {
            for &b in s2 {
                let d = b - a;
                if d >= -range && d < range {
                    let k = ((d + range) / bw).floor() as usize;
                    if k < counts.len() {
                        counts[k] += 1;
                    }
                }
            }
        }
        counts
    }

    proptest! {
        #[test]
        fn sweep_matches_all_pairs(
            mut a in proptest::collection::vec(0.0f64..1e-4, 0..200),
            mut b in proptest::collection::vec(0.0f64..1e-4, 0..200),
        ) {
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let h = correlate(&stream(DetectorId::D1, a.clone()), &stream(DetectorId::D2, b.clone()), 1e-7, 5e-6);
            prop_assert_eq!(&h.counts, &brute_force(&a, &b, 1e-7, 5e-6));
            prop_assert_eq!(h.counts.iter().sum::<u64>(), h.total_pairs);
        }
    }
}
