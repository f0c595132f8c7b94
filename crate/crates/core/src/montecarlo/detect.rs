use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, SimRng};

use super::plan::SimulationPlan;

/// Per-step click probability may not exceed this.
pub const MAX_STEP_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    D1,
    D2,
}

impl DetectorId {
    pub fn label(self) -> &'static str {
        match self {
            DetectorId::D1 => "D1",
            DetectorId::D2 => "D2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimestampStream {
    pub detector: DetectorId,
    /// Click times in seconds, strictly increasing.
    pub times: Vec<f64>,
    pub trial: u32,
    pub seed: u64,
}

impl TimestampStream {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Bernoulli-thinned detector over envelope steps.
///
/// Each step clicks independently with probability
/// `rate · dt · I(step) / reference`. Steps are visited only as candidates
/// drawn geometrically at the bound `rate · dt · bound / reference` and then
/// accepted with `I / bound`, which yields the same per-step law.
pub struct Detector {
    rng: SimRng,
    dt: f64,
    p_max: f64,
    log_miss: f64,
    bound: f64,
    next: u64,
}

impl Detector {
    pub fn new(rate: f64, dt: f64, reference: f64, bound: f64, seed: u64) -> Result<Self> {
        let p_max = if reference > 0.0 { rate * dt * bound / reference } else { 0.0 };
        if p_max > MAX_STEP_PROBABILITY {
            return Err(Error::Plan(format!(
                "click probability per step reaches {p_max:.3} (cap {MAX_STEP_PROBABILITY}); \
                 reduce envelope_dt or mean_click_rate"
            )));
        }
        let mut det = Detector {
            rng: seed::rng(seed),
            dt,
            p_max,
            log_miss: (-p_max).ln_1p(),
            bound,
            next: 0,
        };
        det.next = det.skip();
        Ok(det)
    }

    fn skip(&mut self) -> u64 {
        if self.p_max <= 0.0 {
            return u64::MAX;
        }
        let u: f64 = self.rng.random();
        let k = ((-u).ln_1p() / self.log_miss).floor();
        if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }

    /// Visits candidate steps below `step_end`, pushing accepted click times.
    pub fn run_until(&mut self, step_end: u64, mut intensity: impl FnMut(u64) -> f64, out: &mut Vec<f64>) {
        while self.next < step_end {
            let step = self.next;
            let i = intensity(step);
            debug_assert!(i <= self.bound * (1.0 + 1e-9), "intensity {i} above bound {}", self.bound);
            let accept: f64 = self.rng.random();
            if accept * self.bound < i {
                let jitter: f64 = self.rng.random();
                out.push((step as f64 + jitter) * self.dt);
            }
            self.next = step.saturating_add(1).saturating_add(self.skip());
        }
    }
}

/// Draws clicks from a sampled intensity trace, normalized by its own mean.
pub fn detect(
    intensity: &[f64],
    detector: DetectorId,
    plan: &SimulationPlan,
    seed: u64,
) -> Result<TimestampStream> {
    if intensity.iter().any(|&i| !(i >= 0.0)) {
        return Err(Error::Plan("intensity trace must be nonnegative".into()));
    }
    let mean = intensity.iter().sum::<f64>() / intensity.len().max(1) as f64;
    let bound = intensity.iter().cloned().fold(0.0, f64::max);
    let mut times = Vec::new();
    if mean > 0.0 {
        let mut det = Detector::new(plan.mean_click_rate, plan.envelope_dt, mean, bound, seed)?;
        det.run_until(intensity.len() as u64, |k| intensity[k as usize], &mut times);
    }
    Ok(TimestampStream { detector, times, trial: 0, seed })
}
