use std::fmt;

use crate::base::normal_quantile;
use crate::error::{Error, Result};

use super::SampleResult;

/// Running error and trial sums for each measure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BinomialAccumulator {
    errors: Vec<u64>,
    trials: Vec<u64>,
    samples: u64,
}

impl BinomialAccumulator {
    pub fn new(measures: usize) -> Self {
        Self {
            errors: vec![0; measures],
            trials: vec![0; measures],
            samples: 0,
        }
    }

    pub fn from_parts(errors: Vec<u64>, trials: Vec<u64>, samples: u64) -> Result<Self> {
        let check = SampleResult::new(errors, trials)?;
        Ok(Self {
            errors: check.values,
            trials: check.trials,
            samples,
        })
    }

    pub fn measures(&self) -> usize {
        self.errors.len()
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn errors(&self) -> &[u64] {
        &self.errors
    }

    pub fn trials(&self) -> &[u64] {
        &self.trials
    }

    pub fn accumulate(&mut self, s: &SampleResult) -> Result<()> {
        if s.measures() != self.measures() {
            return Err(Error::invalid(format!(
                "sample has {} measures, accumulator {}",
                s.measures(),
                self.measures()
            )));
        }
        for k in 0..self.measures() {
            self.errors[k] += s.values[k];
            self.trials[k] += s.trials[k];
        }
        self.samples += 1;
        Ok(())
    }

    /// Adds a batch of `samples` frames with the given sums.
    pub fn accumulate_batch(&mut self, samples: u64, errors: &[u64], trials: &[u64]) -> Result<()> {
        if errors.len() != self.measures() || trials.len() != self.measures() {
            return Err(Error::invalid(format!(
                "batch has {} measures, accumulator {}",
                errors.len(),
                self.measures()
            )));
        }
        if errors.iter().zip(trials).any(|(e, t)| e > t) {
            return Err(Error::invalid("batch has more errors than trials"));
        }
        for k in 0..self.measures() {
            self.errors[k] += errors[k];
            self.trials[k] += trials[k];
        }
        self.samples += samples;
        Ok(())
    }

    pub fn merge(&mut self, other: &BinomialAccumulator) -> Result<()> {
        self.accumulate_batch(other.samples, &other.errors, &other.trials)
    }

    /// Error proportion, or `None` before any trial.
    pub fn estimate(&self, k: usize) -> Option<f64> {
        (self.trials[k] > 0).then(|| self.errors[k] as f64 / self.trials[k] as f64)
    }

    /// Normal-approximation half width at quantile `z`.
    pub fn margin(&self, k: usize, z: f64) -> Option<f64> {
        self.estimate(k)
            .map(|p| z * (p * (1.0 - p) / self.trials[k] as f64).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopMode {
    /// Stop once every margin is within `relative_error` of its estimate.
    Confidence { confidence: f64, relative_error: f64 },
    /// Stop once every measure has counted `target` errors.
    ErrorEvents { target: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Floor {
    /// Sweep ends when any measure falls below the threshold.
    Min(f64),
    /// Sweep ends when all measures fall below the threshold.
    Max(f64),
}

impl Floor {
    pub fn threshold(self) -> f64 {
        match self {
            Floor::Min(t) | Floor::Max(t) => t,
        }
    }
}

/// Per-measure convergence state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureState {
    Converged,
    /// No errors yet, but provably below the active floor.
    BelowFloor,
    Pending,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub mode: StopMode,
    pub floor: Option<Floor>,
    /// Samples required before confidence-mode convergence.
    pub min_samples: u64,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_RELATIVE_ERROR: f64 = 0.05;
pub const DEFAULT_ERROR_EVENTS: u64 = 100;
pub const DEFAULT_MIN_SAMPLES: u64 = 1000;

impl Default for StopRule {
    fn default() -> Self {
        Self {
            mode: StopMode::Confidence {
                confidence: DEFAULT_CONFIDENCE,
                relative_error: DEFAULT_RELATIVE_ERROR,
            },
            floor: None,
            min_samples: DEFAULT_MIN_SAMPLES,
        }
    }
}

impl StopRule {
    pub fn confidence(confidence: f64, relative_error: f64) -> Result<Self> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::invalid(format!("confidence {confidence} outside (0, 1)")));
        }
        if !(relative_error > 0.0 && relative_error.is_finite()) {
            return Err(Error::invalid(format!(
                "relative error {relative_error} is not positive"
            )));
        }
        Ok(Self {
            mode: StopMode::Confidence {
                confidence,
                relative_error,
            },
            ..Self::default()
        })
    }

    pub fn error_events(target: u64) -> Result<Self> {
        if target == 0 {
            return Err(Error::invalid("error event target must be at least 1"));
        }
        Ok(Self {
            mode: StopMode::ErrorEvents { target },
            ..Self::default()
        })
    }

    pub fn with_floor(mut self, floor: Option<Floor>) -> Result<Self> {
        if let Some(f) = floor {
            let t = f.threshold();
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("floor {t} outside (0, 1]")));
            }
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn with_min_samples(mut self, min_samples: u64) -> Self {
        self.min_samples = min_samples;
        self
    }

    /// Level used for reported margins.
    pub fn confidence_level(&self) -> f64 {
        match self.mode {
            StopMode::Confidence { confidence, .. } => confidence,
            StopMode::ErrorEvents { .. } => DEFAULT_CONFIDENCE,
        }
    }

    pub fn z(&self) -> f64 {
        normal_quantile(self.confidence_level()).expect("level validated on construction")
    }

    fn below_floor_without_errors(&self, acc: &BinomialAccumulator, k: usize) -> bool {
        let Some(floor) = self.floor else {
            return false;
        };
        let t = acc.trials()[k];
        if acc.errors()[k] > 0 || t == 0 {
            return false;
        }
        // exact one-sided bound for zero observed errors
        let upper = 1.0 - (1.0 - self.confidence_level()).powf(1.0 / t as f64);
        upper < floor.threshold()
    }

    pub fn measure_states(&self, acc: &BinomialAccumulator) -> Vec<MeasureState> {
        let z = self.z();
        (0..acc.measures())
            .map(|k| {
                let e = acc.errors()[k];
                let met = match self.mode {
                    StopMode::ErrorEvents { target } => e >= target,
                    StopMode::Confidence { relative_error, .. } => {
                        e > 0
                            && acc.samples() >= self.min_samples
                            && acc.margin(k, z).zip(acc.estimate(k)).is_some_and(
                                |(delta, p)| delta <= relative_error * p,
                            )
                    }
                };
                if met {
                    MeasureState::Converged
                } else if self.below_floor_without_errors(acc, k) {
                    MeasureState::BelowFloor
                } else {
                    MeasureState::Pending
                }
            })
            .collect()
    }

    pub fn converged(&self, acc: &BinomialAccumulator) -> bool {
        if let StopMode::Confidence { .. } = self.mode {
            if acc.samples() < self.min_samples {
                return false;
            }
        }
        acc.measures() > 0
            && self
                .measure_states(acc)
                .iter()
                .all(|s| *s != MeasureState::Pending)
    }

    /// Whether the estimates of a finished parameter end the sweep.
    pub fn floor_reached(&self, acc: &BinomialAccumulator) -> bool {
        let below = |k: usize| acc.estimate(k).is_some_and(|p| p < self.floor.map_or(0.0, Floor::threshold));
        match self.floor {
            None => false,
            Some(Floor::Min(_)) => (0..acc.measures()).any(below),
            Some(Floor::Max(_)) => (0..acc.measures()).all(below),
        }
    }
}

impl fmt::Display for StopRule {
    /// Space-separated tokens, also used in state files.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            StopMode::Confidence {
                confidence,
                relative_error,
            } => write!(f, "confidence {confidence} relative-error {relative_error}")?,
            StopMode::ErrorEvents { target } => write!(f, "error-events {target}")?,
        }
        match self.floor {
            Some(Floor::Min(t)) => write!(f, " floor-min {t}")?,
            Some(Floor::Max(t)) => write!(f, " floor-max {t}")?,
            None => write!(f, " floor-none")?,
        }
        write!(f, " min-samples {}", self.min_samples)
    }
}
