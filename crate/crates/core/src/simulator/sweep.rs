use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    Additive,
    Multiplicative,
}

/// The list of channel parameters visited by a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub mode: StepMode,
}

/// Rounds to 12 significant digits, hiding accumulated step drift.
pub fn round_parameter(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

const SLACK: f64 = 1e-9;

impl SweepSpec {
    pub fn new(start: f64, stop: f64, step: f64, mode: StepMode) -> Result<Self> {
        if ![start, stop, step].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("sweep bounds and step must be finite"));
        }
        if step <= 0.0 {
            return Err(Error::invalid(format!("step {step} is not positive")));
        }
        if mode == StepMode::Multiplicative {
            if step == 1.0 {
                return Err(Error::invalid("multiplicative step of 1 never advances"));
            }
            if start <= 0.0 || stop <= 0.0 {
                return Err(Error::invalid(
                    "multiplicative sweeps need positive start and stop",
                ));
            }
            if (step > 1.0) != (stop >= start) && start != stop {
                return Err(Error::invalid(format!(
                    "factor {step} moves away from {stop} starting at {start}"
                )));
            }
        }
        Ok(Self {
            start,
            stop,
            step,
            mode,
        })
    }

    /// A single parameter.
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            step: 1.0,
            mode: StepMode::Additive,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.mode {
            StepMode::Additive => {
                let span = (self.stop - self.start).abs();
                let count = (span / self.step + SLACK).floor() as usize + 1;
                let dir = if self.stop >= self.start { 1.0 } else { -1.0 };
                (0..count)
                    .map(|i| round_parameter(self.start + dir * i as f64 * self.step))
                    .collect()
            }
            StepMode::Multiplicative => {
                let ratio = (self.stop / self.start).ln() / self.step.ln();
                let count = (ratio + SLACK).floor().max(0.0) as usize + 1;
                (0..count)
                    .map(|i| round_parameter(self.start * self.step.powi(i as i32)))
                    .collect()
            }
        }
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            StepMode::Additive => "additive",
            StepMode::Multiplicative => "multiplicative",
        };
        write!(f, "{mode} {} {} {}", self.start, self.stop, self.step)
    }
}
