//! FIR acoustic paths and their streaming delay lines.
//!
//! Every path in the simulated ANC plant (primary `P(z)`, secondary `S(z)`
//! and the secondary-path estimate `Ŝ(z)`) is a short FIR filter, so
//! convolution is done directly in the time domain.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Primary path `P(z)` used throughout the simulations.
pub const PRIMARY_PATH: [f64; 10] = [
    0.01, -0.05, 0.02, 0.75, -0.4, -0.5, -0.2, -0.05, 0.3, 0.005,
];

/// Secondary path `S(z)`.
pub const SECONDARY_PATH: [f64; 5] = [0.01, -0.01, 0.9, 0.02, -0.5];

/// Offline estimate `Ŝ(z)` of the secondary path.
pub const SECONDARY_PATH_ESTIMATE: [f64; 5] = [-0.0455, -0.0453, 0.8683, 0.0399, -0.518];

/// Impulse response of an acoustic path.
#[derive(Debug, Clone, PartialEq)]
pub struct FirPath {
    coeffs: Vec<f64>,
}

impl FirPath {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::config("FIR path needs at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::config(format!("FIR coefficient {i} is not finite")));
        }
        Ok(FirPath { coeffs })
    }

    /// Single unit tap, `δ[n]`.
    pub fn unit_impulse() -> Self {
        FirPath { coeffs: vec![1.0] }
    }

    pub fn preset(preset: PathPreset) -> Self {
        let coeffs = match preset {
            PathPreset::Primary => PRIMARY_PATH.to_vec(),
            PathPreset::Secondary => SECONDARY_PATH.to_vec(),
            PathPreset::SecondaryEstimate => SECONDARY_PATH_ESTIMATE.to_vec(),
        };
        FirPath { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_unit_impulse(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 1.0
    }

    /// A delay line sized for this path, zero prehistory.
    pub fn delay_line(&self) -> DelayLine {
        DelayLine::new(self.coeffs.len())
    }

    /// Push `sample` into `line` and return the filter output.
    pub fn step(&self, line: &mut DelayLine, sample: f64) -> Result<f64> {
        if !sample.is_finite() {
            return Err(Error::NonFinite { stage: "FIR input" });
        }
        line.push(sample);
        Ok(dot(&self.coeffs, line.recent()))
    }

    /// Filter a whole signal from zero initial state; output has the
    /// same length as the input.
    pub fn filter(&self, signal: &[f64]) -> Vec<f64> {
        (0..signal.len())
            .map(|n| {
                self.coeffs
                    .iter()
                    .take(n + 1)
                    .enumerate()
                    .map(|(i, c)| c * signal[n - i])
                    .sum()
            })
            .collect()
    }
}

/// Named coefficient sets from the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathPreset {
    Primary,
    Secondary,
    SecondaryEstimate,
}

impl FromStr for PathPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primary" => Ok(PathPreset::Primary),
            "secondary" => Ok(PathPreset::Secondary),
            "secondary_estimate" => Ok(PathPreset::SecondaryEstimate),
            other => Err(Error::config(format!("unknown path preset `{other}`"))),
        }
    }
}

impl fmt::Display for PathPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathPreset::Primary => "primary",
            PathPreset::Secondary => "secondary",
            PathPreset::SecondaryEstimate => "secondary_estimate",
        })
    }
}

/// Ring buffer of the most recent samples.
///
/// Samples are written twice (at `pos` and `pos + capacity`) so the
/// window `buf[pos..pos + capacity]` is always contiguous and ordered
/// most-recent-first.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    pos: usize,
    capacity: usize,
}

impl DelayLine {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "delay line capacity must be positive");
        DelayLine {
            buf: vec![0.0; 2 * capacity],
            pos: 0,
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, sample: f64) {
        self.pos = if self.pos == 0 {
            self.capacity - 1
        } else {
            self.pos - 1
        };
        self.buf[self.pos] = sample;
        self.buf[self.pos + self.capacity] = sample;
    }

    /// Most recent sample first.
    pub fn recent(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.capacity]
    }

    pub fn reset(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
    }
}

/// Path together with its own delay line.
#[derive(Debug, Clone)]
pub struct FirFilter {
    path: FirPath,
    line: DelayLine,
}

impl FirFilter {
    pub fn new(path: FirPath) -> Self {
        let line = path.delay_line();
        FirFilter { path, line }
    }

    pub fn path(&self) -> &FirPath {
        &self.path
    }

    pub fn step(&mut self, sample: f64) -> Result<f64> {
        self.path.step(&mut self.line, sample)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
