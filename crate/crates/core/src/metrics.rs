//! Noise-reduction and deviation metrics, and cross-trial averaging.

use crate::error::{Error, Result};

/// Default ANR forgetting factor.
pub const DEFAULT_BETA: f64 = 0.999;

/// Averaged noise reduction, `20 log10(A_e / A_d)` with exponentially
/// smoothed magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnrTracker {
    beta: f64,
    a_e: f64,
    a_d: f64,
}

impl AnrTracker {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::config(format!("ANR forgetting factor must lie in (0, 1), got {beta}")));
        }
        Ok(AnrTracker {
            beta,
            a_e: 0.0,
            a_d: 0.0,
        })
    }

    /// Returns `None` while the disturbance smoother is still zero.
    pub fn step(&mut self, e: f64, d: f64) -> Option<f64> {
        self.a_e = self.beta * self.a_e + (1.0 - self.beta) * e.abs();
        self.a_d = self.beta * self.a_d + (1.0 - self.beta) * d.abs();
        if self.a_d == 0.0 {
            None
        } else {
            Some(20.0 * (self.a_e / self.a_d).log10())
        }
    }

    pub fn smoothed_error(&self) -> f64 {
        self.a_e
    }

    pub fn smoothed_disturbance(&self) -> f64 {
        self.a_d
    }
}

/// Squared Euclidean distance `||w - w_o||²`.
pub fn true_msd(w: &[f64], w_opt: &[f64]) -> Result<f64> {
    if w.len() != w_opt.len() {
        return Err(Error::config(format!(
            "weight length {} differs from reference length {}",
            w.len(),
            w_opt.len()
        )));
    }
    Ok(w.iter().zip(w_opt).map(|(a, b)| (a - b).powi(2)).sum())
}

/// Pointwise mean over trials, skipping the ones marked diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialAverage {
    pub mean: Vec<f64>,
    pub included: usize,
    pub excluded: usize,
}

/// Average equal-length curves. `None` entries are diverged trials.
pub fn average_trials<C: AsRef<[f64]>>(curves: &[Option<C>]) -> Result<TrialAverage> {
    if curves.is_empty() {
        return Err(Error::config("no trials to average"));
    }
    let mut acc = CurveAccumulator::default();
    let mut excluded = 0;
    for c in curves {
        match c {
            Some(c) => acc.add(c.as_ref())?,
            None => excluded += 1,
        }
    }
    if acc.count == 0 {
        return Err(Error::AllDiverged {
            trials: curves.len(),
        });
    }
    Ok(TrialAverage {
        included: acc.count,
        mean: acc.mean(),
        excluded,
    })
}

/// Running pointwise sum of curves added in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct CurveAccumulator {
    sums: Vec<f64>,
    count: usize,
}

impl CurveAccumulator {
    pub fn add(&mut self, curve: &[f64]) -> Result<()> {
        if self.count == 0 {
            self.sums = curve.to_vec();
        } else {
            if curve.len() != self.sums.len() {
                return Err(Error::config(format!(
                    "trial curve length {} differs from {}",
                    curve.len(),
                    self.sums.len()
                )));
            }
            self.sums.iter_mut().zip(curve).for_each(|(s, c)| *s += c);
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sums.iter().map(|s| s / n).collect()
    }
}
