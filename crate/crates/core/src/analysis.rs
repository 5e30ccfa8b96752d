//! Closed-form convergence theory for FxNLMS under a white filtered
//! reference, plus a sample estimate of the mean-convergence bound.

use std::fmt;

use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 100;
const POWER_TOLERANCE: f64 = 1e-10;

fn check_taps(taps: usize) -> Result<f64> {
    if taps == 0 {
        Err(Error::Domain("filter length must be >= 1".into()))
    } else {
        Ok(taps as f64)
    }
}

/// MSD convergence factor `h = 1 - 2μ/L + μ²(L+2)/L²`.
pub fn convergence_factor(mu: f64, taps: usize) -> Result<f64> {
    let l = check_taps(taps)?;
    Ok(1.0 - 2.0 * mu / l + mu * mu * (l + 2.0) / (l * l))
}

/// Upper end of the mean-square stable step-size range, `2L/(L+2)`.
pub fn ms_stability_bound(taps: usize) -> Result<f64> {
    let l = check_taps(taps)?;
    Ok(2.0 * l / (l + 2.0))
}

/// Step-size of fastest convergence, `L/(L+2)`.
pub fn optimal_step(taps: usize) -> Result<f64> {
    let l = check_taps(taps)?;
    Ok(l / (l + 2.0))
}

/// Steady-state MSD `μσ²_e / (σ²_f [2L - μ(L+2)])`.
pub fn theoretical_steady_msd(mu: f64, taps: usize, sigma_e2: f64, sigma_f2: f64) -> Result<f64> {
    let l = check_taps(taps)?;
    let bound = ms_stability_bound(taps)?;
    if !(mu > 0.0 && mu < bound) {
        return Err(Error::Domain(format!(
            "step-size {mu} outside the stability region (0, {bound:.6}) for L={taps}"
        )));
    }
    if sigma_f2.is_nan() || sigma_f2 <= 0.0 {
        return Err(Error::Domain(format!("filtered-input variance must be > 0, got {sigma_f2}")));
    }
    if sigma_e2.is_nan() || sigma_e2 < 0.0 {
        return Err(Error::Domain(format!("error power must be >= 0, got {sigma_e2}")));
    }
    Ok(mu * sigma_e2 / (sigma_f2 * (2.0 * l - mu * (l + 2.0))))
}

/// Sample estimate of `2 / λ_max(E{x_f x_fᵀ / ||x_f||²})`.
///
/// All-zero vectors carry no direction and are skipped; if nothing is
/// left the estimate is undefined.
pub fn estimate_mean_bound<V: AsRef<[f64]>>(samples: &[V]) -> Result<f64> {
    let taps = samples
        .first()
        .map(|s| s.as_ref().len())
        .ok_or_else(|| Error::Domain("no filtered-reference samples".into()))?;
    if taps == 0 {
        return Err(Error::Domain("zero-length filtered-reference vectors".into()));
    }
    let mut lambda = vec![0.0; taps * taps];
    let mut used = 0usize;
    for s in samples {
        let x = s.as_ref();
        if x.len() != taps {
            return Err(Error::Domain("filtered-reference vectors differ in length".into()));
        }
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 == 0.0 {
            continue;
        }
        used += 1;
        for i in 0..taps {
            for j in 0..taps {
                lambda[i * taps + j] += x[i] * x[j] / n2;
            }
        }
    }
    if used == 0 {
        return Err(Error::Domain("all filtered-reference samples are zero".into()));
    }
    lambda.iter_mut().for_each(|v| *v /= used as f64);
    let lmax = largest_eigenvalue(&lambda, taps);
    Ok(2.0 / lmax)
}

/// Power iteration on a symmetric PSD matrix (row-major).
fn largest_eigenvalue(m: &[f64], n: usize) -> f64 {
    // Deterministic start with no zero components.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] = (0..n).map(|j| m[i * n + j] * v[j]).sum();
        }
        let rayleigh: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
        if normalize(&mut next) == 0.0 {
            return 0.0;
        }
        v = next;
        let converged = (rayleigh - estimate).abs() <= POWER_TOLERANCE * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            break;
        }
    }
    estimate
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Printable summary of the closed-form quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryReport {
    pub taps: usize,
    pub mu: f64,
    pub convergence_factor: f64,
    pub stability_bound: f64,
    pub optimal_step: f64,
    pub optimal_convergence_factor: f64,
    pub steady_state_msd: f64,
}

pub fn theory_report(taps: usize, mu: f64, sigma_e2: f64, sigma_f2: f64) -> Result<TheoryReport> {
    Ok(TheoryReport {
        taps,
        mu,
        convergence_factor: convergence_factor(mu, taps)?,
        stability_bound: ms_stability_bound(taps)?,
        optimal_step: optimal_step(taps)?,
        optimal_convergence_factor: convergence_factor(optimal_step(taps)?, taps)?,
        steady_state_msd: theoretical_steady_msd(mu, taps, sigma_e2, sigma_f2)?,
    })
}

impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "L        = {}", self.taps)?;
        writeln!(f, "mu       = {}", sig6(self.mu))?;
        writeln!(f, "h        = {}", sig6(self.convergence_factor))?;
        writeln!(f, "bound    = {}", sig6(self.stability_bound))?;
        writeln!(f, "mu_opt   = {}", sig6(self.optimal_step))?;
        writeln!(f, "h_opt    = {}", sig6(self.optimal_convergence_factor))?;
        write!(f, "J_inf    = {}", sig6(self.steady_state_msd))
    }
}

/// `%g`-style formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.5e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let e: i32 = e.parse().unwrap_or(0);
        let sign = if e < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mant), sign, e.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
