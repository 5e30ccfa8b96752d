//! Switched step-size engine.
//!
//! Each candidate step-size `μ_k` carries a diagonal weight-deviation
//! covariance trend `P̄_k`. Every tick all trends are advanced with the
//! current filtered reference, error power and scaling factor, and the
//! candidate with the smallest predicted MSD `J_k = sum(P̄_k)` drives the
//! weight update.
//!
//! [`FullMsdOracle`] keeps the full `L×L` covariance recursion and exists
//! only to check the diagonal approximation.

use crate::analysis::ms_stability_bound;
use crate::error::{Error, Result};
use crate::fxnlms::StepSchedule;

/// Default initial trend value `ρ`.
pub const DEFAULT_RHO: f64 = 1.0;

/// Range of `ρ` accepted without a warning.
pub const RHO_QUIET_RANGE: (f64, f64) = (0.1, 100.0);

/// Advance one diagonal MSD trend in place.
///
/// `g = 1` gives the non-robust recursion. `rf` is `x_f ⊙ x_f` and
/// `norm2` is `||x_f||²`, which must be positive.
pub fn msd_trend_step(pbar: &mut [f64], mu: f64, rf: &[f64], norm2: f64, sigma_e2: f64, g: f64) -> Result<()> {
    debug_assert_eq!(pbar.len(), rf.len());
    let mg = mu * g;
    let lin = 2.0 * mg / norm2;
    let quad = mg * mg / (norm2 * norm2);
    let coupled: f64 = rf.iter().zip(pbar.iter()).map(|(r, p)| r * p).sum();
    for (p, &r) in pbar.iter_mut().zip(rf) {
        *p = (1.0 - lin * r) * *p
            + quad * sigma_e2 * r
            + 2.0 * quad * r * *p * r
            + quad * r * coupled;
    }
    if pbar.iter().any(|p| !p.is_finite()) {
        return Err(Error::TrendFault(format!(
            "non-finite diagonal trend (mu={mu}, g={g}, sigma_e2={sigma_e2})"
        )));
    }
    Ok(())
}

/// `J = sum(P̄)`.
pub fn msd_trend_value(pbar: &[f64]) -> f64 {
    pbar.iter().sum()
}

/// Pick the candidate with the smallest trend. Ties go to the smaller
/// step-size, i.e. the larger index.
pub fn select_step(trends: &[f64], candidates: &[f64]) -> Result<(f64, usize)> {
    if trends.is_empty() || trends.len() != candidates.len() {
        return Err(Error::TrendFault(format!(
            "{} trends for {} candidates",
            trends.len(),
            candidates.len()
        )));
    }
    if let Some(k) = trends.iter().position(|j| !j.is_finite()) {
        return Err(Error::TrendFault(format!("trend J_{} is not finite", k + 1)));
    }
    let mut best = 0;
    for (k, &j) in trends.iter().enumerate().skip(1) {
        if j <= trends[best] {
            best = k;
        }
    }
    Ok((candidates[best], best))
}

/// Validate a candidate step-size list for a filter of `taps` taps.
pub fn validate_candidates(candidates: &[f64], taps: usize) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::config("at least one candidate step-size is required"));
    }
    let bound = ms_stability_bound(taps)?;
    for &mu in candidates {
        if !(mu > 0.0 && mu < bound) {
            return Err(Error::config(format!(
                "step-size {mu} outside the stability region (0, {bound:.6}) for L={taps}"
            )));
        }
    }
    if candidates.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("candidate step-sizes must be strictly decreasing"));
    }
    Ok(())
}

/// Geometric candidate list `top, top·r, top·r², …`.
pub fn geometric_candidates(top: f64, ratio: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut mu = top;
    for _ in 0..count {
        out.push(mu);
        mu *= ratio;
    }
    out
}

/// Per-trial switched step-size state.
#[derive(Debug, Clone)]
pub struct SssState {
    candidates: Vec<f64>,
    pbar: Vec<Vec<f64>>,
    trends: Vec<f64>,
    rho: f64,
    selected: usize,
    clamp: bool,
    epsilon: f64,
    rf: Vec<f64>,
}

impl SssState {
    pub fn new(candidates: Vec<f64>, taps: usize, rho: f64) -> Result<Self> {
        validate_candidates(&candidates, taps)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::config(format!("initial trend rho must be > 0, got {rho}")));
        }
        if rho < RHO_QUIET_RANGE.0 || rho > RHO_QUIET_RANGE.1 {
            log::warn!("rho={rho} is outside [0.1, 100]; step selection may start poorly");
        }
        let k = candidates.len();
        let pbar = vec![vec![rho; taps]; k];
        let trends: Vec<f64> = pbar.iter().map(|p| msd_trend_value(p)).collect();
        let (_, selected) = select_step(&trends, &candidates)?;
        Ok(SssState {
            candidates,
            pbar,
            trends,
            rho,
            selected,
            clamp: false,
            epsilon: crate::fxnlms::DEFAULT_EPSILON,
            rf: vec![0.0; taps],
        })
    }

    /// Clamp trend elements at zero after each update.
    pub fn with_clamping(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    /// Ticks with `||x_f||² <= epsilon` skip the trend update.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn trends(&self) -> &[f64] {
        &self.trends
    }

    pub fn diagonal(&self, k: usize) -> &[f64] {
        &self.pbar[k]
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn selected(&self) -> usize {
        self.selected
    }

    pub fn selected_mu(&self) -> f64 {
        self.candidates[self.selected]
    }

    /// Advance every candidate's trend and reselect the step-size.
    pub fn iterate(&mut self, xf: &[f64], sigma_e2: f64, g: f64) -> Result<f64> {
        let norm2: f64 = xf.iter().map(|v| v * v).sum();
        self.iterate_with_norm(xf, norm2, sigma_e2, g)
    }

    fn iterate_with_norm(&mut self, xf: &[f64], norm2: f64, sigma_e2: f64, g: f64) -> Result<f64> {
        if norm2 <= self.epsilon {
            return Ok(self.selected_mu());
        }
        for (r, x) in self.rf.iter_mut().zip(xf) {
            *r = x * x;
        }
        for (k, pbar) in self.pbar.iter_mut().enumerate() {
            msd_trend_step(pbar, self.candidates[k], &self.rf, norm2, sigma_e2, g)?;
            if self.clamp {
                pbar.iter_mut().for_each(|p| *p = p.max(0.0));
            }
            self.trends[k] = msd_trend_value(pbar);
        }
        let (mu, idx) = select_step(&self.trends, &self.candidates)?;
        self.selected = idx;
        Ok(mu)
    }
}

impl StepSchedule for SssState {
    fn step_size(&mut self, xf: &[f64], xf_norm2: f64, sigma_e2: f64, g: f64) -> Result<f64> {
        self.iterate_with_norm(xf, xf_norm2, sigma_e2, g)
    }
}

/// Full-matrix covariance recursion, row-major `L×L`.
pub fn full_matrix_msd_step(
    p: &mut [f64],
    taps: usize,
    mu: f64,
    xf: &[f64],
    sigma_e2: f64,
    g: f64,
) -> Result<()> {
    debug_assert_eq!(p.len(), taps * taps);
    let norm2: f64 = xf.iter().map(|v| v * v).sum();
    let mg = mu * g;
    let lin = 2.0 * mg / norm2;
    let quad = mg * mg / (norm2 * norm2);
    // R_f = x xᵀ, so R_f P = x (xᵀP) and R_f P R_f = (xᵀPx) x xᵀ.
    let mut xtp = vec![0.0; taps];
    for (j, slot) in xtp.iter_mut().enumerate() {
        *slot = (0..taps).map(|i| xf[i] * p[i * taps + j]).sum();
    }
    let xpx: f64 = xtp.iter().zip(xf).map(|(a, b)| a * b).sum();
    // Tr(R_f P) = xᵀ P x as well.
    let trace = xpx;
    for i in 0..taps {
        for j in 0..taps {
            let rij = xf[i] * xf[j];
            let idx = i * taps + j;
            p[idx] = p[idx] - lin * xf[i] * xtp[j]
                + quad * sigma_e2 * rij
                + 2.0 * quad * xpx * rij
                + quad * rij * trace;
        }
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::TrendFault("non-finite full-matrix trend".into()));
    }
    Ok(())
}

/// Full covariance trends for every candidate, initialized to `ρ·I`.
#[derive(Debug, Clone)]
pub struct FullMsdOracle {
    candidates: Vec<f64>,
    taps: usize,
    matrices: Vec<Vec<f64>>,
    trends: Vec<f64>,
    selected: usize,
    epsilon: f64,
}

impl FullMsdOracle {
    pub fn new(candidates: Vec<f64>, taps: usize, rho: f64) -> Result<Self> {
        validate_candidates(&candidates, taps)?;
        let mut eye = vec![0.0; taps * taps];
        for i in 0..taps {
            eye[i * taps + i] = rho;
        }
        let matrices = vec![eye; candidates.len()];
        let trends = vec![rho * taps as f64; candidates.len()];
        let (_, selected) = select_step(&trends, &candidates)?;
        Ok(FullMsdOracle {
            candidates,
            taps,
            matrices,
            trends,
            selected,
            epsilon: crate::fxnlms::DEFAULT_EPSILON,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn trends(&self) -> &[f64] {
        &self.trends
    }

    pub fn matrix(&self, k: usize) -> &[f64] {
        &self.matrices[k]
    }

    pub fn selected(&self) -> usize {
        self.selected
    }

    pub fn iterate(&mut self, xf: &[f64], sigma_e2: f64, g: f64) -> Result<usize> {
        let norm2: f64 = xf.iter().map(|v| v * v).sum();
        if norm2 <= self.epsilon {
            return Ok(self.selected);
        }
        for (k, p) in self.matrices.iter_mut().enumerate() {
            full_matrix_msd_step(p, self.taps, self.candidates[k], xf, sigma_e2, g)?;
            self.trends[k] = (0..self.taps).map(|i| p[i * self.taps + i]).sum();
        }
        self.selected = select_step(&self.trends, &self.candidates)?.1;
        Ok(self.selected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{gen_white, RngStream};
    use proptest::prelude::*;

    fn step_vec(pbar: &mut [f64], mu: f64, xf: &[f64], sigma_e2: f64, g: f64) {
        let rf: Vec<f64> = xf.iter().map(|x| x * x).collect();
        let n2: f64 = rf.iter().sum();
        msd_trend_step(pbar, mu, &rf, n2, sigma_e2, g).unwrap();
    }

    #[test]
    fn single_tap_hand_example() {
        let mut p = [1.0];
        step_vec(&mut p, 0.5, &[1.0], 1.0, 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15);

        let mut m = [1.0];
        full_matrix_msd_step(&mut m, 1, 0.5, &[1.0], 1.0, 1.0).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_step_or_zero_scaling_freezes_trend() {
        let xf = [0.3, -1.2, 0.5];
        let mut p = [0.7, 1.1, 2.0];
        step_vec(&mut p, 0.0, &xf, 0.4, 1.0);
        assert_eq!(p, [0.7, 1.1, 2.0]);
        step_vec(&mut p, 0.6, &xf, 0.4, 0.0);
        assert_eq!(p, [0.7, 1.1, 2.0]);

        let mut m = vec![1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0];
        let before = m.clone();
        full_matrix_msd_step(&mut m, 3, 0.0, &xf, 0.4, 1.0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn trend_value_cases() {
        assert_eq!(msd_trend_value(&[1.0; 16]), 16.0);
        assert_eq!(msd_trend_value(&[0.0; 4]), 0.0);
        let v = gen_white(32, 0.0, 1.0, &mut RngStream::new(8, 0)).unwrap();
        let mut acc = 0.0;
        for x in &v {
            acc += x;
        }
        assert_eq!(msd_trend_value(&v), acc);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(
            select_step(&[0.5, 0.3, 0.4], &[0.6, 0.3, 0.15]).unwrap(),
            (0.3, 1)
        );
        assert_eq!(select_step(&[9.0], &[0.2]).unwrap(), (0.2, 0));
        assert_eq!(
            select_step(&[1.0, 1.0, 1.0], &[0.6, 0.3, 0.15]).unwrap(),
            (0.15, 2)
        );
        assert!(select_step(&[1.0, f64::NAN], &[0.6, 0.3]).is_err());
        assert!(select_step(&[], &[]).is_err());
    }

    #[test]
    fn candidate_validation() {
        assert!(validate_candidates(&[0.6, 0.3, 0.15, 0.075], 16).is_ok());
        assert!(validate_candidates(&[2.0], 16).is_err());
        assert!(validate_candidates(&[0.3, 0.6], 16).is_err());
        assert!(validate_candidates(&[0.3, 0.3], 16).is_err());
        assert!(validate_candidates(&[], 16).is_err());
        assert_eq!(geometric_candidates(0.6, 0.5, 4), vec![0.6, 0.3, 0.15, 0.075]);
    }

    #[test]
    fn initial_state() {
        let s = SssState::new(vec![0.6, 0.3, 0.15, 0.075], 16, 1.0).unwrap();
        assert_eq!(s.trends(), &[16.0; 4]);
        assert_eq!(s.selected(), 3);
        assert!(SssState::new(vec![0.6], 16, 0.0).is_err());
    }

    #[test]
    fn silent_reference_keeps_selection() {
        let mut s = SssState::new(vec![0.6, 0.3], 4, 1.0).unwrap();
        let before = s.trends().to_vec();
        let mu = s.iterate(&[0.0; 4], 1.0, 1.0).unwrap();
        assert_eq!(mu, 0.3);
        assert_eq!(s.trends(), &before[..]);
    }

    #[test]
    fn large_trend_prefers_large_step() {
        // Far from convergence the big step shrinks the trend fastest.
        let mut s = SssState::new(vec![0.6, 0.3, 0.15, 0.075], 16, 1.0).unwrap();
        let xf = gen_white(16, 0.0, 1.0, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(s.iterate(&xf, 1e-3, 1.0).unwrap(), 0.6);
    }

    #[test]
    fn clamping_is_inert_on_valid_inputs() {
        // Each diagonal coefficient is 1 - 2a mu + 3a² mu² > 0, so clamping
        // only ever catches round-off.
        let mut plain = SssState::new(vec![0.9, 0.3], 2, 1.0).unwrap();
        let mut clamped = plain.clone().with_clamping(true);
        let xs = gen_white(400, 0.0, 1.0, &mut RngStream::new(5, 0)).unwrap();
        for w in xs.windows(2) {
            plain.iterate(w, 0.0, 1.0).unwrap();
            clamped.iterate(w, 0.0, 1.0).unwrap();
            assert!(clamped.diagonal(0).iter().all(|&p| p >= 0.0));
        }
        assert_eq!(plain.trends(), clamped.trends());
    }

    #[test]
    fn single_tap_oracle_agreement() {
        let mut rng = RngStream::new(42, 0);
        let xs = gen_white(10_000, 0.0, 1.0, &mut rng).unwrap();
        let es = gen_white(10_000, 0.0, 0.5, &mut rng).unwrap();
        let cands = vec![0.6, 0.3, 0.15];
        let mut vec_state = SssState::new(cands.clone(), 1, 1.0).unwrap();
        let mut oracle = FullMsdOracle::new(cands, 1, 1.0).unwrap();
        for (x, e) in xs.iter().zip(&es) {
            let s2 = e * e;
            vec_state.iterate(&[*x], s2, 1.0).unwrap();
            oracle.iterate(&[*x], s2, 1.0).unwrap();
            for (a, b) in vec_state.trends().iter().zip(oracle.trends()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn trends_stay_consistent_and_nonnegative(
            xs in prop::collection::vec(-4.0f64..4.0, 20..200),
            s2 in 0.0f64..5.0,
            g in 0.0f64..1.0,
        ) {
            let mut s = SssState::new(vec![0.5, 0.25, 0.1], 8, 1.0).unwrap();
            let mut line = crate::paths::DelayLine::new(8);
            for &x in &xs {
                line.push(x);
                s.iterate(line.recent(), s2, g).unwrap();
                for k in 0..3 {
                    prop_assert_eq!(s.trends()[k], msd_trend_value(s.diagonal(k)));
                    prop_assert!(s.diagonal(k).iter().all(|&p| p >= 0.0));
                }
            }
        }

        #[test]
        fn unit_scaling_matches_non_robust(
            xs in prop::collection::vec(-4.0f64..4.0, 16..64),
            s2 in 0.0f64..5.0,
        ) {
            // g = 1 must reproduce the non-robust recursion bit for bit.
            let mut a = vec![1.0; 4];
            let mut b = vec![1.0; 4];
            for w in xs.windows(4) {
                let rf: Vec<f64> = w.iter().map(|x| x * x).collect();
                let n2: f64 = rf.iter().sum();
                if n2 == 0.0 { continue; }
                msd_trend_step(&mut a, 0.3, &rf, n2, s2, 1.0).unwrap();
                // Written-out non-robust recursion.
                let s: f64 = rf.iter().zip(&b).map(|(r, p)| r * p).sum();
                let lin = 2.0 * 0.3 / n2;
                let quad = 0.3 * 0.3 / (n2 * n2);
                for (p, &r) in b.iter_mut().zip(&rf) {
                    *p = (1.0 - lin * r) * *p + quad * s2 * r + 2.0 * quad * r * *p * r + quad * r * s;
                }
                prop_assert_eq!(&a, &b);
            }
        }
    }
}
