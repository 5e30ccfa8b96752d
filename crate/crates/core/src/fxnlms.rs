//! Per-sample filtered-x NLMS control loop.
//!
//! One call to [`anc_step`] runs a full tick of the single-channel
//! feedforward plant: disturbance through the primary path, controller
//! output through the secondary path, residual error at the error
//! microphone, filtered reference through `Ŝ(z)`, error-power tracking,
//! robust scaling and the normalized weight update.

use crate::error::{Error, Result};
use crate::paths::{dot, DelayLine, FirFilter, FirPath};

/// Default guard added to `||x_f||²` in the normalized update.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Weight-norm ceiling beyond which a trial is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Below this error magnitude the EHCF factor uses its analytic limit.
const EHCF_SMALL_ERROR: f64 = 1e-8;

/// Robust scaling applied to the error in the weight update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScalingKind {
    /// Plain FxNLMS, `g = 1`.
    #[default]
    Unit,
    /// Maximum correntropy criterion with Gaussian kernel width `sigma`.
    Mcc { sigma: f64 },
    /// Exponential hyperbolic cosine function.
    Ehcf { eta: f64, theta: f64 },
}

impl ScalingKind {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            ScalingKind::Unit => Ok(()),
            ScalingKind::Mcc { sigma } if ok(sigma) => Ok(()),
            ScalingKind::Mcc { sigma } => Err(Error::config(format!(
                "MCC kernel width must be > 0, got {sigma}"
            ))),
            ScalingKind::Ehcf { eta, theta } if ok(eta) && ok(theta) => Ok(()),
            ScalingKind::Ehcf { eta, theta } => Err(Error::config(format!(
                "EHCF parameters must be > 0, got eta={eta} theta={theta}"
            ))),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, ScalingKind::Unit)
    }

    pub fn factor(&self, e: f64) -> f64 {
        scaling_factor(*self, e)
    }
}

/// Scaling factor `g[e]`.
///
/// EHCF is evaluated in the log domain so very large errors give an
/// exact zero instead of `0 · ∞`.
pub fn scaling_factor(kind: ScalingKind, e: f64) -> f64 {
    match kind {
        ScalingKind::Unit => 1.0,
        ScalingKind::Mcc { sigma } => (-(e * e) / (2.0 * sigma * sigma)).exp(),
        ScalingKind::Ehcf { eta, theta } => {
            let mag = e.abs();
            if mag < EHCF_SMALL_ERROR {
                return eta * (-1.0f64).exp();
            }
            if !mag.is_finite() {
                return 0.0;
            }
            let a = eta * mag;
            // ln cosh(a) and ln sinh(a) without overflow for large a.
            let ln_cosh = a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
            let ln_sinh = a + (-(-2.0 * a).exp_m1()).ln() - std::f64::consts::LN_2;
            let cosh_pow = (theta * ln_cosh).exp();
            (-cosh_pow + ln_sinh + (theta - 1.0) * ln_cosh - mag.ln()).exp()
        }
    }
}

/// Residual at the error microphone, `e = d - d̂ + v`.
pub fn residual_error(d: f64, d_hat: f64, v: f64) -> f64 {
    d - d_hat + v
}

/// Exponentially weighted error power `σ²_e ← λσ²_e + (1-λ)e²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPower {
    lambda: f64,
    value: f64,
    primed: bool,
}

impl ErrorPower {
    /// Tracker whose first observation initializes the estimate to `e²`.
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(ErrorPower {
            lambda,
            value: 0.0,
            primed: false,
        })
    }

    /// Tracker running the plain recursion from `initial`.
    pub fn starting_at(lambda: f64, initial: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(initial >= 0.0 && initial.is_finite()) {
            return Err(Error::config(format!("initial error power must be >= 0, got {initial}")));
        }
        Ok(ErrorPower {
            lambda,
            value: initial,
            primed: true,
        })
    }

    pub fn update(&mut self, e: f64) -> f64 {
        let e2 = e * e;
        self.value = if self.primed {
            self.lambda * self.value + (1.0 - self.lambda) * e2
        } else {
            self.primed = true;
            e2
        };
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("forgetting factor must lie in (0, 1), got {lambda}")))
    }
}

/// The physical plant: primary path from the noise source to the error
/// microphone and secondary path from the loudspeaker.
#[derive(Debug, Clone)]
pub struct Plant {
    primary: FirFilter,
    secondary: FirFilter,
}

impl Plant {
    pub fn new(primary: FirPath, secondary: FirPath) -> Self {
        Plant {
            primary: FirFilter::new(primary),
            secondary: FirFilter::new(secondary),
        }
    }

    pub fn primary(&self) -> &FirPath {
        self.primary.path()
    }

    pub fn secondary(&self) -> &FirPath {
        self.secondary.path()
    }
}

/// Adaptive controller `W(z)` and the signal histories it adapts on.
#[derive(Debug, Clone)]
pub struct ControllerState {
    weights: Vec<f64>,
    reference: DelayLine,
    filtered: DelayLine,
    estimate: FirFilter,
    error_power: ErrorPower,
    epsilon: f64,
    iteration: usize,
}

impl ControllerState {
    pub fn new(taps: usize, secondary_estimate: FirPath, lambda: f64, epsilon: f64) -> Result<Self> {
        if taps == 0 {
            return Err(Error::config("controller needs at least one tap"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("normalization guard must be > 0, got {epsilon}")));
        }
        Ok(ControllerState {
            weights: vec![0.0; taps],
            reference: DelayLine::new(taps),
            filtered: DelayLine::new(taps),
            estimate: FirFilter::new(secondary_estimate),
            error_power: ErrorPower::new(lambda)?,
            epsilon,
            iteration: 0,
        })
    }

    pub fn taps(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Filtered-reference vector `x_f`, most recent first.
    pub fn filtered_reference(&self) -> &[f64] {
        self.filtered.recent()
    }

    pub fn reference(&self) -> &[f64] {
        self.reference.recent()
    }

    pub fn error_power(&self) -> f64 {
        self.error_power.value()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.weights.len());
        self.weights.copy_from_slice(w);
    }

    pub fn push_reference(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite { stage: "reference input" });
        }
        self.reference.push(x);
        Ok(())
    }

    /// `x_f,m = Σ ŝ_i x(m-i)`; also pushed into the `x_f` history.
    pub fn filtered_reference_step(&mut self, x: f64) -> Result<f64> {
        let xf = self.estimate.step(x)?;
        self.filtered.push(xf);
        Ok(xf)
    }

    /// `y = xᵀw` over the current reference history.
    pub fn controller_output(&self) -> f64 {
        dot(self.reference.recent(), &self.weights)
    }

    pub fn update_error_power(&mut self, e: f64) -> f64 {
        self.error_power.update(e)
    }

    /// `w ← w + μ·g·e·x_f / (||x_f||² + ε)`.
    pub fn weight_update(&mut self, e: f64, mu: f64, g: f64) -> Result<()> {
        let xf = self.filtered.recent();
        let norm2: f64 = xf.iter().map(|v| v * v).sum();
        let coef = mu * g * e / (norm2 + self.epsilon);
        for (w, x) in self.weights.iter_mut().zip(xf) {
            *w += coef * x;
        }
        let wnorm = self.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if !wnorm.is_finite() || wnorm > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                iteration: self.iteration,
                norm: wnorm,
            });
        }
        Ok(())
    }
}

/// Chooses the step-size applied on each tick.
pub trait StepSchedule {
    /// Called once per tick after the error and filtered reference are
    /// known and before the weight update.
    fn step_size(&mut self, xf: &[f64], xf_norm2: f64, sigma_e2: f64, g: f64) -> Result<f64>;
}

/// Constant step-size (standard FxNLMS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedStep(pub f64);

impl StepSchedule for FixedStep {
    fn step_size(&mut self, _xf: &[f64], _n2: f64, _s: f64, _g: f64) -> Result<f64> {
        Ok(self.0)
    }
}

/// Everything observed during one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub d: f64,
    pub y: f64,
    pub d_hat: f64,
    pub e: f64,
    pub xf: f64,
    pub xf_norm2: f64,
    pub sigma_e2: f64,
    pub g: f64,
    pub mu: f64,
}

/// One simulation tick.
pub fn anc_step<S: StepSchedule + ?Sized>(
    plant: &mut Plant,
    state: &mut ControllerState,
    x: f64,
    v: f64,
    schedule: &mut S,
    kind: ScalingKind,
) -> Result<Tick> {
    let d = plant.primary.step(x)?;
    state.push_reference(x)?;
    let y = state.controller_output();
    let d_hat = plant.secondary.step(y)?;
    let e = residual_error(d, d_hat, v);
    if !e.is_finite() {
        return Err(Error::NonFinite { stage: "residual error" });
    }
    let xf = state.filtered_reference_step(x)?;
    let sigma_e2 = state.update_error_power(e);
    let g = kind.factor(e);
    let xf_norm2: f64 = state.filtered_reference().iter().map(|v| v * v).sum();
    let mu = schedule.step_size(state.filtered_reference(), xf_norm2, sigma_e2, g)?;
    state.weight_update(e, mu, g)?;
    state.iteration += 1;
    Ok(Tick {
        d,
        y,
        d_hat,
        e,
        xf,
        xf_norm2,
        sigma_e2,
        g,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{gen_white, RngStream};
    use crate::paths::{PathPreset, PRIMARY_PATH};
    use proptest::prelude::*;

    fn controller(taps: usize, est: FirPath) -> ControllerState {
        ControllerState::new(taps, est, 0.8, DEFAULT_EPSILON).unwrap()
    }

    #[test]
    fn identity_estimate_copies_reference() {
        let mut c = controller(4, FirPath::unit_impulse());
        for x in [0.3, -1.0, 2.5] {
            assert_eq!(c.filtered_reference_step(x).unwrap(), x);
        }
    }

    #[test]
    fn filtered_reference_impulse_gives_secondary_coeffs() {
        let mut c = controller(4, FirPath::preset(PathPreset::Secondary));
        let out: Vec<f64> = [1.0, 0.0, 0.0, 0.0, 0.0]
            .iter()
            .map(|&x| c.filtered_reference_step(x).unwrap())
            .collect();
        assert_eq!(out, vec![0.01, -0.01, 0.9, 0.02, -0.5]);
    }

    #[test]
    fn filtered_reference_matches_batch() {
        let x = gen_white(200, 0.0, 1.0, &mut RngStream::new(1, 0)).unwrap();
        let s = FirPath::new(vec![0.3, -0.7, 0.2, 0.05]).unwrap();
        let mut c = controller(8, s.clone());
        let streamed: Vec<f64> = x.iter().map(|&v| c.filtered_reference_step(v).unwrap()).collect();
        assert_eq!(streamed, s.filter(&x));
    }

    #[test]
    fn controller_output_cases() {
        let mut c = controller(3, FirPath::unit_impulse());
        c.push_reference(1.0).unwrap();
        c.push_reference(2.0).unwrap();
        assert_eq!(c.controller_output(), 0.0);

        let mut c = controller(1, FirPath::unit_impulse());
        c.set_weights(&[2.0]);
        c.push_reference(3.0).unwrap();
        assert_eq!(c.controller_output(), 6.0);
    }

    #[test]
    fn controller_output_matches_loop() {
        let vals = gen_white(40, 0.0, 1.0, &mut RngStream::new(2, 0)).unwrap();
        let mut c = controller(16, FirPath::unit_impulse());
        c.set_weights(&vals[..16]);
        for &x in &vals[16..40] {
            c.push_reference(x).unwrap();
        }
        let mut expected = 0.0;
        for i in 0..16 {
            expected += vals[39 - i] * vals[i];
        }
        assert!((c.controller_output() - expected).abs() < 1e-12);
    }

    #[test]
    fn residual_error_arithmetic() {
        assert_eq!(residual_error(0.4, 0.4, 0.0), 0.0);
        assert_eq!(residual_error(1.0, 0.25, 0.0), 0.75);
        assert_eq!(residual_error(2.0, 2.0, -0.3), -0.3);
    }

    #[test]
    fn scaling_factor_values() {
        assert_eq!(scaling_factor(ScalingKind::Unit, 123.0), 1.0);
        let mcc = ScalingKind::Mcc { sigma: 1.0 };
        assert_eq!(scaling_factor(mcc, 0.0), 1.0);
        assert!((scaling_factor(mcc, 1.0) - 0.6065306597126334).abs() < 1e-15);
        let ehcf = ScalingKind::Ehcf { eta: 1.0, theta: 1.0 };
        assert!((scaling_factor(ehcf, 0.0) - 0.36787944117144233).abs() < 1e-15);
        // Continuity across the small-error switch.
        assert!((scaling_factor(ehcf, 1e-7) - 0.36787944117144233).abs() < 1e-9);
        // Direct formula at a moderate error.
        let e = 0.7f64;
        let c = e.cosh();
        let direct = (-c).exp() * e.sinh() / e;
        assert!((scaling_factor(ehcf, e) - direct).abs() < 1e-14);
        let ehcf2 = ScalingKind::Ehcf { eta: 0.5, theta: 2.0 };
        let a = 0.5 * e;
        let direct2 = (-a.cosh().powi(2)).exp() * a.sinh() * a.cosh() / e;
        assert!((scaling_factor(ehcf2, e) - direct2).abs() < 1e-14);
        // Overflow-prone magnitudes collapse to zero instead of NaN.
        assert_eq!(scaling_factor(ehcf, 1e6), 0.0);
        assert_eq!(scaling_factor(ehcf, f64::INFINITY), 0.0);
    }

    #[test]
    fn scaling_validation() {
        assert!(ScalingKind::Mcc { sigma: 0.0 }.validate().is_err());
        assert!(ScalingKind::Ehcf { eta: 1.0, theta: -1.0 }.validate().is_err());
        assert!(ScalingKind::Ehcf { eta: 1.0, theta: 1.0 }.validate().is_ok());
    }

    #[test]
    fn zero_error_or_step_leaves_weights() {
        let mut c = controller(2, FirPath::unit_impulse());
        c.set_weights(&[0.1, -0.2]);
        c.filtered_reference_step(1.0).unwrap();
        c.weight_update(0.0, 0.5, 1.0).unwrap();
        assert_eq!(c.weights(), &[0.1, -0.2]);
        c.weight_update(1.0, 0.0, 1.0).unwrap();
        assert_eq!(c.weights(), &[0.1, -0.2]);
    }

    #[test]
    fn single_tap_worked_example() {
        let mut plant = Plant::new(FirPath::new(vec![0.5]).unwrap(), FirPath::unit_impulse());
        let mut c = controller(1, FirPath::unit_impulse());
        let tick = anc_step(&mut plant, &mut c, 2.0, 0.0, &mut FixedStep(0.5), ScalingKind::Unit)
            .unwrap();
        assert_eq!(tick.d, 1.0);
        assert_eq!(tick.y, 0.0);
        assert_eq!(tick.e, 1.0);
        assert!((c.weights()[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn error_power_recursion() {
        let mut p = ErrorPower::starting_at(0.8, 0.0).unwrap();
        assert!((p.update(1.0) - 0.2).abs() < 1e-15);

        let (lambda, c) = (0.8f64, 1.7f64);
        let mut p = ErrorPower::starting_at(lambda, 0.0).unwrap();
        for m in 0..50 {
            let got = p.update(c);
            let closed = c * c * (1.0 - lambda.powi(m + 1));
            assert!((got - closed).abs() < 1e-12, "m={m}");
        }

        let mut p = ErrorPower::starting_at(lambda, 3.0).unwrap();
        for m in 1..30 {
            let got = p.update(0.0);
            assert!((got - 3.0 * lambda.powi(m)).abs() < 1e-12);
        }

        let mut p = ErrorPower::new(0.8).unwrap();
        assert_eq!(p.update(2.0), 4.0);
        assert!(ErrorPower::new(1.0).is_err());
    }

    #[test]
    fn open_loop_error_is_filtered_reference_plus_noise() {
        let x = gen_white(300, 0.0, 1.0, &mut RngStream::new(4, 0)).unwrap();
        let v = gen_white(300, 0.0, 0.01, &mut RngStream::new(4, 1)).unwrap();
        let p = FirPath::preset(PathPreset::Primary);
        let expected = p.filter(&x);
        let mut plant = Plant::new(p, FirPath::preset(PathPreset::Secondary));
        let mut c = controller(16, FirPath::preset(PathPreset::Secondary));
        for n in 0..300 {
            let t = anc_step(&mut plant, &mut c, x[n], v[n], &mut FixedStep(0.0), ScalingKind::Unit)
                .unwrap();
            assert_eq!(t.e, expected[n] - 0.0 + v[n]);
        }
        assert!(c.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn identification_mode_converges_to_primary() {
        let n = 5000;
        let x = gen_white(n, 0.0, 1.0, &mut RngStream::new(42, 0)).unwrap();
        let p = FirPath::preset(PathPreset::Primary);
        let mut plant = Plant::new(p, FirPath::unit_impulse());
        let mut c = controller(16, FirPath::unit_impulse());
        for &xn in &x {
            anc_step(&mut plant, &mut c, xn, 0.0, &mut FixedStep(0.3), ScalingKind::Unit).unwrap();
        }
        let mut w_opt = PRIMARY_PATH.to_vec();
        w_opt.resize(16, 0.0);
        let dev: f64 = c.weights().iter().zip(&w_opt).map(|(a, b)| (a - b).powi(2)).sum();
        let pnorm: f64 = PRIMARY_PATH.iter().map(|v| v * v).sum();
        assert!(dev < 1e-4 * pnorm, "deviation {dev}");
    }

    #[test]
    fn zero_input_never_moves_weights() {
        let mut plant = Plant::new(FirPath::preset(PathPreset::Primary), FirPath::preset(PathPreset::Secondary));
        let mut c = controller(16, FirPath::preset(PathPreset::Secondary));
        c.set_weights(&[0.05; 16]);
        for _ in 0..200 {
            anc_step(&mut plant, &mut c, 0.0, 0.0, &mut FixedStep(0.6), ScalingKind::Unit).unwrap();
        }
        assert!(c.weights().iter().all(|&w| w == 0.05));
    }

    #[test]
    fn divergence_is_reported() {
        let mut c = controller(1, FirPath::unit_impulse());
        c.filtered_reference_step(1.0).unwrap();
        let err = c.weight_update(1e7, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 0, .. }));
    }

    #[test]
    fn non_finite_input_fails_fast() {
        let mut plant = Plant::new(FirPath::unit_impulse(), FirPath::unit_impulse());
        let mut c = controller(2, FirPath::unit_impulse());
        let r = anc_step(&mut plant, &mut c, f64::NAN, 0.0, &mut FixedStep(0.1), ScalingKind::Unit);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    proptest! {
        #[test]
        fn mcc_factor_bounds(e in -1e6f64..1e6, sigma in 0.01f64..10.0) {
            let g = scaling_factor(ScalingKind::Mcc { sigma }, e);
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!((g * e).abs() <= sigma * (-0.5f64).exp() * (1.0 + 1e-12));
        }

        #[test]
        fn ehcf_factor_positive_for_moderate_errors(
            e in -30.0f64..30.0, eta in 0.1f64..2.0, theta in 0.2f64..2.0
        ) {
            let g = scaling_factor(ScalingKind::Ehcf { eta, theta }, e);
            prop_assert!(g.is_finite());
            // Underflow to exactly zero is allowed only when cosh^θ is enormous.
            let a = eta * e.abs();
            if theta * a < 5.0 {
                prop_assert!(g > 0.0);
            }
        }

        #[test]
        fn normalized_update_bound(
            xs in prop::collection::vec(-3.0f64..3.0, 4..40),
            e in -5.0f64..5.0,
            mu in 0.0f64..1.0,
            sigma in 0.1f64..3.0,
        ) {
            let mut c = controller(4, FirPath::new(vec![0.9, -0.5]).unwrap());
            for &x in &xs {
                c.filtered_reference_step(x).unwrap();
            }
            let before = c.weights().to_vec();
            let g = scaling_factor(ScalingKind::Mcc { sigma }, e);
            let norm = c.filtered_reference().iter().map(|v| v * v).sum::<f64>().sqrt();
            c.weight_update(e, mu, g).unwrap();
            let dw = c.weights().iter().zip(&before).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if norm > 0.0 {
                prop_assert!(dw <= mu * (g * e).abs() / norm * (1.0 + 1e-12) + 1e-300);
            } else {
                prop_assert_eq!(dw, 0.0);
            }
        }
    }
}
