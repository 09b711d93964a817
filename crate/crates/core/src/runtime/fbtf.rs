use crate::design::FbtfCoefficients;
use crate::scalar::Scalar;

use super::{AdrcController, Limiter, RuntimeError, StepOutput};

/// Minimum-footprint ADRC: both feedback transfer functions share one
/// denominator and run as a single transposed direct form II section with
/// `n + 1` storage variables.
///
/// Storage `x[0]` is the top delay element, `x[n]` the bottom one.
#[derive(Debug, Clone)]
pub struct FbtfController<S> {
    coeffs: FbtfCoefficients,
    alpha: Vec<S>,
    beta: Vec<S>,
    gamma: Vec<S>,
    feedforward: S,
    x: Vec<S>,
    limiter: Option<Limiter<S>>,
    started: bool,
    strict: bool,
}

impl<S: Scalar> FbtfController<S> {
    /// Controller with zero storage and no output limiter.
    pub fn new(coeffs: &FbtfCoefficients) -> Self {
        let cast = |v: &[f64]| v.iter().map(|&c| S::from_f64(c)).collect::<Vec<S>>();
        FbtfController {
            alpha: cast(&coeffs.alpha),
            beta: cast(&coeffs.beta),
            gamma: cast(&coeffs.gamma),
            feedforward: S::from_f64(coeffs.feedforward),
            x: vec![S::zero(); coeffs.order + 1],
            limiter: None,
            started: false,
            strict: false,
            coeffs: coeffs.clone(),
        }
    }

    pub fn with_limiter(mut self, limiter: Limiter<S>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    /// In strict mode, stepping before [`start`](Self::start) or one of the
    /// initializations is an error instead of running from zero state.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn order(&self) -> usize {
        self.coeffs.order
    }

    pub fn coefficients(&self) -> &FbtfCoefficients {
        &self.coeffs
    }

    /// The storage variables `x_1..x_{n+1}`.
    pub fn state(&self) -> &[S] {
        &self.x
    }

    pub fn limiter(&self) -> Option<&Limiter<S>> {
        self.limiter.as_ref()
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    /// Marks the controller as running from its current state.
    pub fn start(&mut self) {
        self.started = true;
    }

    /// Zeros storage and limiter state and clears the started flag.
    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = S::zero());
        if let Some(lim) = self.limiter.as_mut() {
            lim.reset(S::zero());
        }
        self.started = false;
    }

    /// One control cycle.
    pub fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError> {
        if self.strict && !self.started {
            return Err(RuntimeError::NotInitialized);
        }
        let c = self.gamma[0] * y + self.x[0];
        let u = self.feedforward * r - c;
        let u_lim = match self.limiter.as_mut() {
            Some(lim) => lim.limit(u),
            None => u,
        };
        self.update_storage(c, u_lim, y);
        self.started = true;
        Ok(StepOutput { u, u_lim })
    }

    // Ascending order: x[i + 1] is read here before iteration i + 1 rewrites it.
    fn update_storage(&mut self, c: S, u_lim: S, y: S) {
        let n = self.coeffs.order;
        for i in 0..n {
            self.x[i] = self.x[i + 1] - self.alpha[i] * c + self.beta[i] * u_lim + self.gamma[i + 1] * y;
        }
        self.x[n] = self.beta[n] * u_lim - self.alpha[n] * c;
    }

    /// One tracking cycle while the controller is disabled: the output stage
    /// follows the externally applied `u_star` instead of computing `u`.
    pub fn init_tracking(&mut self, y: S, u_star: S) {
        let c = self.gamma[0] * y + self.x[0];
        if let Some(lim) = self.limiter.as_mut() {
            lim.reset(u_star);
        }
        self.update_storage(c, u_star, y);
        self.started = true;
    }

    /// Sets the storage to the steady state for a constant measurement `y`
    /// and applied output `u_star`, so that enabling the controller with
    /// `r = y` reproduces `u_star` without a bump.
    pub fn init_direct(&mut self, y: S, u_star: S) {
        let n = self.coeffs.order;
        let c = self.feedforward * y - u_star;
        if let Some(lim) = self.limiter.as_mut() {
            lim.reset(u_star);
        }
        self.x[n] = self.beta[n] * u_star - self.alpha[n] * c;
        for i in (0..n).rev() {
            self.x[i] = self.x[i + 1] - self.alpha[i] * c + self.beta[i] * u_star + self.gamma[i + 1] * y;
        }
        self.started = true;
    }
}

impl<S: Scalar> AdrcController<S> for FbtfController<S> {
    fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError> {
        FbtfController::step(self, r, y)
    }

    fn state_len(&self) -> usize {
        self.x.len()
    }

    fn order(&self) -> usize {
        self.coeffs.order
    }
}
