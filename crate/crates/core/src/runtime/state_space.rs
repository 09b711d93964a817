use crate::design::{eso_design, DesignError, DesignSpec, EsoDesign};
use crate::scalar::Scalar;

use super::{AdrcController, Limiter, RuntimeError, StepOutput};

/// Reference ADRC in state-space form: current-observer ESO followed by
/// state feedback on the estimate.
///
/// Serves as the oracle for [`super::FbtfController`]; both produce the same
/// output sequence for the same inputs.
#[derive(Debug, Clone)]
pub struct SsController<S> {
    design: EsoDesign,
    dim: usize,
    /// `A_eso`, row-major.
    a_eso: Vec<S>,
    b_eso: Vec<S>,
    l: Vec<S>,
    k: Vec<S>,
    inv_b0: S,
    xhat: Vec<S>,
    scratch: Vec<S>,
    /// Limited output of the previous cycle. It duplicates the limiter's own
    /// held value, so it is not counted as controller storage.
    u_prev: S,
    limiter: Option<Limiter<S>>,
    started: bool,
    strict: bool,
}

impl<S: Scalar> SsController<S> {
    pub fn new(design: &EsoDesign, b0: f64) -> Self {
        let dim = design.order() + 1;
        let cast = |v: &[f64]| v.iter().map(|&c| S::from_f64(c)).collect::<Vec<S>>();
        let a_eso = (0..dim * dim).map(|idx| S::from_f64(design.a_eso[(idx / dim, idx % dim)])).collect();
        SsController {
            dim,
            a_eso,
            b_eso: cast(design.b_eso.as_slice()),
            l: cast(design.l.as_slice()),
            k: cast(&design.k),
            inv_b0: S::from_f64(1.0 / b0),
            xhat: vec![S::zero(); dim],
            scratch: vec![S::zero(); dim],
            u_prev: S::zero(),
            limiter: None,
            started: false,
            strict: false,
            design: design.clone(),
        }
    }

    pub fn from_spec(spec: &DesignSpec) -> Result<Self, DesignError> {
        Ok(Self::new(&eso_design(spec)?, spec.b0))
    }

    pub fn with_limiter(mut self, limiter: Limiter<S>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn design(&self) -> &EsoDesign {
        &self.design
    }

    /// Observer estimate `x̂`.
    pub fn estimate(&self) -> &[S] {
        &self.xhat
    }

    pub fn start(&mut self) {
        self.started = true;
    }

    pub fn reset(&mut self) {
        self.xhat.iter_mut().for_each(|v| *v = S::zero());
        self.u_prev = S::zero();
        if let Some(lim) = self.limiter.as_mut() {
            lim.reset(S::zero());
        }
        self.started = false;
    }

    pub fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError> {
        if self.strict && !self.started {
            return Err(RuntimeError::NotInitialized);
        }
        let dim = self.dim;
        for i in 0..dim {
            let row = &self.a_eso[i * dim..(i + 1) * dim];
            let mut acc = S::zero();
            for (a, x) in row.iter().zip(&self.xhat) {
                acc = acc + *a * *x;
            }
            self.scratch[i] = acc + self.b_eso[i] * self.u_prev + self.l[i] * y;
        }
        std::mem::swap(&mut self.xhat, &mut self.scratch);

        let n = dim - 1;
        let mut acc = self.k[0] * r;
        for i in 0..n {
            acc = acc - self.k[i] * self.xhat[i];
        }
        acc = acc - self.xhat[n];
        let u = self.inv_b0 * acc;
        let u_lim = match self.limiter.as_mut() {
            Some(lim) => lim.limit(u),
            None => u,
        };
        self.u_prev = u_lim;
        self.started = true;
        Ok(StepOutput { u, u_lim })
    }
}

impl<S: Scalar> AdrcController<S> for SsController<S> {
    fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError> {
        SsController::step(self, r, y)
    }

    fn state_len(&self) -> usize {
        self.xhat.len()
    }

    fn order(&self) -> usize {
        self.dim - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let spec = DesignSpec::new(2, 3.0, 1e-3, 50.0, 4.0).unwrap();
        let mut ctrl = SsController::<f64>::from_spec(&spec).unwrap();
        for _ in 0..5 {
            let out = ctrl.step(0.0, 0.0).unwrap();
            assert_eq!((out.u, out.u_lim), (0.0, 0.0));
        }
        assert_eq!(AdrcController::state_len(&ctrl), 3);
    }

    #[test]
    fn observer_tracks_constant_output() {
        // hold u at the value the plant would need at rest (zero for an
        // undisturbed integrator chain); the estimate must converge to y
        let spec = DesignSpec::new(1, 2.0, 1e-3, 50.0, 4.0).unwrap();
        let mut ctrl =
            SsController::<f64>::from_spec(&spec).unwrap().with_limiter(Limiter::magnitude(0.0, 0.0, 1e-3).unwrap());
        for _ in 0..2000 {
            ctrl.step(0.0, 1.5).unwrap();
        }
        assert!((ctrl.estimate()[0] - 1.5).abs() < 1e-9, "{:?}", ctrl.estimate());
        assert!(ctrl.estimate()[1].abs() < 1e-9);
    }

    #[test]
    fn strict_mode() {
        let spec = DesignSpec::new(1, 2.0, 1e-3, 50.0, 4.0).unwrap();
        let mut ctrl = SsController::<f32>::from_spec(&spec).unwrap().strict(true);
        assert_eq!(ctrl.step(0.0, 0.0), Err(RuntimeError::NotInitialized));
        ctrl.start();
        assert!(ctrl.step(0.0, 0.0).is_ok());
    }
}
