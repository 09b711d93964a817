//! Real-time execution of a designed ADRC.
//!
//! [`FbtfController`] is the deployable minimum-footprint form,
//! [`SsController`] the state-space reference it is checked against, and
//! [`Limiter`] the optional magnitude/rate stage between controller output
//! and actuator. The limited output is what both forms feed back, which is
//! what gives ADRC its built-in anti-windup.
//!
//! Without initialization a controller starts from zero storage with the
//! limiter holding zero. Strict controllers refuse to step until started or
//! initialized.

mod fbtf;
mod limiter;
mod state_space;

pub use fbtf::FbtfController;
pub use limiter::Limiter;
pub use state_space::SsController;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("controller stepped before start or initialization (strict mode)")]
    NotInitialized,
    #[error("invalid limiter configuration: {0}")]
    InvalidLimiter(String),
}

/// Unlimited and applied controller output of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput<S> {
    pub u: S,
    pub u_lim: S,
}

/// Common stepping interface of both controller forms.
pub trait AdrcController<S: Scalar> {
    fn step(&mut self, r: S, y: S) -> Result<StepOutput<S>, RuntimeError>;

    /// Number of persistent storage scalars, excluding the limiter.
    fn state_len(&self) -> usize;

    fn order(&self) -> usize;
}

/// Which controller form to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerKind {
    #[default]
    Fbtf,
    StateSpace,
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fbtf" => Ok(ControllerKind::Fbtf),
            "ss" | "state-space" => Ok(ControllerKind::StateSpace),
            other => Err(format!("unknown controller '{other}' (expected fbtf or ss)")),
        }
    }
}
