//! Discrete-time linear ADRC: coefficient design, minimum-footprint runtime,
//! operation-count audit and closed-loop simulation.

pub mod cost;
pub mod design;
pub mod linalg;
pub mod runtime;
pub mod scalar;
pub mod sim;

pub use cost::{audit, audit_formula, Implementation, OpCount};
pub use design::{
    eso_design, fbtf_synthesize, DesignError, DesignSpec, DesignWarning, EsoDesign, FbtfCoefficients, IdentityCheck,
};
pub use runtime::{AdrcController, ControllerKind, FbtfController, Limiter, RuntimeError, SsController, StepOutput};
pub use scalar::{Precision, Scalar};
pub use sim::{settling_time, simulate, Scenario, SimError, SimRecord, SimTrace};
