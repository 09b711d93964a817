//! Arithmetic cost of one controller step.
//!
//! [`audit`] runs the real runtime code on an instrumented scalar, so the
//! counts reflect what the controllers actually execute. [`audit_formula`]
//! gives the closed-form counts they are checked against. Limiter cost is
//! excluded on both sides.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::design::{eso_design, fbtf_synthesize, DesignSpec};
use crate::runtime::{AdrcController, FbtfController, SsController};
use crate::scalar::Scalar;

thread_local! {
    static MULS: Cell<u64> = const { Cell::new(0) };
    static ADDS: Cell<u64> = const { Cell::new(0) };
}

/// `f64` that tallies every multiplication and addition/subtraction on the
/// current thread. Comparisons and conversions are free.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

impl Counted {
    pub fn reset_counters() {
        MULS.with(|c| c.set(0));
        ADDS.with(|c| c.set(0));
    }

    /// `(multiplications, additions)` since the last reset.
    pub fn counters() -> (u64, u64) {
        (MULS.with(Cell::get), ADDS.with(Cell::get))
    }
}

impl Add for Counted {
    type Output = Counted;
    fn add(self, rhs: Counted) -> Counted {
        ADDS.with(|c| c.set(c.get() + 1));
        Counted(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Sub for Counted {
    type Output = Counted;
    fn sub(self, rhs: Counted) -> Counted {
        ADDS.with(|c| c.set(c.get() + 1));
        Counted(self.0 - rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Counted {
    type Output = Counted;
    fn mul(self, rhs: Counted) -> Counted {
        MULS.with(|c| c.set(c.get() + 1));
        Counted(self.0 * rhs.0)
    }
}

impl Scalar for Counted {
    fn from_f64(v: f64) -> Self {
        Counted(v)
    }

    fn to_f64(self) -> f64 {
        self.0
    }

    fn ulp(self) -> f64 {
        self.0.ulp()
    }
}

/// Per-step cost. Subtractions count as additions; `vars` is the number of
/// persistent storage scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub mul: u64,
    pub add: u64,
    pub vars: u64,
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.mul, self.add, self.vars)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Implementation {
    Fbtf,
    StateSpace,
    /// Error-based transfer-function form. Not implemented; present so that
    /// reports can show its closed-form row for comparison.
    ErrorTransferFunction,
}

impl Implementation {
    pub fn name(self) -> &'static str {
        match self {
            Implementation::Fbtf => "fbtf",
            Implementation::StateSpace => "ss",
            Implementation::ErrorTransferFunction => "error-tf",
        }
    }
}

/// Measures one step of `implementation` at order `n` (without limiter).
///
/// Returns `None` for implementations that exist only as a formula row, and
/// for `n = 0`.
pub fn audit(implementation: Implementation, n: usize) -> Option<OpCount> {
    if n == 0 {
        return None;
    }
    // generic coefficients: nothing is 0 or 1, so nothing could be elided
    let spec = DesignSpec::new(n, 3.0, 1e-2, 7.0, 4.0).ok()?;
    let (r, y) = (Counted(0.7), Counted(0.3));
    let (before, after, vars) = match implementation {
        Implementation::Fbtf => {
            let mut ctrl = FbtfController::<Counted>::new(&fbtf_synthesize(&spec).ok()?);
            let before = Counted::counters();
            ctrl.step(r, y).ok()?;
            (before, Counted::counters(), ctrl.state_len())
        }
        Implementation::StateSpace => {
            let mut ctrl = SsController::<Counted>::new(&eso_design(&spec).ok()?, spec.b0);
            let before = Counted::counters();
            ctrl.step(r, y).ok()?;
            (before, Counted::counters(), ctrl.state_len())
        }
        Implementation::ErrorTransferFunction => return None,
    };
    Some(OpCount { mul: after.0 - before.0, add: after.1 - before.1, vars: vars as u64 })
}

/// Closed-form per-step cost.
pub fn audit_formula(implementation: Implementation, n: usize) -> OpCount {
    let n = n as u64;
    match implementation {
        Implementation::Fbtf => OpCount { mul: 3 * n + 4, add: 3 * n + 3, vars: n + 1 },
        Implementation::StateSpace => OpCount { mul: n * n + 5 * n + 5, add: n * n + 5 * n + 4, vars: n + 1 },
        Implementation::ErrorTransferFunction => OpCount { mul: 4 * n + 3, add: 4 * n + 2, vars: 2 * n + 2 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(mul: u64, add: u64, vars: u64) -> OpCount {
        OpCount { mul, add, vars }
    }

    #[test]
    fn low_orders_match_published_counts() {
        assert_eq!(audit(Implementation::Fbtf, 1), Some(count(7, 6, 2)));
        assert_eq!(audit(Implementation::Fbtf, 2), Some(count(10, 9, 3)));
        assert_eq!(audit(Implementation::StateSpace, 1), Some(count(11, 10, 2)));
        assert_eq!(audit(Implementation::StateSpace, 2), Some(count(19, 18, 3)));
        assert_eq!(audit(Implementation::Fbtf, 5), Some(count(19, 18, 6)));
    }

    #[test]
    fn measured_equals_formula() {
        for n in 1..=8 {
            for imp in [Implementation::Fbtf, Implementation::StateSpace] {
                assert_eq!(audit(imp, n), Some(audit_formula(imp, n)), "{} n={n}", imp.name());
            }
        }
    }

    #[test]
    fn error_tf_is_formula_only() {
        assert_eq!(audit(Implementation::ErrorTransferFunction, 2), None);
        assert_eq!(audit_formula(Implementation::ErrorTransferFunction, 1), count(7, 6, 4));
        assert_eq!(audit_formula(Implementation::ErrorTransferFunction, 2), count(11, 10, 6));
    }

    #[test]
    fn counters_are_per_operation() {
        Counted::reset_counters();
        let v = Counted(2.0) * Counted(3.0) - Counted(1.0) + Counted(0.5);
        assert_eq!(v.0, 5.5);
        assert_eq!(Counted::counters(), (1, 2));
        assert!(Counted(1.0) < Counted(2.0));
        assert_eq!(Counted::counters(), (1, 2));
    }
}
