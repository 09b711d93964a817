//! Arithmetic the runtime controllers are generic over.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

/// A real number type a controller can run in.
///
/// Only `+`, `-`, `*` and comparisons are used on the hot path, which keeps the
/// operation count of a controller step well defined (see [`crate::cost`]).
pub trait Scalar:
    Copy + Debug + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }

    /// Distance to the next representable value above `|self|`.
    fn ulp(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn ulp(self) -> f64 {
        let a = self.abs();
        f64::from_bits(a.to_bits() + 1) - a
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn ulp(self) -> f64 {
        let a = self.abs();
        (f32::from_bits(a.to_bits() + 1) - a) as f64
    }
}

/// Runtime precision selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    Single,
    #[default]
    Double,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision '{other}' (expected single or double)")),
        }
    }
}
