use crate::scalar::Scalar;

use super::RuntimeError;

/// Magnitude and rate limiter for the controller output.
///
/// The increment is clamped to `±rate_max * T` first, then the result is
/// clamped to `[u_min, u_max]`. Both stages share the previous output as
/// their only state.
#[derive(Debug, Clone, PartialEq)]
pub struct Limiter<S> {
    u_min: S,
    u_max: S,
    /// Largest change per sample, `None` when the rate is unbounded.
    max_step: Option<S>,
    rate_max: f64,
    ts: f64,
    prev: S,
}

impl<S: Scalar> Limiter<S> {
    /// `rate_max` is in output units per second and may be `f64::INFINITY`.
    pub fn new(u_min: f64, u_max: f64, rate_max: f64, ts: f64) -> Result<Self, RuntimeError> {
        if u_min.is_nan() || u_max.is_nan() || u_min > u_max {
            return Err(RuntimeError::InvalidLimiter(format!("magnitude bounds [{u_min}, {u_max}] are not ordered")));
        }
        if rate_max.is_nan() || rate_max <= 0.0 {
            return Err(RuntimeError::InvalidLimiter(format!("rate limit {rate_max} must be > 0")));
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(RuntimeError::InvalidLimiter(format!("sample time {ts} must be > 0")));
        }
        let step = rate_max * ts;
        Ok(Limiter {
            u_min: S::from_f64(u_min),
            u_max: S::from_f64(u_max),
            max_step: step.is_finite().then(|| S::from_f64(step)),
            rate_max,
            ts,
            prev: S::zero(),
        })
    }

    /// A limiter that only bounds the magnitude.
    pub fn magnitude(u_min: f64, u_max: f64, ts: f64) -> Result<Self, RuntimeError> {
        Self::new(u_min, u_max, f64::INFINITY, ts)
    }

    pub fn limit(&mut self, u: S) -> S {
        let mut v = u;
        if let Some(step) = self.max_step {
            let hi = self.prev + step;
            let lo = self.prev - step;
            if v > hi {
                v = hi;
            } else if v < lo {
                v = lo;
            }
        }
        if v > self.u_max {
            v = self.u_max;
        } else if v < self.u_min {
            v = self.u_min;
        }
        self.prev = v;
        v
    }

    /// Forces the held output, e.g. for bumpless initialization.
    pub fn reset(&mut self, value: S) {
        self.prev = value;
    }

    pub fn state(&self) -> S {
        self.prev
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.u_min.to_f64(), self.u_max.to_f64())
    }

    pub fn rate_max(&self) -> f64 {
        self.rate_max
    }

    /// Largest permitted change per sample (`rate_max * T`).
    pub fn max_step(&self) -> f64 {
        self.max_step.map_or(f64::INFINITY, Scalar::to_f64)
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }
}
