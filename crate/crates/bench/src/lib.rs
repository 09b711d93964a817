//! Shared fixtures for the controller benchmarks in `benches/`.

use adrc_core::design::{fbtf_synthesize, DesignSpec, FbtfCoefficients};

/// Orders benchmarked.
pub const ORDERS: [usize; 4] = [1, 2, 3, 6];

/// Converter-like tuning at the given order.
pub fn spec(order: usize) -> DesignSpec {
    DesignSpec::new(order, 10_000.0, 2e-5, 4000.0, 5.0).expect("valid tuning")
}

pub fn coefficients(order: usize) -> FbtfCoefficients {
    fbtf_synthesize(&spec(order)).expect("synthesis succeeds")
}

/// A short periodic `(r, y)` sequence so the branch predictor sees varied data.
pub fn inputs() -> Vec<(f64, f64)> {
    (0..256)
        .map(|k| {
            let t = k as f64 / 256.0;
            (5.0, 5.0 + 0.1 * (std::f64::consts::TAU * t).sin())
        })
        .collect()
}
