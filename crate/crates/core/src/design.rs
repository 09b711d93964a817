//! Design-time computation for discrete-time linear ADRC.
//!
//! Everything here is a pure function of a [`DesignSpec`]: the ZOH-discretized
//! extended state observer, its gain for coincident poles at `z_eso`, the
//! bandwidth-parameterized state-feedback gains, and the coefficients of the
//! two feedback transfer functions
//!
//! ```text
//! C_u(z) = z^-1 * (beta_0 + ... + beta_n z^-n) / (1 + alpha_1 z^-1 + ... + alpha_{n+1} z^-(n+1))
//! C_y(z) =       (gamma_0 + ... + gamma_n z^-n) / (same denominator)
//! ```
//!
//! that the minimum-footprint runtime executes. All math is `f64`, whatever
//! precision the runtime later uses.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::linalg::{self, binomial, factorial, leverrier_faddeev, REL_FLOOR};

/// Relative tolerance of every design-time identity check.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Observer poles closer to the origin than this are treated as deadbeat.
pub const DEADBEAT_CLAMP: f64 = 1e-12;

/// Condition number (after column equilibration) above which the observer
/// gain system is reported as singular.
pub const MAX_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("plant order must be >= 1 (got {0})")]
    InvalidOrder(usize),
    #[error("sample time must be > 0 (got {0})")]
    InvalidSampleTime(f64),
    #[error("closed-loop bandwidth omega_cl must be > 0 (got {0})")]
    InvalidBandwidth(f64),
    #[error("observer bandwidth factor k_eso must be > 0 (got {0})")]
    InvalidObserverFactor(f64),
    #[error("plant gain b0 must be finite and non-zero (got {0})")]
    InvalidGain(f64),
    #[error("observer pole z_eso must lie in [0, 1] (got {0})")]
    InvalidPole(f64),
    #[error("matrix dimensions do not match: {0}")]
    ShapeMismatch(String),
    #[error("observer gain system is numerically singular (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },
    #[error("coefficient synthesis overflowed (omega_cl * T = {omega_t:.3e})")]
    CoefficientOverflow { omega_t: f64 },
    #[error("closed-form coefficients exist only for order 1 and 2 (got {0})")]
    UnsupportedOrder(usize),
}

/// Non-fatal findings of [`DesignSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum DesignWarning {
    /// `omega_cl * T > 1`: the loop is sampled slower than its bandwidth.
    SlowSampling { omega_t: f64 },
}

impl std::fmt::Display for DesignWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DesignWarning::SlowSampling { omega_t } => {
                write!(f, "omega_cl * T = {omega_t} > 1: sampling is slower than the closed-loop bandwidth")
            }
        }
    }
}

/// The five tuning inputs of a bandwidth-parameterized ADRC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    /// Plant order `n` (integrator chain length, before extension).
    pub order: usize,
    /// Plant input gain.
    pub b0: f64,
    /// Sample interval in seconds.
    pub ts: f64,
    /// Desired closed-loop bandwidth in rad/s.
    pub omega_cl: f64,
    /// Observer bandwidth relative to `omega_cl`.
    pub k_eso: f64,
}

impl DesignSpec {
    pub fn new(order: usize, b0: f64, ts: f64, omega_cl: f64, k_eso: f64) -> Result<Self, DesignError> {
        let spec = DesignSpec { order, b0, ts, omega_cl, k_eso };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the invariants and returns the warnings for legal but unusual
    /// parameter choices.
    pub fn validate(&self) -> Result<Vec<DesignWarning>, DesignError> {
        if self.order == 0 {
            return Err(DesignError::InvalidOrder(self.order));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(DesignError::InvalidSampleTime(self.ts));
        }
        if !(self.omega_cl > 0.0 && self.omega_cl.is_finite()) {
            return Err(DesignError::InvalidBandwidth(self.omega_cl));
        }
        if !(self.k_eso > 0.0 && self.k_eso.is_finite()) {
            return Err(DesignError::InvalidObserverFactor(self.k_eso));
        }
        if self.b0 == 0.0 || !self.b0.is_finite() {
            return Err(DesignError::InvalidGain(self.b0));
        }
        let mut warnings = Vec::new();
        if self.omega_t() > 1.0 {
            warnings.push(DesignWarning::SlowSampling { omega_t: self.omega_t() });
        }
        Ok(warnings)
    }

    pub fn omega_t(&self) -> f64 {
        self.omega_cl * self.ts
    }

    /// Observer pole location `exp(-k_eso * omega_cl * T)`.
    pub fn z_eso(&self) -> f64 {
        observer_pole(self.k_eso, self.omega_cl, self.ts)
    }
}

/// `exp(-k_eso * omega_cl * ts)`, clamped to exactly 0 below [`DEADBEAT_CLAMP`].
pub fn observer_pole(k_eso: f64, omega_cl: f64, ts: f64) -> f64 {
    let z = (-k_eso * omega_cl * ts).exp();
    if z < DEADBEAT_CLAMP {
        0.0
    } else {
        z
    }
}

/// Discretized extended state observer and controller gains.
#[derive(Debug, Clone, PartialEq)]
pub struct EsoDesign {
    pub a_d: DMatrix<f64>,
    pub b_d: DVector<f64>,
    /// Observer gain `l`.
    pub l: DVector<f64>,
    pub a_eso: DMatrix<f64>,
    pub b_eso: DVector<f64>,
    /// State-feedback gains `k_1..k_n`.
    pub k: Vec<f64>,
    pub z_eso: f64,
}

impl EsoDesign {
    pub fn order(&self) -> usize {
        self.k.len()
    }
}

/// Bandwidth-parameterized state-feedback gains
/// `k_i = C(n, i-1) * omega^(n-i+1)` for `i = 1..n`, i.e. the coefficients of
/// `(s + omega)^n` below the leading one, in reverse.
pub fn controller_gains(order: usize, omega_cl: f64) -> Result<Vec<f64>, DesignError> {
    if order == 0 {
        return Err(DesignError::InvalidOrder(order));
    }
    if !(omega_cl > 0.0 && omega_cl.is_finite()) {
        return Err(DesignError::InvalidBandwidth(omega_cl));
    }
    Ok((1..=order).map(|i| binomial(order, i - 1) as f64 * omega_cl.powi((order - i + 1) as i32)).collect())
}

/// ZOH discretization of the extended integrator chain.
///
/// The continuous system matrix is nilpotent, so the exponential series ends
/// after `n` terms and the closed form below is exact:
/// `A_d[i][j] = T^(j-i) / (j-i)!` for `j >= i`, and
/// `b_d[i] = b0 * T^(n-i) / (n-i)!` (0-indexed) with a zero last entry.
pub fn zoh_discretize(order: usize, b0: f64, ts: f64) -> Result<(DMatrix<f64>, DVector<f64>), DesignError> {
    if order == 0 {
        return Err(DesignError::InvalidOrder(order));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(DesignError::InvalidSampleTime(ts));
    }
    let dim = order + 1;
    let a_d = DMatrix::from_fn(dim, dim, |i, j| if j >= i { ts.powi((j - i) as i32) / factorial(j - i) } else { 0.0 });
    let b_d = DVector::from_fn(dim, |i, _| {
        if i < order {
            let p = order - i;
            b0 * ts.powi(p as i32) / factorial(p)
        } else {
            0.0
        }
    });
    Ok((a_d, b_d))
}

/// Output row of the discrete model; ZOH leaves `c^T = [1 0 ... 0]` unchanged.
pub fn output_row(order: usize) -> DVector<f64> {
    DVector::from_fn(order + 1, |i, _| if i == 0 { 1.0 } else { 0.0 })
}

/// Solution of the observer gain system together with its conditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGain {
    pub l: DVector<f64>,
    /// 2-norm condition number of the column-equilibrated system.
    pub condition: f64,
}

/// Current-observer gain `l` placing every eigenvalue of
/// `A_d - l c^T A_d` at `z_eso`.
pub fn observer_gain(a_d: &DMatrix<f64>, z_eso: f64) -> Result<DVector<f64>, DesignError> {
    observer_gain_with_condition(a_d, z_eso).map(|g| g.l)
}

/// Like [`observer_gain`], also returning the condition number of the solve.
///
/// With `m^T = c^T A_d` the closed-loop characteristic polynomial is affine in
/// `l`: `det(zI - A_d + l m^T) = det(zI - A_d) + m^T adj(zI - A_d) l`.
///
/// The polynomials are matched in the shifted variable `w = z - 1`, where
/// `A_d - I` is nilpotent for the integrator chain and the target
/// `(w + 1 - z_eso)^N` has coefficients `C(N, k) (1 - z_eso)^k` free of
/// cancellation. Writing `adj(wI - (A_d - I)) = sum_k B_k w^(N-1-k)` makes row
/// `k` of the linear system `m^T B_k`.
pub fn observer_gain_with_condition(a_d: &DMatrix<f64>, z_eso: f64) -> Result<ObserverGain, DesignError> {
    if !a_d.is_square() || a_d.nrows() < 2 {
        return Err(DesignError::ShapeMismatch(format!(
            "A_d must be square with dimension >= 2, got {}x{}",
            a_d.nrows(),
            a_d.ncols()
        )));
    }
    if !(0.0..=1.0).contains(&z_eso) {
        return Err(DesignError::InvalidPole(z_eso));
    }
    let dim = a_d.nrows();
    let m = a_d.row(0).transpose();
    let shifted = a_d - DMatrix::<f64>::identity(dim, dim);
    let open_loop = leverrier_faddeev(&shifted);
    let gap = 1.0 - z_eso;
    let target: Vec<f64> = (0..=dim).map(|k| binomial(dim, k) as f64 * gap.powi(k as i32)).collect();

    let mut system = DMatrix::<f64>::zeros(dim, dim);
    for (k, b) in open_loop.adjugate.iter().enumerate() {
        system.set_row(k, &linalg::row_times(&m, b).transpose());
    }
    let rhs = DVector::from_fn(dim, |k, _| target[k + 1] - open_loop.char_poly[k + 1]);

    // Column k scales like T^k; equilibrate so the condition number is meaningful.
    let col_scale = DVector::from_fn(dim, |j, _| {
        let s = system.column(j).amax();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    });
    for j in 0..dim {
        let s = col_scale[j];
        system.column_mut(j).unscale_mut(s);
    }

    let sv = system.clone().singular_values();
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    // also rejects NaN
    if condition.is_nan() || condition >= MAX_CONDITION {
        return Err(DesignError::SingularSystem { condition });
    }
    let scaled = system.lu().solve(&rhs).ok_or(DesignError::SingularSystem { condition })?;
    let l = scaled.component_div(&col_scale);
    Ok(ObserverGain { l, condition })
}

/// Current-observer matrices `A_eso = A_d - l c^T A_d`, `b_eso = b_d - l c^T b_d`.
pub fn eso_matrices(
    a_d: &DMatrix<f64>,
    b_d: &DVector<f64>,
    l: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), DesignError> {
    let dim = a_d.nrows();
    if !a_d.is_square() || b_d.len() != dim || l.len() != dim {
        return Err(DesignError::ShapeMismatch(format!(
            "A_d {}x{}, b_d {}, l {}",
            a_d.nrows(),
            a_d.ncols(),
            b_d.len(),
            l.len()
        )));
    }
    let c_a = a_d.row(0).into_owned();
    let a_eso = a_d - l * c_a;
    let b_eso = b_d - l * b_d[0];
    Ok((a_eso, b_eso))
}

/// Builds the complete observer/controller design for `spec`.
pub fn eso_design(spec: &DesignSpec) -> Result<EsoDesign, DesignError> {
    spec.validate()?;
    let z_eso = spec.z_eso();
    let (a_d, b_d) = zoh_discretize(spec.order, spec.b0, spec.ts)?;
    let l = observer_gain(&a_d, z_eso)?;
    let (a_eso, b_eso) = eso_matrices(&a_d, &b_d, &l)?;
    let k = controller_gains(spec.order, spec.omega_cl)?;
    Ok(EsoDesign { a_d, b_d, l, a_eso, b_eso, k, z_eso })
}

/// Deployable coefficients of the feedback-transfer-function controller.
#[derive(Debug, Clone, PartialEq)]
pub struct FbtfCoefficients {
    pub order: usize,
    /// Denominator `alpha_1..alpha_{n+1}` (the leading 1 is implicit).
    pub alpha: Vec<f64>,
    /// Numerator of `C_u` without its structural one-sample delay.
    pub beta: Vec<f64>,
    /// Numerator of `C_y`.
    pub gamma: Vec<f64>,
    /// Reference feedforward `k_1 / b0`.
    pub feedforward: f64,
    pub ts: f64,
    pub b0: f64,
    pub omega_cl: f64,
    pub k_eso: f64,
    pub z_eso: f64,
}

/// One DC-gain identity, evaluated on a coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|` divided by the summed magnitude of every term involved.
    pub rel_error: f64,
}

impl IdentityCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64, scale: f64) -> Self {
        IdentityCheck { name, lhs, rhs, rel_error: (lhs - rhs).abs() / scale.max(REL_FLOOR) }
    }

    pub fn holds(&self) -> bool {
        self.rel_error <= IDENTITY_TOL
    }
}

impl FbtfCoefficients {
    /// `1 + sum(alpha)`, the denominator evaluated at `z = 1`.
    pub fn denominator_dc(&self) -> f64 {
        1.0 + self.alpha.iter().sum::<f64>()
    }

    /// Evaluates the three DC identities every bandwidth-tuned design obeys:
    /// the denominator equals `(1 - z_eso)^(n+1)` at `z = 1`, `C_u(1) = -1`
    /// and `C_y(1) = k_1 / b0`.
    pub fn identity_checks(&self) -> Vec<IdentityCheck> {
        let abs_sum = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let den = self.denominator_dc();
        let den_scale = 1.0 + abs_sum(&self.alpha);
        let expected_den = (1.0 - self.z_eso).powi(self.order as i32 + 1);
        vec![
            IdentityCheck::new("denominator_dc", den, expected_den, den_scale + expected_den.abs()),
            IdentityCheck::new("cu_dc_gain", self.beta.iter().sum(), -den, abs_sum(&self.beta) + den_scale),
            IdentityCheck::new(
                "cy_dc_gain",
                self.gamma.iter().sum(),
                self.feedforward * den,
                abs_sum(&self.gamma) + self.feedforward.abs() * den_scale,
            ),
        ]
    }
}

/// Synthesizes the feedback-transfer-function coefficients for any order.
///
/// The denominator is the characteristic polynomial of `A_eso` and the
/// numerators are `(1/b0) [k^T 1] B_k b_eso` and `(1/b0) [k^T 1] B_k l`, with
/// `B_k` the Leverrier–Faddeev adjugate coefficients of `A_eso`.
pub fn fbtf_synthesize(spec: &DesignSpec) -> Result<FbtfCoefficients, DesignError> {
    let design = eso_design(spec)?;
    coefficients_from_design(spec, &design)
}

pub(crate) fn coefficients_from_design(spec: &DesignSpec, design: &EsoDesign) -> Result<FbtfCoefficients, DesignError> {
    let resolvent = leverrier_faddeev(&design.a_eso);
    let mut weights = DVector::from_element(spec.order + 1, 1.0);
    weights.rows_mut(0, spec.order).copy_from_slice(&design.k);

    let mut beta = Vec::with_capacity(spec.order + 1);
    let mut gamma = Vec::with_capacity(spec.order + 1);
    for b in &resolvent.adjugate {
        let w = linalg::row_times(&weights, b);
        beta.push(w.dot(&design.b_eso) / spec.b0);
        gamma.push(w.dot(&design.l) / spec.b0);
    }
    let coeffs = FbtfCoefficients {
        order: spec.order,
        alpha: resolvent.char_poly[1..].to_vec(),
        beta,
        gamma,
        feedforward: design.k[0] / spec.b0,
        ts: spec.ts,
        b0: spec.b0,
        omega_cl: spec.omega_cl,
        k_eso: spec.k_eso,
        z_eso: design.z_eso,
    };
    let all_finite = coeffs
        .alpha
        .iter()
        .chain(&coeffs.beta)
        .chain(&coeffs.gamma)
        .chain(std::iter::once(&coeffs.feedforward))
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(DesignError::CoefficientOverflow { omega_t: spec.omega_t() });
    }
    Ok(coeffs)
}

/// Closed-form coefficients of first- and second-order designs, written out
/// term by term. Used to cross-check [`fbtf_synthesize`].
///
/// Terms such as `1 - z - z^2 + z^3` cancel heavily when `z_eso` is close to 1,
/// so each cell is evaluated in double-double arithmetic and rounded once.
pub fn closed_form_coefficients(spec: &DesignSpec) -> Result<FbtfCoefficients, DesignError> {
    spec.validate()?;
    let z_eso = spec.z_eso();
    let one = TwoFloat::from(1.0);
    let k = |v: f64| TwoFloat::from(v);
    let z = k(z_eso);
    let t = k(spec.ts);
    let w = k(spec.omega_cl);
    let b0 = k(spec.b0);
    let tw = t * w;
    let round = |v: Vec<TwoFloat>| v.into_iter().map(f64::from).collect::<Vec<_>>();
    let (alpha, beta, gamma, feedforward) = match spec.order {
        1 => {
            let one_m_z2 = (one - z).powi(2);
            (
                vec![k(-2.0) * z, z * z],
                vec![tw * z * z - one_m_z2, -tw * z * z],
                vec![(tw * (one - z * z) + one_m_z2) / (b0 * t), (k(2.0) * tw * (z * z - z) - one_m_z2) / (b0 * t)],
                w / b0,
            )
        }
        2 => {
            let z2 = z * z;
            let z3 = z2 * z;
            let one_m_z3 = (one - z).powi(3);
            let one_p_z3 = (one + z).powi(3);
            let tw2 = tw * tw;
            let norm = b0 * t * t;
            let half = k(0.5);
            (
                vec![k(-3.0) * z, k(3.0) * z2, -z3],
                vec![
                    half * (-tw * z3 * (k(4.0) - tw) + tw * one_p_z3 - one_m_z3),
                    half * (-tw * one_p_z3 - one_m_z3),
                    half * (tw * z3 * (k(4.0) - tw)),
                ],
                vec![
                    (tw2 * (one - z3) + k(3.0) * tw * (one - z - z2 + z3) + one_m_z3) / norm,
                    (k(3.0) * tw2 * (-z + z3) + k(4.0) * tw * (k(-1.0) + k(3.0) * z2 - k(2.0) * z3)
                        - k(2.0) * one_m_z3)
                        / norm,
                    (k(3.0) * tw2 * (z2 - z3) + tw * (one + k(3.0) * z - k(9.0) * z2 + k(5.0) * z3) + one_m_z3) / norm,
                ],
                w * w / b0,
            )
        }
        n => return Err(DesignError::UnsupportedOrder(n)),
    };
    Ok(FbtfCoefficients {
        order: spec.order,
        alpha: round(alpha),
        beta: round(beta),
        gamma: round(gamma),
        feedforward: f64::from(feedforward),
        ts: spec.ts,
        b0: spec.b0,
        omega_cl: spec.omega_cl,
        k_eso: spec.k_eso,
        z_eso,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{binomial_expansion, max_rel_diff};

    fn buck_spec(order: usize) -> DesignSpec {
        DesignSpec::new(order, 10_000.0, 2e-5, 4000.0, 5.0).unwrap()
    }

    /// Truncated exponential series of the continuous extended integrator
    /// chain, summed term by term with explicit matrix powers.
    fn zoh_series(order: usize, b0: f64, ts: f64) -> (DMatrix<f64>, DVector<f64>) {
        let dim = order + 1;
        let a = DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let mut b = DVector::zeros(dim);
        b[order - 1] = b0;
        let mut a_d = DMatrix::identity(dim, dim);
        let mut b_sum = DMatrix::zeros(dim, dim);
        let mut a_pow = DMatrix::identity(dim, dim); // A^(i-1)
        let mut fact = 1.0;
        for i in 1..=dim + 2 {
            fact *= i as f64;
            b_sum += &a_pow * (ts.powi(i as i32) / fact);
            a_pow = &a_pow * &a;
            a_d += &a_pow * (ts.powi(i as i32) / fact);
        }
        (a_d, b_sum * b)
    }

    #[test]
    fn gains_follow_binomial_rows() {
        assert_eq!(controller_gains(1, 4000.0).unwrap(), vec![4000.0]);
        assert_eq!(controller_gains(2, 10.0).unwrap(), vec![100.0, 20.0]);
        assert_eq!(controller_gains(3, 1.0).unwrap(), vec![1.0, 3.0, 3.0]);
        for n in 1..=8 {
            let omega = 1.7_f64;
            let g = controller_gains(n, omega).unwrap();
            assert_eq!(g[0], omega.powi(n as i32));
            for (i, k) in g.iter().enumerate() {
                let scaled = k / omega.powi((n - i) as i32);
                assert_eq!(scaled.round() as u64, binomial(n, i));
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gains_reject_bad_input() {
        assert_eq!(controller_gains(0, 1.0), Err(DesignError::InvalidOrder(0)));
        assert!(matches!(controller_gains(2, 0.0), Err(DesignError::InvalidBandwidth(_))));
        assert!(matches!(controller_gains(2, -3.0), Err(DesignError::InvalidBandwidth(_))));
    }

    #[test]
    fn spec_validation() {
        assert_eq!(DesignSpec::new(0, 1.0, 1.0, 1.0, 1.0), Err(DesignError::InvalidOrder(0)));
        assert!(matches!(DesignSpec::new(1, 0.0, 1.0, 1.0, 1.0), Err(DesignError::InvalidGain(_))));
        assert!(matches!(DesignSpec::new(1, 1.0, 0.0, 1.0, 1.0), Err(DesignError::InvalidSampleTime(_))));
        assert!(matches!(DesignSpec::new(1, 1.0, 1.0, -1.0, 1.0), Err(DesignError::InvalidBandwidth(_))));
        assert!(matches!(DesignSpec::new(1, 1.0, 1.0, 1.0, 0.0), Err(DesignError::InvalidObserverFactor(_))));
        let slow = DesignSpec::new(1, 1.0, 0.1, 20.0, 1.0).unwrap();
        assert_eq!(slow.validate().unwrap().len(), 1);
        assert!(buck_spec(1).validate().unwrap().is_empty());
        // negative b0 is legal
        assert!(DesignSpec::new(1, -3.0, 1e-3, 10.0, 3.0).is_ok());
    }

    #[test]
    fn deadbeat_clamp() {
        assert_eq!(observer_pole(10.0, 100.0, 1.0), 0.0);
        assert!(observer_pole(1.0, 1.0, 1.0) > 0.0);
    }

    #[test]
    fn zoh_examples() {
        let (a, b) = zoh_discretize(1, 1.0, 0.5).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert_eq!(b.as_slice(), &[0.5, 0.0]);
        let (_, b) = zoh_discretize(2, 2.0, 1.0).unwrap();
        assert_eq!(b.as_slice(), &[1.0, 2.0, 0.0]);
        assert_eq!(output_row(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn zoh_closed_form_equals_series() {
        for n in 1..=6 {
            for &(b0, ts) in &[(1.0, 0.5), (3.5, 1e-3), (-2.0, 2.0), (1e4, 2e-5)] {
                let (a, b) = zoh_discretize(n, b0, ts).unwrap();
                let (a_s, b_s) = zoh_series(n, b0, ts);
                assert!((&a - &a_s).amax() <= 1e-15 * a.amax(), "A_d n={n}");
                assert!((&b - &b_s).amax() <= 1e-15 * b.amax(), "b_d n={n}");
            }
        }
    }

    #[test]
    fn unit_pole_needs_no_correction() {
        for n in 1..=6 {
            let (a_d, _) = zoh_discretize(n, 1.0, 0.01).unwrap();
            let l = observer_gain(&a_d, 1.0).unwrap();
            assert!(l.amax() <= 1e-12, "n={n} l={l}");
        }
    }

    #[test]
    fn first_order_observer_eigenvalues() {
        let (a_d, b_d) = zoh_discretize(1, 1.0, 0.001).unwrap();
        let l = observer_gain(&a_d, 0.9).unwrap();
        let (a_eso, _) = eso_matrices(&a_d, &b_d, &l).unwrap();
        // 2x2 eigenvalues from trace and determinant
        let tr = a_eso.trace();
        let det = a_eso.determinant();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        for lambda in [tr / 2.0 + disc, tr / 2.0 - disc] {
            assert!((lambda - 0.9).abs() < 1e-7, "{lambda}");
        }
        // mean of the pair is exact to rounding, and (A - zI)^2 vanishes
        assert!((tr / 2.0 - 0.9).abs() < 1e-12);
        let shifted = &a_eso - DMatrix::identity(2, 2) * 0.9;
        assert!((&shifted * &shifted).amax() < 1e-12);
    }

    #[test]
    fn second_order_buck_char_poly() {
        let spec = buck_spec(2);
        let z = (-5.0_f64 * 4000.0 * 2e-5).exp();
        let d = eso_design(&spec).unwrap();
        assert_eq!(d.z_eso, z);
        let cp = leverrier_faddeev(&d.a_eso).char_poly;
        assert!(max_rel_diff(&cp, &binomial_expansion(z, 3)) < 1e-9);
    }

    #[test]
    fn eso_matrix_assembly() {
        let (a_d, b_d) = zoh_discretize(2, 3.0, 0.1).unwrap();
        let zero = DVector::zeros(3);
        let (a, b) = eso_matrices(&a_d, &b_d, &zero).unwrap();
        assert_eq!(a, a_d);
        assert_eq!(b, b_d);

        // deadbeat first-order observer is nilpotent
        let (a_d, b_d) = zoh_discretize(1, 1.0, 1.0).unwrap();
        let l = observer_gain(&a_d, 0.0).unwrap();
        let (a, _) = eso_matrices(&a_d, &b_d, &l).unwrap();
        assert!((&a * &a).amax() < 1e-12);

        // last entry of b_eso is -l_{n+1} * b_d[0], generally nonzero
        let d = eso_design(&buck_spec(2)).unwrap();
        let expected = -d.l[2] * d.b_d[0];
        assert_eq!(d.b_eso[2], expected);
        assert!(expected != 0.0);
        assert_eq!(d.b_d[2], 0.0);

        assert!(matches!(eso_matrices(&a_d, &DVector::zeros(3), &l), Err(DesignError::ShapeMismatch(_))));
    }

    #[test]
    fn observer_gain_rejects_bad_pole() {
        let (a_d, _) = zoh_discretize(1, 1.0, 1.0).unwrap();
        assert_eq!(observer_gain(&a_d, 1.5), Err(DesignError::InvalidPole(1.5)));
        assert_eq!(observer_gain(&a_d, -0.1), Err(DesignError::InvalidPole(-0.1)));
    }

    #[test]
    fn singular_system_is_reported() {
        // a zero first row makes m^T = 0 and the system rank-deficient
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        match observer_gain_with_condition(&a, 0.5) {
            Err(DesignError::SingularSystem { condition }) => assert!(condition > MAX_CONDITION),
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn condition_is_moderate_for_buck_design() {
        let (a_d, _) = zoh_discretize(2, 1e4, 2e-5).unwrap();
        let g = observer_gain_with_condition(&a_d, 0.1).unwrap();
        assert!(g.condition < 1e3, "{}", g.condition);
    }

    #[test]
    fn first_order_worked_example() {
        // z_eso = 0.5 and T*omega = 0.1 with T = 1
        let spec = DesignSpec::new(1, 1.0, 1.0, 0.1, 2.0_f64.ln() / 0.1).unwrap();
        assert!((spec.z_eso() - 0.5).abs() < 1e-15);
        let c = fbtf_synthesize(&spec).unwrap();
        let expected_alpha = [-1.0, 0.25];
        let expected_beta = [-0.225, -0.025];
        assert!(max_rel_diff(&c.alpha, &expected_alpha) < 1e-12);
        assert!(max_rel_diff(&c.beta, &expected_beta) < 1e-12);
    }

    #[test]
    fn denominators_are_binomial() {
        for &(n, k_eso) in &[(1, 3.0), (2, 5.0), (2, 1.5)] {
            let spec = DesignSpec::new(n, 7.0, 1e-3, 300.0, k_eso).unwrap();
            let c = fbtf_synthesize(&spec).unwrap();
            let z = spec.z_eso();
            let expected: Vec<f64> =
                if n == 1 { vec![-2.0 * z, z * z] } else { vec![-3.0 * z, 3.0 * z * z, -z * z * z] };
            assert!(max_rel_diff(&c.alpha, &expected) < 1e-12, "{:?} vs {expected:?}", c.alpha);
        }
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(
            closed_form_coefficients(&DesignSpec::new(3, 1.0, 1.0, 1.0, 1.0).unwrap()),
            Err(DesignError::UnsupportedOrder(3))
        );
        // gamma_0 for n = 1, written out directly
        let spec = buck_spec(1);
        let c = closed_form_coefficients(&spec).unwrap();
        let (z, t, w, b0) = (spec.z_eso(), spec.ts, spec.omega_cl, spec.b0);
        let g0 = (t * w * (1.0 - z * z) + (1.0 - z) * (1.0 - z)) / (b0 * t);
        assert_eq!(c.gamma[0], g0);
        let spec2 = buck_spec(2);
        let c2 = closed_form_coefficients(&spec2).unwrap();
        let z = spec2.z_eso();
        let tw = spec2.omega_t();
        assert!((c2.beta[2] - 0.5 * tw * z.powi(3) * (4.0 - tw)).abs() < 1e-16);
    }

    #[test]
    fn closed_form_with_unit_pole() {
        // z_eso = 1 collapses every (1 - z) factor
        let spec = DesignSpec { order: 1, b0: 2.0, ts: 0.01, omega_cl: 5.0, k_eso: 1e-300 };
        assert_eq!(spec.z_eso(), 1.0);
        let c = closed_form_coefficients(&spec).unwrap();
        let tw = spec.omega_t();
        assert_eq!(c.beta, vec![tw, -tw]);
        assert_eq!(c.gamma, vec![0.0, 0.0]);
        // with z = 1 the observer gain is zero so the numerics agree
        let s = fbtf_synthesize(&spec).unwrap();
        assert!(s.gamma.iter().all(|g| g.abs() < 1e-12));
        assert!(max_rel_diff(&s.beta, &c.beta) < 1e-12);
    }

    #[test]
    fn synthesis_matches_closed_form_for_buck() {
        for n in [1, 2] {
            let spec = buck_spec(n);
            let s = fbtf_synthesize(&spec).unwrap();
            let t = closed_form_coefficients(&spec).unwrap();
            assert!(max_rel_diff(&s.alpha, &t.alpha) < 1e-11);
            assert!(max_rel_diff(&s.beta, &t.beta) < 1e-11);
            assert!(max_rel_diff(&s.gamma, &t.gamma) < 1e-11);
            assert!((s.feedforward - t.feedforward).abs() <= 1e-11 * t.feedforward.abs());
        }
    }

    #[test]
    fn identities_hold_for_higher_orders() {
        for n in 1..=8 {
            let spec = DesignSpec::new(n, 0.3, 1e-3, 50.0, 4.0).unwrap();
            let c = fbtf_synthesize(&spec).unwrap();
            assert_eq!(c.alpha.len(), n + 1);
            assert_eq!(c.beta.len(), n + 1);
            assert_eq!(c.gamma.len(), n + 1);
            for check in c.identity_checks() {
                assert!(check.holds(), "n={n}: {check:?}");
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let spec = DesignSpec::new(6, 1e-300, 1e-300, 1e300, 1.0).unwrap();
        assert!(fbtf_synthesize(&spec).is_err());
    }
}
