//! Small dense-matrix helpers shared by the design routines.

use nalgebra::{DMatrix, DVector};

/// Coefficients of the resolvent of a square matrix `A`, obtained with the
/// Leverrier–Faddeev recursion.
///
/// With `N = dim(A)`:
///
/// ```text
/// det(zI - A) = sum_{k=0}^{N}   char_poly[k] * z^(N-k)      (char_poly[0] = 1)
/// adj(zI - A) = sum_{k=0}^{N-1} adjugate[k]  * z^(N-1-k)
/// ```
///
/// Dividing both by `z^N` gives the same coefficient lists in powers of
/// `z^-1` for `det(I - z^-1 A)` and `adj(I - z^-1 A)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub char_poly: Vec<f64>,
    pub adjugate: Vec<DMatrix<f64>>,
}

/// Runs the Leverrier–Faddeev recursion
/// `B_0 = I`, `c_k = -tr(A B_{k-1}) / k`, `B_k = A B_{k-1} + c_k I`.
pub fn leverrier_faddeev(a: &DMatrix<f64>) -> Resolvent {
    assert!(a.is_square(), "resolvent of a non-square matrix");
    let dim = a.nrows();
    let identity = DMatrix::<f64>::identity(dim, dim);

    let mut char_poly = Vec::with_capacity(dim + 1);
    let mut adjugate = Vec::with_capacity(dim);
    char_poly.push(1.0);

    let mut b = identity.clone();
    for k in 1..=dim {
        let ab = a * &b;
        let c = -ab.trace() / k as f64;
        char_poly.push(c);
        adjugate.push(b);
        b = ab + &identity * c;
    }
    // b now holds B_N, which is zero by Cayley–Hamilton; it is not needed.
    Resolvent { char_poly, adjugate }
}

/// Coefficients of `(z - root)^degree` in descending powers of `z`
/// (equivalently of `(1 - root z^-1)^degree` in ascending powers of `z^-1`).
pub fn binomial_expansion(root: f64, degree: usize) -> Vec<f64> {
    (0..=degree).map(|k| binomial(degree, k) as f64 * (-root).powi(k as i32)).collect()
}

/// `n choose k`, exact for the small orders used in controller design.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `v^T M`, returned as a column vector.
pub(crate) fn row_times(v: &DVector<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    m.tr_mul(v)
}

/// Largest absolute difference between two slices, scaled by the largest
/// magnitude found in `expected`. The floor keeps all-zero references finite.
pub fn max_rel_diff(actual: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(actual.len(), expected.len(), "length mismatch");
    let scale = expected.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(REL_FLOOR);
    actual.iter().zip(expected).fold(0.0_f64, |m, (a, e)| m.max((a - e).abs())) / scale
}

/// Floor used in every relative comparison denominator.
pub const REL_FLOOR: f64 = 1e-300;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pascal_rows() {
        assert_eq!((0..=4).map(|k| binomial(4, k)).collect::<Vec<_>>(), vec![1, 4, 6, 4, 1]);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(20, 10), 184_756);
    }

    #[test]
    fn expansion_of_shifted_power() {
        // (z - 2)^3 = z^3 - 6 z^2 + 12 z - 8
        assert_eq!(binomial_expansion(2.0, 3), vec![1.0, -6.0, 12.0, -8.0]);
    }

    #[test]
    fn faddeev_matches_known_polynomial() {
        // companion matrix of z^3 - 6z^2 + 11z - 6 = (z-1)(z-2)(z-3)
        let a = DMatrix::from_row_slice(3, 3, &[6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let r = leverrier_faddeev(&a);
        assert_eq!(r.char_poly, vec![1.0, -6.0, 11.0, -6.0]);
        assert_eq!(r.adjugate.len(), 3);
    }

    #[test]
    fn adjugate_reproduces_inverse() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, -0.2, 0.3, 0.9, 0.0, -0.4, 0.2, 0.7]);
        let r = leverrier_faddeev(&a);
        // evaluate at z = 1.7 and compare (zI - A) * adj / det with the identity
        let z: f64 = 1.7;
        let det: f64 = r.char_poly.iter().enumerate().map(|(k, c)| c * z.powi((3 - k) as i32)).sum();
        let adj =
            r.adjugate.iter().enumerate().fold(DMatrix::zeros(3, 3), |acc, (k, b)| acc + b * z.powi((2 - k) as i32));
        let prod = (DMatrix::identity(3, 3) * z - &a) * adj / det;
        assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-13);
    }
}
