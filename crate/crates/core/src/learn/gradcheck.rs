//! Central-difference gradient estimates for verifying hand-written backward passes.

use crate::matrix::DenseMatrix;

/// Estimates `∂f/∂x` entry by entry with `(f(x + h) − f(x − h)) / 2h`.
pub fn central_difference(x: &DenseMatrix, h: f64, mut f: impl FnMut(&DenseMatrix) -> f64) -> DenseMatrix {
    let mut grad = DenseMatrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for k in 0..x.data().len() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + h;
        let plus = f(&probe);
        probe.data_mut()[k] = orig - h;
        let minus = f(&probe);
        probe.data_mut()[k] = orig;
        grad.data_mut()[k] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute difference when both are tiny.
pub fn relative_error(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let diff = a.sub(b).frobenius_norm();
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}
