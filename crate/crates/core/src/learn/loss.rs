use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Probabilities are clamped to this before taking a log.
pub const PROB_FLOOR: f64 = 1e-12;

/// What the rows passed to [`softmax_cross_entropy`] contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeInput {
    /// Unnormalized scores; a softmax is applied first.
    Logits,
    /// Rows that already sum to one.
    Probabilities,
}

/// Mean negative log-likelihood over `rows` and its gradient with respect to
/// the input. Rows outside `rows` receive a zero gradient.
pub fn softmax_cross_entropy(
    input: &DenseMatrix,
    kind: CeInput,
    labels: &[usize],
    rows: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if rows.is_empty() {
        return Err(Error::EmptyMask("cross-entropy rows"));
    }
    if labels.len() != input.rows() {
        return Err(Error::shape("softmax_cross_entropy", input.rows(), labels.len()));
    }
    let n = rows.len() as f64;
    let mut grad = DenseMatrix::zeros(input.rows(), input.cols());
    let mut loss = 0.0;
    match kind {
        CeInput::Logits => {
            let probs = input.softmax_rows();
            for &i in rows {
                let y = labels[i];
                loss -= probs.get(i, y).max(PROB_FLOOR).ln();
                let g = grad.row_mut(i);
                for (gv, &p) in g.iter_mut().zip(probs.row(i)) {
                    *gv += p / n;
                }
                g[y] -= 1.0 / n;
            }
        }
        CeInput::Probabilities => {
            for &i in rows {
                let y = labels[i];
                let p = input.get(i, y);
                loss -= p.max(PROB_FLOOR).ln();
                if p > PROB_FLOOR {
                    let g = grad.get(i, y) - 1.0 / (p * n);
                    grad.set(i, y, g);
                }
            }
        }
    }
    Ok((loss / n, grad))
}

/// `‖a − b‖_F` and its gradient with respect to `a`; zero gradient when the
/// two coincide.
pub fn frobenius_loss(a: &DenseMatrix, b: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    if !a.same_shape(b) {
        return Err(Error::shape(
            "frobenius_loss",
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    let diff = a.sub(b);
    let norm = diff.frobenius_norm();
    if norm == 0.0 {
        return Ok((0.0, DenseMatrix::zeros(a.rows(), a.cols())));
    }
    Ok((norm, diff.scale(1.0 / norm)))
}
