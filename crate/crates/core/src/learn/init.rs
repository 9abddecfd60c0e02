use rand::Rng;

use crate::matrix::DenseMatrix;

/// Glorot (Xavier) uniform initialization: `U(−a, a)` with `a = √(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> DenseMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..bound))
}
