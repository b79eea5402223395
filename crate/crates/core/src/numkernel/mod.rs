//! Dense numeric layer: matrices, two-layer perceptrons with analytic
//! backward passes, first-order optimizers, a finite-difference gradient
//! checker and the binary checkpoint format.

pub mod checkpoint;
pub mod gradcheck;
pub mod matrix;
pub mod mlp;
pub mod optim;

pub use gradcheck::grad_check;
pub use matrix::{dot, DenseMatrix};
pub use mlp::{Activation, MlpCache, MlpParams};
pub use optim::{Optimizer, OptimizerKind};

/// Logistic function in the branch form that never overflows `exp`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}
