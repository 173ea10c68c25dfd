//! Minimal differentiable dense-math core.
//!
//! Forward and backward passes for exactly the primitives the router
//! needs (affine projections, tanh, softmax, cosine similarity, a
//! single-query multi-head attention block, and two fused loss ops),
//! plus a central-finite-difference gradient checker and an AdamW-style
//! optimizer. All arithmetic is f64; the model is small enough that
//! gradient checking, not throughput, sets the precision bar.

mod check;
mod optim;
mod tape;
mod tensor;

pub use check::finite_diff_check;
pub use optim::{OptConfig, OptState};
pub use tape::{multi_head_attention, AttentionVars, Gradients, Tape, VarId};
pub use tensor::Tensor2;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    tape::sigmoid(x)
}
