//! Dense numerical kernel: tensors, named parameter stores, the primitives
//! the network is built from, Adam, and a finite-difference gradient checker.
//!
//! Everything is `f64`. Reductions run left to right in index order so that
//! results are bitwise reproducible.

mod adam;
mod gradcheck;
mod gru;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use gru::{gru_backward, gru_cell, gru_forward, GruGrads, GruParams, GRU_CACHE_BLOCKS};
pub use ops::{
    bce_grad_logit, bce_loss, dot, matvec, matvec_acc, matvec_t_acc, outer_acc, sigmoid, softmax,
    softmax_backward, PROB_CLAMP,
};
pub use tensor::{ParamStore, Tensor};
