//! Dense `f64` tensors with a recording tape for reverse-mode gradients.
//!
//! Values live in [`Tensor`]; differentiable computation happens on a
//! [`Tape`], whose [`Var`] handles record every operation so that
//! [`Tape::backward`] can propagate gradients to the leaves. Learnable
//! weights are held in a [`ParamStore`] and registered on a tape with
//! [`Tape::param`].

pub mod check;
mod error;
mod kernels;
pub mod optim;
mod params;
mod tape;
mod tensor;

pub use error::{Result, TensorError};
pub use params::{ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
