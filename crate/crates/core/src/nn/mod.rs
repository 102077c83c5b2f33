//! Dense tensors, reverse-mode autodiff, layers, losses and optimization.

mod gradcheck;
mod layers;
mod optim;
mod params;
mod tape;
mod tensor;

pub use gradcheck::grad_check;
pub use layers::{Activation, Dense, Gru, Mlp};
pub use optim::{Adam, AdamConfig, CyclicLr};
pub use params::{Bound, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
