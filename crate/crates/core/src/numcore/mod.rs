//! Dense `f64` tensors with reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every primitive applied to its variables in execution
//! order; [`Tape::backward`] replays it in reverse, accumulating
//! vector-Jacobian products. One tape is built per loss evaluation and thrown
//! away afterwards. Evaluation-only passes use [`Tape::no_grad`], which keeps
//! values but records no backward state.

mod gradcheck;
pub mod suite;
pub mod kernels;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use suite::{check_primitives, PrimitiveCheck};
pub use kernels::{lstm_cell, masked_softmax, matmul, LstmState};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
