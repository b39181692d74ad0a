//! Reverse-mode differentiation over a scalar tape.
//!
//! Every loss in this crate, including the space and time derivatives of
//! network outputs that enter the residuals, can be written with the seven
//! primitives of [`OpKind`]. One [`Tape::backward`] sweep then yields exact
//! parameter gradients.

mod gradcheck;
mod tape;

pub use gradcheck::{central_difference, grad_check, relative_deviation, GradCheckReport};
pub use tape::{Gradients, NodeId, OpKind, Tape};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("non-finite {what} value {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{kind:?} takes {expected} operand(s), got {got}")]
    Arity {
        kind: OpKind,
        expected: usize,
        got: usize,
    },
    #[error("node {0} does not belong to this tape")]
    UnknownNode(usize),
}
