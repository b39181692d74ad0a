//! Neural-network solvers for 1-D hyperbolic conservation laws.
//!
//! A solution network `u(t, x)` is trained on the residual of
//! `q_t + F(q)_x = 0`. In relaxed mode a second network `v(t, x)` carries
//! some flux components and is tied to `F(q)` by a separate penalty, so only
//! `v` is differentiated in space.
//!
//! ```
//! use relaxnn::systems::{relaxed_rows, Mode, ProblemId};
//! use relaxnn::trainer::default_mode;
//!
//! let id = ProblemId::EulerSod;
//! let mode = default_mode(id);
//! assert_eq!(relaxed_rows(id.spec().kind, mode).unwrap(), &[2]);
//! assert!(mode != Mode::Pinn);
//! ```
//!
//! The guide in `book/` covers each module with runnable examples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod fvref;
pub mod harness;
pub mod mlp;
pub mod output;
pub mod rng;
pub mod sampling;
pub mod systems;
pub mod trainer;
pub mod uq;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/autodiff.md")]
    mod autodiff {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/uncertainty.md")]
    mod uncertainty {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
