//! Numerical laboratory for modular commutation relations of half-sided inclusions,
//! their Weyl form, the free-field wedge model and its Fock layer.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod freefield1d;
pub mod ops_core;
pub mod relations;
pub mod schrodinger;
pub mod subspace;
pub mod wedgenet;

pub use error::{Error, Result};
pub use ops_core::{GridSpec, OperatorExpr, Rep, StateVector, Symbol};
