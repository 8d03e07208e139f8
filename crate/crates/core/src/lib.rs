//! Numerics for Carleman ultraholomorphic classes.
//!
//! Strongly regular sequences and their associated functions, index
//! estimators, proximate-order weights and flat functions, Laplace-type
//! kernels with their moment sequences, and the truncated Laplace extension
//! operator that inverts the asymptotic Borel map.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extension;
pub mod growth;
pub mod moments;
pub mod numeric;
pub mod par;
pub mod proximate;
pub mod quadrature;
pub mod sequences;

pub use error::{Error, Result};
pub use growth::GrowthProfile;
pub use sequences::Sequence;
