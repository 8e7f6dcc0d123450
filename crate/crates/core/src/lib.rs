//! Moment-method construction of fast boundary controls for one-dimensional
//! parabolic and dispersive spectral control systems.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fit;
pub mod gram;
pub mod lemma;
pub mod multiplier;
pub mod mplinalg;
pub mod precision;
pub mod product;
pub mod quad;
pub mod signal;
pub mod simulation;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
