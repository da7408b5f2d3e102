//! Corner scattering and transmission eigenfunctions for the isotropic Lame system.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod cgo;
pub mod cli;
pub mod eig;
pub mod elastic_fields;
pub mod geometry;
pub mod identities;
pub mod quadrature;
pub mod scattering;
pub mod specfun;

pub use error::{Error, Result};
