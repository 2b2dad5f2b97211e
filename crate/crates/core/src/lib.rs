//! Finite-element design toolkit for diamond phononic cavities and their
//! strain coupling to colour centres.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fem;
pub mod material;
pub mod mesh;
pub mod modes;
pub mod nv;
pub mod oracles;

pub use error::{Error, Result};
pub use material::{Frequency, IsotropicMaterial};
