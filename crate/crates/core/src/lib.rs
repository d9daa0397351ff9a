//! Spectral, asymptotic and foliation analysis of regular minimal hypercones.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cone;
pub mod error;
pub mod foliation;
pub mod io;
pub mod numeric;

pub use error::{ConeError, Result};
pub mod modes;
pub mod radial;
pub mod spectral;
pub mod weighted;
