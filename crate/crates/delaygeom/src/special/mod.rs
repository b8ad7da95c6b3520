//! Special functions and quadrature shared by the analytical paths.

pub(crate) mod dd;

mod beta;
mod hyp;
mod quad;

pub use beta::{ln_gamma, regularized_incomplete_beta};
pub use hyp::{hyp2f1, interference_factor, interference_factor_real};
pub use quad::{quad_adaptive, quad_semi_infinite, quad_semi_infinite_complex, QuadOptions, QuadValue};

pub(crate) use hyp::interference_factor_dd;

/// Complex double-precision value used throughout the transform paths.
pub type Complex = num_complex::Complex64;
