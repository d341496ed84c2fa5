//! Constrained Willmore tori at desk scale.
//!
//! Elliptic functions, constrained elastic curves on S², their Hopf lifts,
//! (1,2)-equivariant tori from the associated family, and the mode-wise
//! second variation at homogeneous tori.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closure;
pub mod elastica;
pub mod equivariant;
pub mod error;
pub mod hopf;
pub mod mesh;
pub mod ode;
pub mod spectral;
pub mod stability;
pub mod weierstrass;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
