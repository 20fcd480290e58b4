//! Curvature of direct-image bundles and Bergman-kernel geodesics on the
//! projective line with `L = O(k)`.

pub mod direct_image;
pub mod engine;
pub mod error;
pub mod functionals;
pub mod geodesics;
pub mod geometry;
pub mod jet;
pub mod par;
pub mod quadrature;
pub mod spectra;

pub use error::{LabError, Result};
