//! Curvature of the direct-image bundles `E = π_*(K ⊗ L^p)` and `F = π_*(L^p)`.

pub mod aform;
pub mod asymptotics;
pub mod curvature;
pub(crate) mod frame;
pub mod gradient;
pub mod path;

pub use aform::{a_form, a_matrix, AMatrix};
pub use asymptotics::{trace_a_limit, trace_asymptotics, AsymptoticRow, TraceTerms};
pub use curvature::{curvature_e, curvature_f, CurvatureReport};
pub use gradient::{c_geodesic, complex_gradient, VectorFieldData};
pub use path::{Coef, ComplexField, MetricPath, PathKind, PathPoint, Term};
