//! Positive metrics on O(k) over the projective line and their Kähler data.

pub mod fiber;
pub mod functions;
pub mod kahler;
pub mod legendre;
pub mod point;
pub mod presets;
pub mod toric;

pub use fiber::{FiberMetric, Metric};
pub use functions::{FiberFunction, LinComb, ScalarField, SpherePoly};
pub use point::{Chart, Point};
pub use toric::ToricPotential;
