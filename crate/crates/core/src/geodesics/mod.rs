//! Geodesics in the space of metrics and their Bergman approximations.

pub mod bergman;
pub mod flat;
pub mod oracle;
pub mod rate;

pub use bergman::{domination, sup_distance, BergmanGeodesic, CanonicalWeight, DistanceGrid, Domination, SampledGeodesic};
pub use flat::FlatHermitianCurve;
pub use oracle::{GeodesicOracle, OracleConfig};
pub use rate::{rate_fit, RateFit, RateVerdict};
