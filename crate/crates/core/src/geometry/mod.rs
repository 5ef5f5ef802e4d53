//! Coverage geometry and the analytic local-connectivity model.
//!
//! A pair of neighbouring sensors at distance `x` can establish a key when
//! at least one third party lies within reach `ρ` of either endpoint. Reach
//! is `R` without relays (scenario A), `3R/2` for one relay in a sparse
//! field (B) and `2R` for one relay in a dense field (C). All coverage
//! coefficients are expressed in units of `πR²`.

mod area;
mod config;
mod connectivity;
mod montecarlo;
mod quadrature;

pub use area::{lens_area, neighbor_distance_pdf, union_area};
pub use config::{DeploymentConfig, Scenario};
pub use connectivity::{
    binomial_pmf, connectivity_curve, expected_coverage, local_connectivity, local_connectivity_analytic,
    third_parties_for_connectivity, ConnectivityEstimate, CoverageCoefficient, CurvePoint, CurveSweep,
};
pub use montecarlo::{coverage_monte_carlo, McEstimate};
pub use quadrature::adaptive_simpson;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("distance {x} outside [0, {radius}]")]
    Domain { x: f64, radius: f64 },
    #[error("invalid deployment: {0}")]
    InvalidConfig(String),
}
