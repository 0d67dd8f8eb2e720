//! Spray, geodesics, Jacobi fields and curvature of a charted Finsler metric.

mod curvature;
mod solution;
mod spray;

pub use curvature::{
    flag_curvature, flag_curvature_via_jacobi, kmax_kmin, riemann_operator, s_curvature, CurvatureRange,
    JacobiCurvature,
};
pub use solution::{
    covariant_derivative, integrate_geodesic, integrate_jacobi, integrate_jacobi_raw, variation_discrepancy,
    GeodesicOptions, GeodesicSolution, JacobiSolution,
};
pub use spray::{connection, spray, spray_values, SprayCoefficients};
pub(crate) use spray::spray_linearization;
