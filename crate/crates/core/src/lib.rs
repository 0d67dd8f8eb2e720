//! Numerical Finsler geometry on coordinate charts, built around Zermelo
//! navigation by homothetic vector fields.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod correspondence;
pub mod error;
pub mod geodesics;
pub mod isoparametric;
pub mod linalg;
pub mod norm;
pub mod navigation;
pub mod ode;
pub mod scalar;
pub mod steps;

pub use error::{GeometryError, Result};
pub use correspondence::{HomotheticNavigation, TimeWarp};
pub use geodesics::{GeodesicOptions, GeodesicSolution, JacobiSolution};
pub use isoparametric::{ScalarField, ScalarFieldSpec, TransportedField};
pub use chart::{ChartDomain, ChartedFinslerMetric, MatrixField, NormField, VectorFieldSpec};
pub use linalg::Matrix;
pub use navigation::NavigationDatum;
pub use norm::{MinkowskiNorm, NormEvaluator, NormKind};
pub use scalar::{Jet, Lift, Real};
pub use steps::StepPolicy;

pub type Norm = MinkowskiNorm<f64>;
pub type Mat = Matrix<f64>;
pub type Metric = ChartedFinslerMetric<f64>;
pub type VectorField = VectorFieldSpec<f64>;
pub type Datum = NavigationDatum<f64>;
pub type Navigation = HomotheticNavigation<f64>;
pub type Warp = TimeWarp<f64>;
pub type Geodesic = GeodesicSolution<f64>;
pub type JacobiField = JacobiSolution<f64>;
pub type Function = ScalarFieldSpec<f64>;
