//! Finsler metrics as fields of Minkowski norms over a coordinate chart,
//! together with vector fields, flows and volume densities.

mod domain;
mod field;
mod homothety;
mod metric;
mod volume;

pub use domain::ChartDomain;
pub use field::{ConformalFactor, MatrixField, VectorFieldKind, VectorFieldSpec};
pub use homothety::{homothetic_dilation, verify_homothetic_volume_scaling, HomotheticEstimate, HOMOTHETY_THRESHOLD};
pub use metric::{zermelo_randers_coefficients, ChartedFinslerMetric, LagrangianDerivatives, NormField};
pub use volume::{randers_density, unit_ball_volume, VolumeDensity, VolumeMethod};
