//! Finite-difference step sizes and solver tolerances in one place.
//!
//! Every residual reported by the verification routines is only meaningful
//! together with the steps that produced it, so the policy is carried around
//! explicitly and can be serialized into reports.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPolicy {
    /// Central-difference step in `x` for first derivatives of the spray.
    pub x_step: f64,
    /// Outer step for second derivatives of the spray (curvature).
    pub spray_second_step: f64,
    /// Step for Hessians of user-supplied norms without derivative support
    /// (Richardson-extrapolated central differences).
    pub custom_hessian_step: f64,
    /// Step in `t` for second derivatives along curves (Jacobi route).
    pub t_step: f64,
    /// Step in `t` for the S-curvature stencil.
    pub s_curvature_step: f64,
    /// Step in `t` for the homothety estimate.
    pub homothety_step: f64,
    /// Step in `x` for the Laplacian divergence.
    pub laplacian_step: f64,
    /// Step in `x` for differentials of scalar fields without closed form.
    pub differential_step: f64,
    /// Euclidean floor on `|y|` for tensor operations.
    pub y_floor: f64,
    /// Tolerance of the adaptive ODE integrator.
    pub ode_tolerance: f64,
    /// Angular nodes of the planar indicatrix quadrature.
    pub polar_nodes: usize,
    /// Gauss-Legendre nodes in `cos θ` for the indicatrix quadrature in
    /// `n = 3` (twice as many are used in the azimuth).
    pub spherical_nodes: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            x_step: 1e-5,
            spray_second_step: 1e-4,
            custom_hessian_step: f64::EPSILON.powf(1.0 / 6.0),
            t_step: 1e-3,
            s_curvature_step: 1e-2,
            homothety_step: 1e-5,
            laplacian_step: 1e-4,
            differential_step: 1e-6,
            y_floor: 1e-10,
            ode_tolerance: 1e-10,
            polar_nodes: 2048,
            spherical_nodes: 48,
        }
    }
}

impl StepPolicy {
    /// Named entries, in a fixed order, for reports.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("x_step", self.x_step),
            ("spray_second_step", self.spray_second_step),
            ("custom_hessian_step", self.custom_hessian_step),
            ("t_step", self.t_step),
            ("s_curvature_step", self.s_curvature_step),
            ("homothety_step", self.homothety_step),
            ("laplacian_step", self.laplacian_step),
            ("differential_step", self.differential_step),
            ("y_floor", self.y_floor),
            ("ode_tolerance", self.ode_tolerance),
            ("polar_nodes", self.polar_nodes as f64),
            ("spherical_nodes", self.spherical_nodes as f64),
        ]
    }
}
