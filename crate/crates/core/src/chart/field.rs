use std::fmt;
use std::sync::Arc;

use crate::chart::ChartDomain;
use crate::error::{GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::ode::{self, OdeOptions, OdeStatus};
use crate::scalar::{Dispatch, Jet, Lift};
use crate::Real;

/// Positive scalar multiplier of a conformal metric.
#[derive(Clone)]
pub enum ConformalFactor<T: Real> {
    /// `exp(2⟨k, x⟩)`.
    Exponential { k: Vec<T> },
    /// `4 / (1 + κ|x|²)²`, constant curvature `κ` on its domain.
    Stereographic { curvature: T },
    /// `|x|^{2p}`, homogeneous of degree `2p`.
    Power { exponent: T },
    /// User function of `x`, evaluated through [`Dispatch::at_value`] /
    /// [`Dispatch::at_jet`] with an empty `y`.
    Custom(Arc<dyn Dispatch<T> + Send + Sync>),
}

impl<T: Real> fmt::Debug for ConformalFactor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalFactor::Exponential { k } => write!(f, "Exponential({k:?})"),
            ConformalFactor::Stereographic { curvature } => write!(f, "Stereographic({curvature})"),
            ConformalFactor::Power { exponent } => write!(f, "Power({exponent})"),
            ConformalFactor::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<T: Real> ConformalFactor<T> {
    pub fn eval<S: Lift<T>>(&self, x: &[S]) -> Result<S> {
        match self {
            ConformalFactor::Exponential { k } => {
                let s: S = k.iter().zip(x).map(|(&ki, &xi)| S::lift(ki) * xi).sum();
                Ok((S::lit(2.0) * s).exp())
            }
            ConformalFactor::Stereographic { curvature } => {
                let r2: S = x.iter().map(|&v| v * v).sum();
                let d = S::one() + S::lift(*curvature) * r2;
                Ok(S::lit(4.0) / (d * d))
            }
            ConformalFactor::Power { exponent } => {
                let r2: S = x.iter().map(|&v| v * v).sum();
                Ok(r2.powf(S::lift(*exponent)))
            }
            ConformalFactor::Custom(d) => S::dispatch(d.as_ref(), x, &[]).ok_or(GeometryError::JetUnavailable("conformal factor")),
        }
    }
}

/// Point-dependent symmetric matrix `A(x)`.
#[derive(Clone, Debug)]
pub enum MatrixField<T: Real> {
    Constant(Matrix<T>),
    Conformal { base: Matrix<T>, factor: ConformalFactor<T> },
}

impl<T: Real> MatrixField<T> {
    pub fn dim(&self) -> usize {
        match self {
            MatrixField::Constant(a) => a.rows(),
            MatrixField::Conformal { base, .. } => base.rows(),
        }
    }

    pub fn eval<S: Lift<T>>(&self, x: &[S]) -> Result<Matrix<S>> {
        match self {
            MatrixField::Constant(a) => Ok(a.map(S::lift)),
            MatrixField::Conformal { base, factor } => {
                let phi = factor.eval(x)?;
                Ok(base.map(|v| S::lift(v) * phi))
            }
        }
    }
}

#[derive(Clone)]
pub enum VectorFieldKind<T: Real> {
    /// `V(x) = M x + b`; the flow is computed exactly.
    Affine { m: Matrix<T>, b: Vec<T> },
    /// User field evaluated through [`Dispatch::vec_at_value`] /
    /// [`Dispatch::vec_at_jet`]; flows are integrated numerically.
    Custom { dim: usize, field: Arc<dyn Dispatch<T> + Send + Sync> },
}

/// Smooth vector field on the chart, optionally carrying a verified
/// homothetic dilation.
#[derive(Clone)]
pub struct VectorFieldSpec<T: Real> {
    pub name: String,
    kind: VectorFieldKind<T>,
    dilation: Option<T>,
    flow_tolerance: T,
}

impl<T: Real> fmt::Debug for VectorFieldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("VectorFieldSpec");
        d.field("name", &self.name);
        match &self.kind {
            VectorFieldKind::Affine { m, b } => d.field("m", m).field("b", b),
            VectorFieldKind::Custom { dim, .. } => d.field("custom_dim", dim),
        };
        d.field("dilation", &self.dilation).finish()
    }
}

impl<T: Real> VectorFieldSpec<T> {
    fn new(name: &str, kind: VectorFieldKind<T>) -> Self {
        VectorFieldSpec { name: name.to_string(), kind, dilation: None, flow_tolerance: T::lit(1e-10) }
    }

    pub fn affine(m: Matrix<T>, b: Vec<T>) -> Result<Self> {
        if !m.is_square() || m.rows() != b.len() {
            return Err(GeometryError::DimensionMismatch { expected: m.rows(), got: b.len() });
        }
        Ok(Self::new("affine", VectorFieldKind::Affine { m, b }))
    }

    /// `V(x) = λx + Ax + b`.
    pub fn affine_parts(lambda: T, a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        let n = a.rows();
        Self::affine(Matrix::identity(n).scale(lambda).add(&a), b)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new("zero", VectorFieldKind::Affine { m: Matrix::zeros(dim, dim), b: vec![T::zero(); dim] })
    }

    /// `V(x) = λx`.
    pub fn radial(dim: usize, lambda: T) -> Self {
        Self::new("radial", VectorFieldKind::Affine { m: Matrix::identity(dim).scale(lambda), b: vec![T::zero(); dim] })
    }

    /// `V(x) = ω(−x², x¹, 0, …)`, rotation in the first coordinate plane.
    pub fn rotation(dim: usize, omega: T) -> Self {
        assert!(dim >= 2, "rotation needs at least two dimensions");
        let mut m = Matrix::zeros(dim, dim);
        m[(0, 1)] = -omega;
        m[(1, 0)] = omega;
        Self::new("rotation", VectorFieldKind::Affine { m, b: vec![T::zero(); dim] })
    }

    /// Constant field `V ≡ b`.
    pub fn translation(b: Vec<T>) -> Self {
        let n = b.len();
        Self::new("translation", VectorFieldKind::Affine { m: Matrix::zeros(n, n), b })
    }

    pub fn custom(dim: usize, field: Arc<dyn Dispatch<T> + Send + Sync>) -> Self {
        Self::new("custom", VectorFieldKind::Custom { dim, field })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn kind(&self) -> &VectorFieldKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            VectorFieldKind::Affine { b, .. } => b.len(),
            VectorFieldKind::Custom { dim, .. } => *dim,
        }
    }

    pub fn dilation(&self) -> Option<T> {
        self.dilation
    }

    pub fn with_dilation(mut self, c: T) -> Self {
        self.dilation = Some(c);
        self
    }

    pub fn set_dilation(&mut self, c: Option<T>) {
        self.dilation = c;
    }

    /// Same field multiplied by `s`; a verified dilation scales along.
    pub fn scaled(&self, s: T) -> Self {
        let kind = match &self.kind {
            VectorFieldKind::Affine { m, b } => VectorFieldKind::Affine { m: m.scale(s), b: linalg::scale(b, s) },
            VectorFieldKind::Custom { dim, field } => VectorFieldKind::Custom {
                dim: *dim,
                field: Arc::new(Scaled { inner: field.clone(), s }),
            },
        };
        VectorFieldSpec { name: self.name.clone(), kind, dilation: self.dilation.map(|c| c * s), flow_tolerance: self.flow_tolerance }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            VectorFieldKind::Affine { m, b } => m.max_abs().is_zero() && b.iter().all(|v| v.is_zero()),
            VectorFieldKind::Custom { .. } => false,
        }
    }

    pub fn value_at<S: Lift<T>>(&self, x: &[S]) -> Result<Vec<S>> {
        match &self.kind {
            VectorFieldKind::Affine { m, b } => {
                let mx = m.map(S::lift).mul_vec(x);
                Ok(mx.iter().zip(b).map(|(&p, &q)| p + S::lift(q)).collect())
            }
            VectorFieldKind::Custom { field, .. } => {
                S::dispatch_vec(field.as_ref(), x).ok_or(GeometryError::JetUnavailable("vector field"))
            }
        }
    }

    pub fn value(&self, x: &[T]) -> Result<Vec<T>> {
        let v = self.value_at(x)?;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidInput("vector field returned a non-finite value".into()));
        }
        Ok(v)
    }

    /// `∂V/∂x`, exact for affine fields, by jets or central differences
    /// otherwise.
    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>> {
        let n = self.dim();
        match &self.kind {
            VectorFieldKind::Affine { m, .. } => Ok(m.clone()),
            VectorFieldKind::Custom { .. } => {
                let xj = Jet::seed(x, 0, n);
                if let Ok(v) = self.value_at::<Jet<T>>(&xj) {
                    return Ok(Matrix::from_fn(n, n, |i, j| v[i].grad(j)));
                }
                let h = T::lit(1e-6) * linalg::norm(x).max(T::one());
                let mut jac = Matrix::zeros(n, n);
                for j in 0..n {
                    let mut p = x.to_vec();
                    let mut q = x.to_vec();
                    p[j] += h;
                    q[j] -= h;
                    let (vp, vq) = (self.value(&p)?, self.value(&q)?);
                    for i in 0..n {
                        jac[(i, j)] = (vp[i] - vq[i]) / (T::lit(2.0) * h);
                    }
                }
                Ok(jac)
            }
        }
    }

    /// `Ψ_t(x)` and its tangent map, without a domain check.
    pub fn flow(&self, x: &[T], t: T) -> Result<(Vec<T>, Matrix<T>)> {
        self.flow_checked(x, t, None)
    }

    /// `Ψ_t(x)` and its tangent map; fails with "flow left chart" when the
    /// trajectory exits `domain`.
    pub fn flow_within(&self, x: &[T], t: T, domain: &ChartDomain<T>) -> Result<(Vec<T>, Matrix<T>)> {
        self.flow_checked(x, t, Some(domain))
    }

    fn flow_checked(&self, x: &[T], t: T, domain: Option<&ChartDomain<T>>) -> Result<(Vec<T>, Matrix<T>)> {
        let n = self.dim();
        if x.len() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: x.len() });
        }
        match &self.kind {
            VectorFieldKind::Affine { m, b } => {
                if let Some(d) = domain {
                    // the exact flow has no trajectory to watch, so probe it
                    for k in 1..=8 {
                        let tk = t * T::from_usize(k).expect("k") / T::lit(8.0);
                        let (p, _) = affine_flow(m, b, x, tk);
                        if !d.contains(&p) {
                            return Err(GeometryError::FlowLeftChart { t: tk.approx() });
                        }
                    }
                }
                Ok(affine_flow(m, b, x, t))
            }
            VectorFieldKind::Custom { .. } => self.numeric_flow(x, t, domain),
        }
    }

    /// Joint integration of `ẋ = V(x)` and `Ḋ = (∂V/∂x) D`, `D(0) = I`.
    pub fn numeric_flow(&self, x: &[T], t: T, domain: Option<&ChartDomain<T>>) -> Result<(Vec<T>, Matrix<T>)> {
        let n = self.dim();
        let mut y0 = x.to_vec();
        let id = Matrix::<T>::identity(n);
        for i in 0..n {
            y0.extend_from_slice(id.row(i));
        }
        if t.is_zero() {
            return Ok((x.to_vec(), id));
        }
        let rhs = |_t: T, y: &[T]| -> Result<Vec<T>> {
            let p = &y[..n];
            let mut out = self.value(p)?;
            let jac = self.jacobian(p)?;
            let d = Matrix::from_fn(n, n, |i, j| y[n + i * n + j]);
            let jd = jac.matmul(&d);
            for i in 0..n {
                out.extend_from_slice(jd.row(i));
            }
            Ok(out)
        };
        let opts = OdeOptions::with_tolerance(self.flow_tolerance);
        let sol = ode::integrate(rhs, T::zero(), &y0, &[t], &opts, |_, y| domain.is_none_or(|d| d.contains(&y[..n])))
            .map_err(|e| GeometryError::FlowIntegrationFailed(e.to_string()))?;
        match sol.status {
            OdeStatus::Completed => {
                let y = &sol.states[0];
                Ok((y[..n].to_vec(), Matrix::from_fn(n, n, |i, j| y[n + i * n + j])))
            }
            OdeStatus::Stopped { t, reason } => {
                if reason == "left domain" {
                    Err(GeometryError::FlowLeftChart { t })
                } else {
                    Err(GeometryError::FlowIntegrationFailed(reason))
                }
            }
        }
    }
}

struct Scaled<T: Real> {
    inner: Arc<dyn Dispatch<T> + Send + Sync>,
    s: T,
}

impl<T: Real> Dispatch<T> for Scaled<T> {
    fn vec_at_value(&self, x: &[T]) -> Option<Vec<T>> {
        self.inner.vec_at_value(x).map(|v| linalg::scale(&v, self.s))
    }
    fn vec_at_jet(&self, x: &[Jet<T>]) -> Option<Vec<Jet<T>>> {
        self.inner.vec_at_jet(x).map(|v| v.into_iter().map(|c| c * Jet::constant(self.s)).collect())
    }
}

/// Exact flow of `ẋ = Mx + b` through the augmented matrix exponential.
fn affine_flow<T: Real>(m: &Matrix<T>, b: &[T], x: &[T], t: T) -> (Vec<T>, Matrix<T>) {
    let n = b.len();
    let aug = Matrix::from_fn(n + 1, n + 1, |i, j| {
        if i == n {
            T::zero()
        } else if j == n {
            b[i] * t
        } else {
            m[(i, j)] * t
        }
    });
    let e = aug.exp();
    let d = Matrix::from_fn(n, n, |i, j| e[(i, j)]);
    let mut p = d.mul_vec(x);
    for (i, pi) in p.iter_mut().enumerate() {
        *pi += e[(i, n)];
    }
    (p, d)
}
