use std::fmt;
use std::sync::Arc;

use crate::chart::{ChartDomain, MatrixField, VectorFieldSpec};
use crate::error::{GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::navigation::NavigationDatum;
use crate::norm::{self, MinkowskiNorm, NormEvaluator};
use crate::scalar::{Dispatch, Jet, Lift};
use crate::steps::StepPolicy;
use crate::Real;

/// How `x ↦ F(x, ·)` is represented.
#[derive(Clone)]
pub enum NormField<T: Real> {
    /// Riemannian metric `sqrt(yᵀ A(x) y)`.
    Quadratic(MatrixField<T>),
    /// `|y|_{A(x)} + ⟨b(x), y⟩`.
    Randers { a: MatrixField<T>, b: VectorFieldSpec<T> },
    /// Closed-form Randers metric navigated from a Riemannian `h` by `wind`.
    ZermeloRanders { h: MatrixField<T>, wind: VectorFieldSpec<T> },
    /// Metric defined implicitly by navigation from an arbitrary datum.
    Navigated(Arc<NavigationDatum<T>>),
    /// User-supplied `F(x, y)` through [`Dispatch::at_value`] and optionally
    /// [`Dispatch::at_jet`].
    Custom(Arc<dyn Dispatch<T> + Send + Sync>),
}

impl<T: Real> fmt::Debug for NormField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormField::Quadratic(a) => f.debug_tuple("Quadratic").field(a).finish(),
            NormField::Randers { a, b } => f.debug_struct("Randers").field("a", a).field("b", b).finish(),
            NormField::ZermeloRanders { h, wind } => {
                f.debug_struct("ZermeloRanders").field("h", h).field("wind", wind).finish()
            }
            NormField::Navigated(d) => f.debug_tuple("Navigated").field(&d.base().name).field(&d.wind().name).finish(),
            NormField::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A Finsler metric on a chart domain: the object all geometry consumes.
#[derive(Clone, Debug)]
pub struct ChartedFinslerMetric<T: Real> {
    pub name: String,
    dim: usize,
    domain: ChartDomain<T>,
    field: NormField<T>,
    policy: StepPolicy,
}

/// `L = F²` and its first and second partial derivatives at `(x, y)`.
#[derive(Clone, Debug)]
pub struct LagrangianDerivatives<T> {
    pub l: T,
    pub lx: Vec<T>,
    pub ly: Vec<T>,
    /// `lxy[(k, l)] = ∂²L/∂x^k∂y^l`.
    pub lxy: Matrix<T>,
    pub lyy: Matrix<T>,
}

/// Coefficients `(Ã, b̃)` of the Randers metric navigated from `sqrt(yᵀAy)`
/// by `w`, or `None` when `|w|_A ≥ 1`.
pub fn zermelo_randers_coefficients<S: Real>(a: &Matrix<S>, w: &[S]) -> Option<(Matrix<S>, Vec<S>)> {
    let wf = a.mul_vec(w);
    let lambda = S::one() - linalg::dot(w, &wf);
    if !(lambda > S::zero()) {
        return None;
    }
    let l2 = lambda * lambda;
    let n = w.len();
    let at = Matrix::from_fn(n, n, |i, j| (lambda * a[(i, j)] + wf[i] * wf[j]) / l2);
    let bt = wf.iter().map(|&v| -v / lambda).collect();
    Some((at, bt))
}

impl<T: Real> ChartedFinslerMetric<T> {
    pub fn new(name: &str, domain: ChartDomain<T>, field: NormField<T>) -> Result<Self> {
        let dim = domain.dim();
        let field_dim = match &field {
            NormField::Quadratic(a) => Some(a.dim()),
            NormField::Randers { a, b } => {
                if b.dim() != a.dim() {
                    return Err(GeometryError::DimensionMismatch { expected: a.dim(), got: b.dim() });
                }
                Some(a.dim())
            }
            NormField::ZermeloRanders { h, wind } => {
                if wind.dim() != h.dim() {
                    return Err(GeometryError::DimensionMismatch { expected: h.dim(), got: wind.dim() });
                }
                Some(h.dim())
            }
            NormField::Navigated(d) => Some(d.base().dim()),
            NormField::Custom(_) => None,
        };
        if let Some(fd) = field_dim {
            if fd != dim {
                return Err(GeometryError::DimensionMismatch { expected: dim, got: fd });
            }
        }
        Ok(ChartedFinslerMetric { name: name.to_string(), dim, domain, field, policy: StepPolicy::default() })
    }

    pub fn euclidean(dim: usize, domain: ChartDomain<T>) -> Self {
        Self::new("euclidean", domain, NormField::Quadratic(MatrixField::Constant(Matrix::identity(dim))))
            .expect("consistent dimensions")
    }

    pub fn quadratic(name: &str, domain: ChartDomain<T>, a: MatrixField<T>) -> Result<Self> {
        Self::new(name, domain, NormField::Quadratic(a))
    }

    pub fn randers(name: &str, domain: ChartDomain<T>, a: MatrixField<T>, b: VectorFieldSpec<T>) -> Result<Self> {
        Self::new(name, domain, NormField::Randers { a, b })
    }

    pub fn custom(name: &str, domain: ChartDomain<T>, f: Arc<dyn Dispatch<T> + Send + Sync>) -> Result<Self> {
        Self::new(name, domain, NormField::Custom(f))
    }

    pub fn with_policy(mut self, policy: StepPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain<T>) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: domain.dim() });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ChartDomain<T> {
        &self.domain
    }

    pub fn field(&self) -> &NormField<T> {
        &self.field
    }

    pub fn policy(&self) -> &StepPolicy {
        &self.policy
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.field, NormField::Quadratic(_))
    }

    /// Domain membership; navigated metrics also require admissibility.
    pub fn contains(&self, x: &[T]) -> bool {
        if !self.domain.contains(x) {
            return false;
        }
        match &self.field {
            NormField::Navigated(d) => d.admissible(x),
            _ => true,
        }
    }

    fn check_point(&self, x: &[T], y: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if y.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        Ok(())
    }

    /// `F(x, y)` at lifted scalars.
    pub fn value_at<S: Lift<T>>(&self, x: &[S], y: &[S]) -> Result<S> {
        match &self.field {
            NormField::Quadratic(a) => Ok(norm::quadratic_value(&a.eval(x)?, y)),
            NormField::Randers { a, b } => Ok(norm::randers_value(&a.eval(x)?, &b.value_at(x)?, y)),
            NormField::ZermeloRanders { h, wind } => {
                let (at, bt) = zermelo_randers_coefficients(&h.eval(x)?, &wind.value_at(x)?).ok_or({
                    GeometryError::NavigationUndefined { value: f64::NAN }
                })?;
                Ok(norm::randers_value(&at, &bt, y))
            }
            NormField::Navigated(d) => d.navigate_at(x, y),
            NormField::Custom(f) => S::dispatch(f.as_ref(), x, y).ok_or(GeometryError::JetUnavailable("custom metric")),
        }
    }

    /// `F(x, y)`.
    pub fn norm(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_point(x, y)?;
        if y.iter().all(|v| v.is_zero()) {
            return Ok(T::zero());
        }
        let v = self.value_at(x, y)?;
        if !v.is_finite() {
            return Err(GeometryError::NormEvaluationFailed);
        }
        Ok(v)
    }

    /// The Minkowski norm `F(x, ·)`.
    pub fn norm_at(&self, x: &[T]) -> Result<MinkowskiNorm<T>> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let floor = T::lit(self.policy.y_floor);
        let step = T::lit(self.policy.custom_hessian_step);
        let norm = match &self.field {
            NormField::Quadratic(a) => MinkowskiNorm::quadratic(a.eval(x)?)?,
            NormField::Randers { a, b } => MinkowskiNorm::randers(a.eval(x)?, b.value(x)?)?,
            NormField::ZermeloRanders { h, wind } => {
                let (at, bt) = zermelo_randers_coefficients(&h.eval(x)?, &wind.value(x)?).ok_or({
                    GeometryError::NavigationUndefined { value: f64::NAN }
                })?;
                MinkowskiNorm::randers(at, bt)?
            }
            NormField::Navigated(_) | NormField::Custom(_) => MinkowskiNorm::from_evaluator(
                self.dim,
                Arc::new(PointNorm { metric: self.clone(), x: x.to_vec() }),
            ),
        };
        Ok(norm.with_y_floor(floor).with_hessian_step(step))
    }

    pub fn fundamental_tensor(&self, x: &[T], y: &[T]) -> Result<Matrix<T>> {
        self.check_point(x, y)?;
        self.norm_at(x)?.fundamental_tensor(y)
    }

    pub fn inner(&self, x: &[T], y: &[T], u: &[T], v: &[T]) -> Result<T> {
        Ok(self.fundamental_tensor(x, y)?.bilinear(u, v))
    }

    pub fn orthogonal_complement_basis(&self, x: &[T], y: &[T]) -> Result<Vec<Vec<T>>> {
        Ok(norm::complement_basis(&self.fundamental_tensor(x, y)?, y))
    }

    /// `y` rescaled to `F(x, y) = 1`.
    pub fn normalize(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        let f = self.norm(x, y)?;
        if !(f > T::zero()) {
            return Err(GeometryError::DegenerateVector { norm: linalg::norm(y).approx() });
        }
        Ok(linalg::scale(y, T::one() / f))
    }

    /// Derivatives of `F²`: exact through jets when every ingredient
    /// supports them, central differences otherwise.
    pub fn lagrangian(&self, x: &[T], y: &[T]) -> Result<LagrangianDerivatives<T>> {
        self.check_point(x, y)?;
        let n = self.dim;
        let floor = T::lit(self.policy.y_floor);
        if !(linalg::norm(y) >= floor) {
            return Err(GeometryError::DegenerateVector { norm: linalg::norm(y).approx() });
        }
        if 2 * n <= crate::scalar::JET_VARS {
            let xj = Jet::seed(x, 0, 2 * n);
            let yj = Jet::seed(y, n, 2 * n);
            match self.value_at::<Jet<T>>(&xj, &yj) {
                Ok(f) => {
                    let l = f * f;
                    if !l.val().is_finite() {
                        return Err(GeometryError::NormEvaluationFailed);
                    }
                    return Ok(LagrangianDerivatives {
                        l: l.val(),
                        lx: (0..n).map(|k| l.grad(k)).collect(),
                        ly: (0..n).map(|k| l.grad(n + k)).collect(),
                        lxy: Matrix::from_fn(n, n, |k, m| l.hess(k, n + m)),
                        lyy: Matrix::from_fn(n, n, |k, m| l.hess(n + k, n + m)),
                    });
                }
                Err(GeometryError::JetUnavailable(_)) => {}
                Err(e) => return Err(e),
            }
        }
        self.lagrangian_fd(x, y)
    }

    fn lagrangian_fd(&self, x: &[T], y: &[T]) -> Result<LagrangianDerivatives<T>> {
        let n = self.dim;
        let ly_at = |p: &[T]| -> Result<(T, Vec<T>)> {
            let norm = self.norm_at(p)?;
            let f = norm.value(y)?;
            let grad = norm.gradient(y)?;
            Ok((f * f, linalg::scale(&grad, T::lit(2.0) * f)))
        };
        let (l, ly) = ly_at(x)?;
        let lyy = self.norm_at(x)?.fundamental_tensor(y)?.scale(T::lit(2.0));
        let h = T::lit(self.policy.x_step) * self.domain.scale().max(T::one());
        let mut lx = vec![T::zero(); n];
        let mut lxy = Matrix::zeros(n, n);
        for k in 0..n {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[k] += h;
            q[k] -= h;
            let (lp, gp) = ly_at(&p)?;
            let (lq, gq) = ly_at(&q)?;
            lx[k] = (lp - lq) / (T::lit(2.0) * h);
            for m in 0..n {
                lxy[(k, m)] = (gp[m] - gq[m]) / (T::lit(2.0) * h);
            }
        }
        Ok(LagrangianDerivatives { l, lx, ly, lxy, lyy })
    }
}

/// `F(x, ·)` at a frozen point, for metrics without a closed-form kind.
struct PointNorm<T: Real> {
    metric: ChartedFinslerMetric<T>,
    x: Vec<T>,
}

impl<T: Real> NormEvaluator<T> for PointNorm<T> {
    fn eval(&self, y: &[T]) -> T {
        self.metric.value_at(&self.x, y).unwrap_or_else(|_| T::nan())
    }

    fn eval_jet(&self, y: &[Jet<T>]) -> Option<Jet<T>> {
        let x: Vec<Jet<T>> = self.x.iter().map(|&v| Jet::constant(v)).collect();
        self.metric.value_at(&x, y).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ConformalFactor;

    struct EuclidCustom;
    impl Dispatch<f64> for EuclidCustom {
        fn at_value(&self, _x: &[f64], y: &[f64]) -> Option<f64> {
            Some((1.0 + 0.0 * _x[0]) * (y[0] * y[0] + y[1] * y[1]).sqrt())
        }
    }

    #[test]
    fn evaluation_by_kind() {
        let dom = ChartDomain::unit_ball(2, 0.9);
        let e = ChartedFinslerMetric::<f64>::euclidean(2, dom.clone());
        assert_eq!(e.norm(&[0.1, 0.2], &[3.0, 4.0]).unwrap(), 5.0);
        let r = ChartedFinslerMetric::randers(
            "r",
            dom.clone(),
            MatrixField::Constant(Matrix::identity(2)),
            VectorFieldSpec::translation(vec![0.5, 0.0]),
        )
        .unwrap();
        assert_eq!(r.norm(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.5);
        let c = ChartedFinslerMetric::custom("c", dom, Arc::new(EuclidCustom)).unwrap();
        let g = c.fundamental_tensor(&[0.1, 0.1], &[1.0, 0.0]).unwrap();
        assert!(g.sub(&Matrix::identity(2)).max_abs() < 1e-8);
    }

    #[test]
    fn zermelo_randers_matches_funk_formula() {
        // navigation from the Euclidean metric by V(x) = x gives the Funk metric
        let x = [0.3f64, -0.2];
        let y = [0.7, 0.4];
        let (a, b) = zermelo_randers_coefficients(&Matrix::identity(2), &x).unwrap();
        let f = norm::randers_value(&a, &b, &y);
        let x2 = linalg::dot(&x, &x);
        let xy = linalg::dot(&x, &y);
        let y2 = linalg::dot(&y, &y);
        let funk = ((xy * xy + (1.0 - x2) * y2).sqrt() - xy) / (1.0 - x2);
        assert!((f - funk).abs() < 1e-14);
    }

    #[test]
    fn lagrangian_jets_match_fallback() {
        let dom = ChartDomain::unit_ball(2, 0.9);
        let m = ChartedFinslerMetric::quadratic(
            "conf",
            dom,
            MatrixField::Conformal { base: Matrix::identity(2), factor: ConformalFactor::Exponential { k: vec![1.0, 0.3] } },
        )
        .unwrap();
        let x = [0.2f64, -0.1];
        let y = [0.6, 0.8];
        let exact = m.lagrangian(&x, &y).unwrap();
        let fd = m.lagrangian_fd(&x, &y).unwrap();
        assert!((exact.l - fd.l).abs() < 1e-14);
        assert!(linalg::max_abs_diff(&exact.lx, &fd.lx) < 1e-8);
        assert!(linalg::max_abs_diff(&exact.ly, &fd.ly) < 1e-12);
        assert!(exact.lxy.sub(&fd.lxy).max_abs() < 1e-8);
        assert!(exact.lyy.sub(&fd.lyy).max_abs() < 1e-12);
    }
}
