//! Minkowski norms on a single tangent space.

use std::fmt;
use std::sync::Arc;

use crate::error::{to_f64s, GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Dispatch, Jet, Lift};
use crate::steps::StepPolicy;
use crate::Real;

/// User-supplied positively 1-homogeneous function `y ↦ F(y)`.
///
/// Implementors may additionally evaluate at jets; the fundamental tensor is
/// then exact instead of finite-differenced.
pub trait NormEvaluator<T: Real>: Send + Sync {
    fn eval(&self, y: &[T]) -> T;
    fn eval_jet(&self, _y: &[Jet<T>]) -> Option<Jet<T>> {
        None
    }
}

struct FnNorm<F>(F);

impl<T: Real, F: Fn(&[T]) -> T + Send + Sync> NormEvaluator<T> for FnNorm<F> {
    fn eval(&self, y: &[T]) -> T {
        (self.0)(y)
    }
}

struct Adapter<'a, T: Real>(&'a dyn NormEvaluator<T>);

impl<T: Real> Dispatch<T> for Adapter<'_, T> {
    fn at_value(&self, _x: &[T], y: &[T]) -> Option<T> {
        Some(self.0.eval(y))
    }
    fn at_jet(&self, _x: &[Jet<T>], y: &[Jet<T>]) -> Option<Jet<T>> {
        self.0.eval_jet(y)
    }
}

#[derive(Clone)]
pub enum NormKind<T: Real> {
    Quadratic { a: Matrix<T> },
    Randers { a: Matrix<T>, b: Vec<T> },
    Custom(Arc<dyn NormEvaluator<T>>),
}

impl<T: Real> fmt::Debug for NormKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Quadratic { a } => f.debug_struct("Quadratic").field("a", a).finish(),
            NormKind::Randers { a, b } => f.debug_struct("Randers").field("a", a).field("b", b).finish(),
            NormKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A Minkowski norm `F` on `ℝⁿ`.
#[derive(Clone, Debug)]
pub struct MinkowskiNorm<T: Real> {
    dim: usize,
    kind: NormKind<T>,
    hessian_step: T,
    y_floor: T,
}

/// `sqrt(yᵀ A y)` at any liftable scalar.
pub fn quadratic_value<S: Real>(a: &Matrix<S>, y: &[S]) -> S {
    let q = a.bilinear(y, y);
    if q <= S::zero() {
        S::zero()
    } else {
        q.sqrt()
    }
}

/// `sqrt(yᵀ A y) + ⟨b, y⟩` at any liftable scalar.
pub fn randers_value<S: Real>(a: &Matrix<S>, b: &[S], y: &[S]) -> S {
    quadratic_value(a, y) + linalg::dot(b, y)
}

/// Closed-form fundamental tensor of a Randers norm.
pub fn randers_tensor<T: Real>(a: &Matrix<T>, b: &[T], y: &[T]) -> Matrix<T> {
    let ay = a.mul_vec(y);
    let alpha = linalg::dot(y, &ay).sqrt();
    let f = alpha + linalg::dot(b, y);
    let ai: Vec<T> = ay.iter().map(|&v| v / alpha).collect();
    let fi: Vec<T> = ai.iter().zip(b).map(|(&p, &q)| p + q).collect();
    let ratio = f / alpha;
    Matrix::from_fn(y.len(), y.len(), |i, j| ratio * (a[(i, j)] - ai[i] * ai[j]) + fi[i] * fi[j])
}

/// `sqrt(bᵀ A⁻¹ b)`, the dual length of `b`.
pub fn dual_length<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<T> {
    let w = a.solve(b)?;
    Ok(linalg::dot(b, &w).max(T::zero()).sqrt())
}

fn check_spd<T: Real>(a: &Matrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(GeometryError::InvalidInput("matrix must be square".into()));
    }
    let scale = a.max_abs().max(T::one());
    if a.max_asymmetry() > T::lit(1e-12) * scale {
        return Err(GeometryError::InvalidInput("matrix must be symmetric".into()));
    }
    if !a.is_positive_definite() {
        return Err(GeometryError::NotStronglyConvex("matrix is not positive-definite".into()));
    }
    Ok(())
}

impl<T: Real> MinkowskiNorm<T> {
    fn with_kind(dim: usize, kind: NormKind<T>) -> Self {
        let policy = StepPolicy::default();
        MinkowskiNorm { dim, kind, hessian_step: T::lit(policy.custom_hessian_step), y_floor: T::lit(policy.y_floor) }
    }

    pub fn quadratic(a: Matrix<T>) -> Result<Self> {
        check_spd(&a)?;
        Ok(Self::with_kind(a.rows(), NormKind::Quadratic { a }))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::with_kind(dim, NormKind::Quadratic { a: Matrix::identity(dim) })
    }

    /// `F(y) = |y|_A + ⟨b, y⟩`; rejected unless `|b|_{A⁻¹} < 1 − 1e-12`.
    pub fn randers(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        check_spd(&a)?;
        if b.len() != a.rows() {
            return Err(GeometryError::DimensionMismatch { expected: a.rows(), got: b.len() });
        }
        let len = dual_length(&a, &b)?;
        if !(len < T::one() - T::lit(1e-12)) {
            return Err(GeometryError::NotStronglyConvex(format!("|b| = {} in the dual norm of A", len.approx())));
        }
        Ok(Self::with_kind(a.rows(), NormKind::Randers { a, b }))
    }

    pub fn custom<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Self::with_kind(dim, NormKind::Custom(Arc::new(FnNorm(f))))
    }

    pub fn from_evaluator(dim: usize, eval: Arc<dyn NormEvaluator<T>>) -> Self {
        Self::with_kind(dim, NormKind::Custom(eval))
    }

    pub fn with_hessian_step(mut self, step: T) -> Self {
        self.hessian_step = step;
        self
    }

    pub fn with_y_floor(mut self, floor: T) -> Self {
        self.y_floor = floor;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind<T> {
        &self.kind
    }

    fn check_dim(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// Evaluates `F` at lifted scalars; `None` when a custom evaluator has no
    /// support for them.
    pub fn value_at<S: Lift<T>>(&self, y: &[S]) -> Option<S> {
        match &self.kind {
            NormKind::Quadratic { a } => Some(quadratic_value(&a.map(S::lift), y)),
            NormKind::Randers { a, b } => Some(randers_value(&a.map(S::lift), &linalg::lift_vec(b), y)),
            NormKind::Custom(e) => S::dispatch(&Adapter(e.as_ref()), &[], y),
        }
    }

    pub fn value(&self, y: &[T]) -> Result<T> {
        self.check_dim(y)?;
        if y.iter().all(|v| v.is_zero()) {
            return Ok(T::zero());
        }
        let v = self.value_at(y).ok_or(GeometryError::NormEvaluationFailed)?;
        if !v.is_finite() {
            return Err(GeometryError::NormEvaluationFailed);
        }
        Ok(v)
    }

    fn check_floor(&self, y: &[T]) -> Result<()> {
        self.check_dim(y)?;
        let n = linalg::norm(y);
        if !(n >= self.y_floor) {
            return Err(GeometryError::DegenerateVector { norm: n.approx() });
        }
        Ok(())
    }

    /// Jet of `F²` in `y`, when the kind supports it.
    fn square_jet(&self, y: &[T]) -> Option<Jet<T>> {
        let yj = Jet::seed(y, 0, self.dim);
        self.value_at::<Jet<T>>(&yj).map(|f| f * f)
    }

    /// `∂F/∂y`.
    pub fn gradient(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_floor(y)?;
        match &self.kind {
            NormKind::Quadratic { a } => {
                let ay = a.mul_vec(y);
                let alpha = linalg::dot(y, &ay).sqrt();
                Ok(linalg::scale(&ay, T::one() / alpha))
            }
            NormKind::Randers { a, b } => {
                let ay = a.mul_vec(y);
                let alpha = linalg::dot(y, &ay).sqrt();
                Ok(linalg::axpy(b, T::one() / alpha, &ay))
            }
            NormKind::Custom(_) => {
                let f = self.value(y)?;
                if let Some(l) = self.square_jet(y) {
                    return Ok((0..self.dim).map(|i| l.grad(i) / (T::lit(2.0) * f)).collect());
                }
                let h = self.hessian_step * linalg::norm(y).max(T::one());
                let central = |i: usize, h: T| -> Result<T> {
                    let mut p = y.to_vec();
                    let mut m = y.to_vec();
                    p[i] += h;
                    m[i] -= h;
                    Ok((self.value(&p)? - self.value(&m)?) / (T::lit(2.0) * h))
                };
                (0..self.dim)
                    .map(|i| Ok((T::lit(4.0) * central(i, h)? - central(i, T::lit(2.0) * h)?) / T::lit(3.0)))
                    .collect()
            }
        }
    }

    /// `g_y = ½ Hess(F²)(y)`.
    pub fn fundamental_tensor(&self, y: &[T]) -> Result<Matrix<T>> {
        self.check_floor(y)?;
        let g = match &self.kind {
            NormKind::Quadratic { a } => a.clone(),
            NormKind::Randers { a, b } => randers_tensor(a, b, y),
            NormKind::Custom(_) => match self.square_jet(y) {
                Some(l) => Matrix::from_fn(self.dim, self.dim, |i, j| T::lit(0.5) * l.hess(i, j)),
                None => {
                    // Richardson extrapolation of two central-difference Hessians
                    let h = self.hessian_step * linalg::norm(y).max(T::one());
                    let fine = self.fd_tensor(y, h)?;
                    let coarse = self.fd_tensor(y, h * T::lit(2.0))?;
                    fine.scale(T::lit(4.0 / 3.0)).sub(&coarse.scale(T::lit(1.0 / 3.0)))
                }
            },
        };
        if g.max_abs().is_nan() || !g.max_abs().is_finite() {
            return Err(GeometryError::NormEvaluationFailed);
        }
        if !g.is_positive_definite() {
            return Err(GeometryError::ConvexityViolated { y: to_f64s(y) });
        }
        Ok(g)
    }

    fn fd_tensor(&self, y: &[T], h: T) -> Result<Matrix<T>> {
        let n = self.dim;
        let sq = |v: &[T]| -> Result<T> {
            let f = self.value(v)?;
            Ok(f * f)
        };
        let shifted = |di: &[(usize, T)]| -> Result<T> {
            let mut v = y.to_vec();
            for &(i, s) in di {
                v[i] += s;
            }
            sq(&v)
        };
        let l0 = sq(y)?;
        let two = T::lit(2.0);
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            let d2 = (shifted(&[(i, h)])? - two * l0 + shifted(&[(i, -h)])?) / (h * h);
            g[(i, i)] = d2 / two;
            for j in 0..i {
                let d = (shifted(&[(i, h), (j, h)])? - shifted(&[(i, h), (j, -h)])? - shifted(&[(i, -h), (j, h)])?
                    + shifted(&[(i, -h), (j, -h)])?)
                    / (T::lit(4.0) * h * h);
                g[(i, j)] = d / two;
                g[(j, i)] = d / two;
            }
        }
        Ok(g)
    }

    /// `⟨u, v⟩_y`.
    pub fn inner(&self, y: &[T], u: &[T], v: &[T]) -> Result<T> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(self.fundamental_tensor(y)?.bilinear(u, v))
    }

    /// `g_y`-orthonormal basis of the `g_y`-orthogonal complement of `y`.
    pub fn orthogonal_complement_basis(&self, y: &[T]) -> Result<Vec<Vec<T>>> {
        let g = self.fundamental_tensor(y)?;
        Ok(complement_basis(&g, y))
    }

    /// Solves `g_y(y, ·) = xi` for `y` (the Legendre dual of a covector).
    pub fn legendre(&self, xi: &[T]) -> Result<Vec<T>> {
        self.check_dim(xi)?;
        let xi_norm = linalg::norm(xi);
        if xi_norm <= T::zero() {
            return Err(GeometryError::InvalidInput("zero covector".into()));
        }
        let residual = |y: &[T]| -> Result<Vec<T>> {
            let f = self.value(y)?;
            let grad = self.gradient(y)?;
            Ok(linalg::sub(&linalg::scale(&grad, f), xi))
        };
        // start from the quadratic solution with the tensor frozen at xi
        let g0 = self.fundamental_tensor(xi)?;
        let mut y = g0.solve(xi)?;
        let mut r = residual(&y)?;
        let tol = T::lit(1e-12) * xi_norm;
        for _ in 0..100 {
            let rn = linalg::norm(&r);
            if rn <= tol {
                return Ok(y);
            }
            let g = self.fundamental_tensor(&y)?;
            let step = g.solve(&r)?;
            let mut damping = T::one();
            loop {
                let cand = linalg::axpy(&y, -damping, &step);
                if let Ok(rc) = residual(&cand) {
                    if linalg::norm(&rc) < rn || damping < T::lit(1e-6) {
                        y = cand;
                        r = rc;
                        break;
                    }
                }
                damping *= T::lit(0.5);
                if damping < T::lit(1e-8) {
                    return Err(GeometryError::LegendreSolveFailed { residual: (rn / xi_norm).approx() });
                }
            }
        }
        let rn = linalg::norm(&r);
        if rn <= T::lit(1e-10) * xi_norm {
            Ok(y)
        } else {
            Err(GeometryError::LegendreSolveFailed { residual: (rn / xi_norm).approx() })
        }
    }
}

/// Gram–Schmidt in the inner product `g`, starting from `y` and the
/// coordinate axes; returns the `n − 1` vectors orthogonal to `y`.
pub fn complement_basis<T: Real>(g: &Matrix<T>, y: &[T]) -> Vec<Vec<T>> {
    let n = y.len();
    let ny = g.bilinear(y, y).sqrt();
    let mut frame = vec![linalg::scale(y, T::one() / ny)];
    // candidates in order of least alignment with y keeps the process stable
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&i, &j| {
        let ai = (g.row(i).iter().zip(y).map(|(&a, &b)| a * b).sum::<T>()).abs() / g[(i, i)].sqrt();
        let aj = (g.row(j).iter().zip(y).map(|(&a, &b)| a * b).sum::<T>()).abs() / g[(j, j)].sqrt();
        ai.partial_cmp(&aj).unwrap_or(std::cmp::Ordering::Equal)
    });
    for i in axes {
        if frame.len() == n {
            break;
        }
        let mut v = linalg::unit::<T>(n, i);
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for e in &frame {
                let p = g.bilinear(&v, e);
                v = linalg::axpy(&v, -p, e);
            }
        }
        let len = g.bilinear(&v, &v).sqrt();
        if len > T::lit(1e-8) {
            frame.push(linalg::scale(&v, T::one() / len));
        }
    }
    frame.remove(0);
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn funk_like() -> MinkowskiNorm<f64> {
        MinkowskiNorm::randers(Matrix::identity(2), vec![0.5, 0.0]).unwrap()
    }

    fn fd_half_hessian_sq(f: &dyn Fn(&[f64]) -> f64, y: &[f64]) -> Matrix<f64> {
        let h = 1e-4;
        let n = y.len();
        let l = |v: &[f64]| f(v).powi(2);
        Matrix::from_fn(n, n, |i, j| {
            let mut pp = y.to_vec();
            let mut pm = y.to_vec();
            let mut mp = y.to_vec();
            let mut mm = y.to_vec();
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            (l(&pp) - l(&pm) - l(&mp) + l(&mm)) / (8.0 * h * h)
        })
    }

    #[test]
    fn values() {
        let e = MinkowskiNorm::<f64>::euclidean(2);
        assert_eq!(e.value(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(funk_like().value(&[1.0, 0.0]).unwrap(), 1.5);
        assert_eq!(funk_like().value(&[0.0, 0.0]).unwrap(), 0.0);
        let c = MinkowskiNorm::custom(2, |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt());
        assert_eq!(c.value(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn randers_admissibility() {
        assert!(matches!(
            MinkowskiNorm::randers(Matrix::identity(2), vec![1.0, 0.0]),
            Err(GeometryError::NotStronglyConvex(_))
        ));
        // dual norm: A = diag(4, 1), b = (1.5, 0) has |b|_{A^-1} = 0.75
        assert!(MinkowskiNorm::randers(m(&[&[4.0, 0.0], &[0.0, 1.0]]), vec![1.5, 0.0]).is_ok());
    }

    #[test]
    fn tensors() {
        let e = MinkowskiNorm::<f64>::euclidean(2);
        assert_eq!(e.fundamental_tensor(&[1.0, 1.0]).unwrap(), Matrix::identity(2));

        let r = funk_like();
        let g = r.fundamental_tensor(&[0.0, 1.0]).unwrap();
        let fd = fd_half_hessian_sq(&|y| (y[0] * y[0] + y[1] * y[1]).sqrt() + 0.5 * y[0], &[0.0, 1.0]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - fd[(i, j)]).abs() < 1e-6 * fd.max_abs(), "{g:?} vs {fd:?}");
            }
        }

        let c = MinkowskiNorm::custom(2, |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt());
        let gc = c.fundamental_tensor(&[1.0, 0.0]).unwrap();
        assert!(gc.sub(&Matrix::identity(2)).max_abs() < 1e-6);

        assert!(matches!(e.fundamental_tensor(&[0.0, 1e-12]), Err(GeometryError::DegenerateVector { .. })));
    }

    #[test]
    fn inner_products() {
        let e = MinkowskiNorm::<f64>::euclidean(2);
        assert_eq!(e.inner(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap(), 1.0);
        let r = funk_like();
        let y = [1.0, 0.0];
        assert!((r.inner(&y, &y, &y).unwrap() - 2.25).abs() < 1e-14);
        let (u, v) = ([0.3, -1.2], [2.0, 0.7]);
        assert!((r.inner(&y, &u, &v).unwrap() - r.inner(&y, &v, &u).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn complement_bases() {
        let e = MinkowskiNorm::<f64>::euclidean(2);
        let b = e.orthogonal_complement_basis(&[1.0, 0.0]).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0][0]).abs() < 1e-15 && (b[0][1].abs() - 1.0).abs() < 1e-15);

        let q = MinkowskiNorm::quadratic(m(&[&[1.0, 0.0], &[0.0, 4.0]])).unwrap();
        let b = q.orthogonal_complement_basis(&[1.0, 0.0]).unwrap();
        assert!((b[0][1].abs() - 0.5).abs() < 1e-15 && b[0][0].abs() < 1e-15);

        let r = MinkowskiNorm::randers(
            m(&[&[2.0, 0.3, 0.0], &[0.3, 1.0, 0.1], &[0.0, 0.1, 1.5]]),
            vec![0.2, -0.3, 0.1],
        )
        .unwrap();
        let y = [0.4, 1.0, -0.2];
        let fy = r.value(&y).unwrap();
        let b = r.orthogonal_complement_basis(&y).unwrap();
        assert_eq!(b.len(), 2);
        for u in &b {
            let nu = r.inner(&y, u, u).unwrap().sqrt();
            assert!((nu - 1.0).abs() < 1e-12);
            assert!(r.inner(&y, u, &y).unwrap().abs() <= 1e-10 * fy * nu);
        }
        assert!(r.inner(&y, &b[0], &b[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn legendre_identity() {
        let r = MinkowskiNorm::randers(m(&[&[2.0, 0.3], &[0.3, 1.0]]), vec![0.2, -0.3]).unwrap();
        for xi in [[1.0, 0.0], [0.3, -2.0], [-1.0, -1.0]] {
            let y = r.legendre(&xi).unwrap();
            let lhs = r.fundamental_tensor(&y).unwrap().mul_vec(&y);
            assert!(linalg::max_abs_diff(&lhs, &xi) < 1e-10 * linalg::norm(&xi));
        }
        let q = MinkowskiNorm::quadratic(m(&[&[4.0, 0.0], &[0.0, 1.0]])).unwrap();
        let y = q.legendre(&[1.0, 0.0]).unwrap();
        assert!((y[0] - 0.25).abs() < 1e-14 && y[1].abs() < 1e-14);
    }

    #[test]
    fn single_precision_instantiation() {
        let r = MinkowskiNorm::<f32>::randers(Matrix::identity(2), vec![0.5, 0.0]).unwrap();
        assert!((r.value(&[1.0, 0.0]).unwrap() - 1.5).abs() < 1e-6);
        assert!(r.fundamental_tensor(&[0.0, 1.0]).is_ok());
    }

    fn spd2() -> impl Strategy<Value = Matrix<f64>> {
        (0.3f64..3.0, 0.3f64..3.0, -0.9f64..0.9).prop_map(|(a, d, r)| {
            let off = r * (a * d).sqrt();
            m(&[&[a, off], &[off, d]])
        })
    }

    fn randers2() -> impl Strategy<Value = MinkowskiNorm<f64>> {
        (spd2(), 0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(a, len, th)| {
            // scale b so that its dual length is exactly `len`
            let dir = vec![th.cos(), th.sin()];
            let dl = dual_length(&a, &dir).unwrap();
            MinkowskiNorm::randers(a, linalg::scale(&dir, len / dl)).unwrap()
        })
    }

    fn nonzero2() -> impl Strategy<Value = Vec<f64>> {
        (0.1f64..5.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn homogeneity(norm in randers2(), y in nonzero2(), lambda in 0.0f64..10.0) {
            let f = norm.value(&y).unwrap();
            let fl = norm.value(&linalg::scale(&y, lambda)).unwrap();
            prop_assert!((fl - lambda * f).abs() <= 1e-12 * (lambda * f).max(1e-300) + 1e-300);
        }

        #[test]
        fn custom_homogeneity(a in spd2(), y in nonzero2(), lambda in 0.01f64..10.0) {
            let c = MinkowskiNorm::custom(2, move |v: &[f64]| a.bilinear(v, v).sqrt());
            let f = c.value(&y).unwrap();
            let fl = c.value(&linalg::scale(&y, lambda)).unwrap();
            prop_assert!((fl - lambda * f).abs() <= 1e-9 * lambda * f);
        }

        #[test]
        fn euler_identity_and_symmetry(norm in randers2(), y in nonzero2()) {
            let f = norm.value(&y).unwrap();
            let g = norm.fundamental_tensor(&y).unwrap();
            prop_assert!((g.bilinear(&y, &y) - f * f).abs() <= 1e-8 * f * f);
            prop_assert!(g.max_asymmetry() <= 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cross_kind_oracle(a in spd2(), y in nonzero2()) {
            let q = MinkowskiNorm::quadratic(a.clone()).unwrap();
            let aa = a.clone();
            let c = MinkowskiNorm::custom(2, move |v: &[f64]| aa.bilinear(v, v).sqrt());
            let fq = q.value(&y).unwrap();
            prop_assert!((fq - c.value(&y).unwrap()).abs() <= 1e-12 * fq);
            let gc = c.fundamental_tensor(&y).unwrap();
            prop_assert!(gc.sub(&a).max_abs() <= 1e-6 * a.max_abs());
            prop_assert!(gc.max_asymmetry() <= 1e-6);
            let f = c.value(&y).unwrap();
            prop_assert!((gc.bilinear(&y, &y) - f * f).abs() <= 1e-8 * f * f);
        }
    }
}
