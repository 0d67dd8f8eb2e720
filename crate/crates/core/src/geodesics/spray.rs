use crate::chart::ChartedFinslerMetric;
use crate::error::{to_f64s, GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::Real;

/// Spray values `G(x, y)` with their first derivative blocks.
#[derive(Clone, Debug)]
pub struct SprayCoefficients<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub g: Vec<T>,
    /// `dg_dx[(i, k)] = ∂G^i/∂x^k`.
    pub dg_dx: Matrix<T>,
    /// `dg_dy[(i, k)] = ∂G^i/∂y^k`, the nonlinear connection.
    pub dg_dy: Matrix<T>,
}

/// `G^i = ¼ g^{il}(L_{x^k y^l} y^k − L_{x^l})` with `L = F²`.
pub fn spray_values<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let d = metric.lagrangian(x, y)?;
    let n = metric.dim();
    let rhs: Vec<T> = (0..n)
        .map(|l| (0..n).map(|k| d.lxy[(k, l)] * y[k]).sum::<T>() - d.lx[l])
        .collect();
    // g = ½ L_yy, so ¼ g⁻¹ = ½ L_yy⁻¹
    let sol = d.lyy.solve(&rhs)?;
    Ok(linalg::scale(&sol, T::lit(0.5)))
}

pub(crate) fn x_step<T: Real>(metric: &ChartedFinslerMetric<T>, rel: f64) -> T {
    T::lit(rel) * metric.domain().scale().max(T::one())
}

pub(crate) fn check_stencil<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], h: T) -> Result<()> {
    if metric.domain().clearance(x) <= h {
        return Err(GeometryError::InsufficientStencil { x: to_f64s(x) });
    }
    Ok(())
}

/// `∂G/∂x` by central differences with step `h`.
pub(crate) fn spray_dx<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T], h: T) -> Result<Matrix<T>> {
    let n = metric.dim();
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let mut p = x.to_vec();
        let mut q = x.to_vec();
        p[k] += h;
        q[k] -= h;
        let (gp, gq) = (spray_values(metric, &p, y)?, spray_values(metric, &q, y)?);
        for i in 0..n {
            out[(i, k)] = (gp[i] - gq[i]) / (T::lit(2.0) * h);
        }
    }
    Ok(out)
}

/// `∂G/∂y` by central differences with step `h·|y|`.
pub(crate) fn spray_dy<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T], rel: T) -> Result<Matrix<T>> {
    let n = metric.dim();
    let h = rel * linalg::norm(y);
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let mut p = y.to_vec();
        let mut q = y.to_vec();
        p[k] += h;
        q[k] -= h;
        let (gp, gq) = (spray_values(metric, x, &p)?, spray_values(metric, x, &q)?);
        for i in 0..n {
            out[(i, k)] = (gp[i] - gq[i]) / (T::lit(2.0) * h);
        }
    }
    Ok(out)
}

/// Nonlinear connection `N^i_k = ∂G^i/∂y^k`.
pub fn connection<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T]) -> Result<Matrix<T>> {
    spray_dy(metric, x, y, T::lit(metric.policy().x_step))
}

/// Spray with derivative blocks.
pub fn spray<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T]) -> Result<SprayCoefficients<T>> {
    let h = x_step(metric, metric.policy().x_step);
    check_stencil(metric, x, h)?;
    Ok(SprayCoefficients {
        x: x.to_vec(),
        y: y.to_vec(),
        g: spray_values(metric, x, y)?,
        dg_dx: spray_dx(metric, x, y, h)?,
        dg_dy: connection(metric, x, y)?,
    })
}

/// `(∂G/∂x)·a + (∂G/∂y)·b` as one directional central difference.
pub(crate) fn spray_linearization<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x: &[T],
    y: &[T],
    a: &[T],
    b: &[T],
) -> Result<Vec<T>> {
    let size = (linalg::dot(a, a) + linalg::dot(b, b)).sqrt();
    if size.is_zero() {
        return Ok(vec![T::zero(); x.len()]);
    }
    let eps = T::lit(metric.policy().x_step) * linalg::norm(y).max(T::one()) / size;
    let gp = spray_values(metric, &linalg::axpy(x, eps, a), &linalg::axpy(y, eps, b))?;
    let gm = spray_values(metric, &linalg::axpy(x, -eps, a), &linalg::axpy(y, -eps, b))?;
    Ok(gp.iter().zip(&gm).map(|(&p, &m)| (p - m) / (T::lit(2.0) * eps)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, ConformalFactor, MatrixField};

    fn conformal() -> ChartedFinslerMetric<f64> {
        ChartedFinslerMetric::quadratic(
            "e^{2x}",
            ChartDomain::unit_ball(2, 0.9),
            MatrixField::Conformal { base: Matrix::identity(2), factor: ConformalFactor::Exponential { k: vec![1.0, 0.0] } },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_spray_vanishes() {
        let e = ChartedFinslerMetric::<f64>::euclidean(2, ChartDomain::unit_ball(2, 0.9));
        let s = spray(&e, &[0.1, 0.2], &[0.3, -0.7]).unwrap();
        assert!(s.g.iter().all(|v| v.abs() < 1e-15));
        assert!(s.dg_dx.max_abs() < 1e-10 && s.dg_dy.max_abs() < 1e-10);
    }

    #[test]
    fn conformal_christoffel_oracle() {
        // g = e^{2x¹} δ: Γ^i_{jk} = δ^i_j δ^1_k + δ^i_k δ^1_j − δ_{jk} δ^{i1}
        let m = conformal();
        let y = [0.4, -1.3];
        let g = spray_values(&m, &[0.2, 0.1], &y).unwrap();
        let expected = [0.5 * (y[0] * y[0] - y[1] * y[1]), y[0] * y[1]];
        assert!(linalg::max_abs_diff(&g, &expected) < 1e-14, "{g:?}");
    }

    #[test]
    fn two_homogeneity() {
        let m = conformal();
        let (x, y) = ([0.3, -0.2], [0.5, 0.8]);
        let g1 = spray_values(&m, &x, &y).unwrap();
        let g2 = spray_values(&m, &x, &linalg::scale(&y, 2.0)).unwrap();
        for i in 0..2 {
            assert!((g2[i] - 4.0 * g1[i]).abs() <= 1e-7 * g2[i].abs().max(1e-12));
        }
    }

    #[test]
    fn stencil_room() {
        let m = conformal();
        assert!(matches!(spray(&m, &[0.9 - 1e-6, 0.0], &[1.0, 0.0]), Err(GeometryError::InsufficientStencil { .. })));
    }
}
