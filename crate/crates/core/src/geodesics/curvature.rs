use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::ChartedFinslerMetric;
use crate::error::{GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::Real;

use super::solution::{integrate_geodesic, integrate_jacobi, GeodesicOptions};
use super::spray::{check_stencil, spray_dx, spray_dy, spray_values, x_step};

/// Riemann curvature operator `R_y` at `(x, y)`, as the matrix `R^i_k`.
///
/// `R^i_k = 2∂_{x^k}G^i − y^j ∂_{x^j}∂_{y^k}G^i + 2G^j ∂_{y^j}∂_{y^k}G^i
/// − ∂_{y^j}G^i ∂_{y^k}G^j`; the two mixed terms are directional
/// derivatives of the connection, along `y` in `x` and along `G` in `y`.
pub fn riemann_operator<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T]) -> Result<Matrix<T>> {
    let p = metric.policy();
    let n = metric.dim();
    let ynorm = linalg::norm(y);
    if ynorm <= T::lit(p.y_floor) {
        return Err(GeometryError::DegenerateVector { norm: ynorm.approx() });
    }
    let h1 = x_step(metric, p.x_step);
    let h2 = x_step(metric, p.spray_second_step);
    check_stencil(metric, x, h2 + h1)?;
    let inner = T::lit(p.spray_second_step);

    let g = spray_values(metric, x, y)?;
    let gx = spray_dx(metric, x, y, h1)?;
    let gy = spray_dy(metric, x, y, T::lit(p.x_step))?;

    // y^j ∂_{x^j} N, along the unit direction of y
    let dir = linalg::scale(y, T::one() / ynorm);
    let np = spray_dy(metric, &linalg::axpy(x, h2, &dir), y, inner)?;
    let nm = spray_dy(metric, &linalg::axpy(x, -h2, &dir), y, inner)?;
    let along_y = np.sub(&nm).scale(ynorm / (T::lit(2.0) * h2));

    // G^j ∂_{y^j} N
    let gnorm = linalg::norm(&g);
    let along_g = if gnorm.is_zero() {
        Matrix::zeros(n, n)
    } else {
        let hy = inner * ynorm;
        let gdir = linalg::scale(&g, T::one() / gnorm);
        let np = spray_dy(metric, x, &linalg::axpy(y, hy, &gdir), inner)?;
        let nm = spray_dy(metric, x, &linalg::axpy(y, -hy, &gdir), inner)?;
        np.sub(&nm).scale(gnorm / (T::lit(2.0) * hy))
    };

    let two = T::lit(2.0);
    Ok(gx.scale(two).sub(&along_y).add(&along_g.scale(two)).sub(&gy.matmul(&gy)))
}

fn flag_denominator<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T], u: &[T]) -> Result<(Matrix<T>, T)> {
    let g = metric.fundamental_tensor(x, y)?;
    let gyy = g.bilinear(y, y);
    let guu = g.bilinear(u, u);
    let gyu = g.bilinear(y, u);
    let den = gyy * guu - gyu * gyu;
    if den <= T::lit(1e-12) * gyy * guu {
        return Err(GeometryError::DegenerateFlag { denominator: den.approx() });
    }
    Ok((g, den))
}

/// Flag curvature `K(x, y, u) = g_y(u, R_y u) / (g_y(y,y) g_y(u,u) − g_y(y,u)²)`.
pub fn flag_curvature<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T], u: &[T]) -> Result<T> {
    let (g, den) = flag_denominator(metric, x, y, u)?;
    let r = riemann_operator(metric, x, y)?;
    Ok(g.bilinear(u, &r.mul_vec(u)) / den)
}

/// Flag curvature from the second-order behaviour of a Jacobi field.
#[derive(Clone, Debug)]
pub struct JacobiCurvature<T> {
    pub curvature: T,
    /// Values of the same functional for random initial derivatives
    /// orthogonal to the flagpole; each is at most `curvature`.
    pub probes: Vec<T>,
    /// `max(probes) − curvature`, clipped at 0.
    pub probe_excess: T,
}

/// `K(x, y, u) = −f''(0)/f(0)` for `f(t) = |J(t)|_{γ̇}` along the geodesic
/// of `y` (normalized to unit speed), `J(0) = u⊥`, `D_{γ̇}J(0) = 0`.
///
/// `probes` extra fields with `D_{γ̇}J(0) = w ⊥ y` are evaluated; the
/// functional is maximized by `w = 0`.
pub fn flag_curvature_via_jacobi<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x: &[T],
    y: &[T],
    u: &[T],
    probes: usize,
    seed: u64,
) -> Result<JacobiCurvature<T>> {
    flag_denominator(metric, x, y, u)?;
    let p = metric.policy();
    let h = T::lit(p.t_step);
    let y = metric.normalize(x, y)?;
    let g = metric.fundamental_tensor(x, &y)?;
    // u minus its g_y-projection onto y
    let u = linalg::axpy(u, -g.bilinear(&y, u), &y);
    let opts = GeodesicOptions { tolerance: T::lit(1e-13), samples: 4, speed_tolerance: None };
    let span = (-T::lit(2.0) * h, T::lit(2.0) * h);

    let functional = |w: &[T]| -> Result<T> {
        let jac = integrate_jacobi(metric, x, &y, &u, w, span, &opts)?;
        if !jac.geodesic.is_complete() || jac.geodesic.len() != 5 {
            return Err(GeometryError::InsufficientStencil { x: crate::error::to_f64s(x) });
        }
        let f: Vec<T> = (0..5)
            .map(|k| {
                let gk = &jac.geodesic;
                metric.inner(&gk.positions[k], &gk.velocities[k], &jac.field[k], &jac.field[k]).map(|v| v.sqrt())
            })
            .collect::<Result<_>>()?;
        let f2 = (-f[4] + T::lit(16.0) * f[3] - T::lit(30.0) * f[2] + T::lit(16.0) * f[1] - f[0]) / (T::lit(12.0) * h * h);
        Ok(-f2 / f[2])
    };

    let curvature = functional(&vec![T::zero(); x.len()])?;
    let basis = metric.orthogonal_complement_basis(x, &y)?;
    let unorm = g.bilinear(&u, &u).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(probes);
    for _ in 0..probes {
        let mut w = vec![T::zero(); x.len()];
        for b in &basis {
            let c: f64 = rand::Rng::gen_range(&mut rng, -1.0..1.0);
            w = linalg::axpy(&w, T::lit(c) * unorm, b);
        }
        values.push(functional(&w)?);
    }
    let excess = values.iter().fold(T::zero(), |m, &v| m.max(v - curvature));
    Ok(JacobiCurvature { curvature, probes: values, probe_excess: excess })
}

/// S-curvature `S(x, y) = d/dt τ(γ(t), γ̇(t))` at `t = 0`, with
/// `τ = ln(√det g_{γ̇} / σ_BH)`. Needs a deterministic volume density.
pub fn s_curvature<T: Real>(metric: &ChartedFinslerMetric<T>, x: &[T], y: &[T]) -> Result<T> {
    metric.deterministic_density(x)?;
    let p = metric.policy();
    let h = T::lit(p.s_curvature_step);
    let f = metric.norm(x, y)?;
    if f <= T::zero() {
        return Err(GeometryError::DegenerateVector { norm: f.approx() });
    }
    let unit = linalg::scale(y, T::one() / f);
    let opts = GeodesicOptions { tolerance: T::lit(1e-12), samples: 4, speed_tolerance: None };
    let geo = integrate_geodesic(metric, x, &unit, (-T::lit(2.0) * h, T::lit(2.0) * h), &opts)?;
    if !geo.is_complete() || geo.len() != 5 {
        return Err(GeometryError::InsufficientStencil { x: crate::error::to_f64s(x) });
    }
    let tau: Vec<T> = (0..5)
        .map(|k| {
            let (xk, vk) = (&geo.positions[k], &geo.velocities[k]);
            let det = metric.fundamental_tensor(xk, vk)?.determinant();
            let sigma = metric.deterministic_density(xk)?;
            Ok(det.sqrt().ln() - sigma.ln())
        })
        .collect::<Result<_>>()?;
    let d = (-tau[4] + T::lit(8.0) * tau[3] - T::lit(8.0) * tau[1] + tau[0]) / (T::lit(12.0) * h);
    Ok(d * f)
}

/// Extremes of the flag curvature over the flags with a given pole.
#[derive(Clone, Debug)]
pub struct CurvatureRange<T> {
    pub kmax: T,
    pub kmin: T,
    pub evaluated: usize,
    /// Flag edges skipped as degenerate.
    pub skipped: usize,
}

/// Unit vector on the sphere of dimension `angles.len()` in hyperspherical
/// coordinates.
fn sphere_point<T: Real>(angles: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut prod = T::one();
    for &a in angles {
        out.push(prod * a.cos());
        prod *= a.sin();
    }
    out.push(prod);
    out
}

fn golden_section<T: Real>(f: &dyn Fn(T) -> T, mut a: T, mut b: T, iters: usize) -> (T, T) {
    let r = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sweeps flag edges `u` over a grid on the `g_y`-unit sphere of the
/// orthogonal complement of `y` (about `plane_samples` points), refines the
/// best grid points by golden-section search in each angle, and returns the
/// extreme flag curvatures.
pub fn kmax_kmin<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x: &[T],
    y: &[T],
    plane_samples: usize,
) -> Result<CurvatureRange<T>> {
    let n = metric.dim();
    if n < 2 {
        return Err(GeometryError::InvalidInput("flag curvature needs dimension ≥ 2".into()));
    }
    let g = metric.fundamental_tensor(x, y)?;
    let r = riemann_operator(metric, x, y)?;
    let gr = g.matmul(&r);
    let basis = metric.orthogonal_complement_basis(x, y)?;
    let gyy = g.bilinear(y, y);
    let skipped = std::cell::Cell::new(0usize);
    let flag = |u: &[T]| -> Option<T> {
        let guu = g.bilinear(u, u);
        let gyu = g.bilinear(y, u);
        let den = gyy * guu - gyu * gyu;
        if den <= T::lit(1e-12) * gyy * guu {
            skipped.set(skipped.get() + 1);
            return None;
        }
        Some(gr.bilinear(u, u) / den)
    };
    let edge = |angles: &[T]| -> Vec<T> {
        let c = sphere_point(angles);
        let mut u = vec![T::zero(); n];
        for (ck, b) in c.iter().zip(&basis) {
            u = linalg::axpy(&u, *ck, b);
        }
        u
    };

    let m = n - 2; // number of angles
    if m == 0 {
        let k = flag(&basis[0]).ok_or(GeometryError::DegenerateFlag { denominator: 0.0 })?;
        return Ok(CurvatureRange { kmax: k, kmin: k, evaluated: 1, skipped: 0 });
    }
    // u and −u span the same flag, so the last angle only needs [0, π)
    let per = ((plane_samples.max(2) as f64).powf(1.0 / m as f64).round() as usize).max(2);
    let step = T::lit(std::f64::consts::PI / per as f64);
    let mut best_max = (T::neg_infinity(), vec![T::zero(); m]);
    let mut best_min = (T::infinity(), vec![T::zero(); m]);
    let mut evaluated = 0;
    let mut idx = vec![0usize; m];
    loop {
        let angles: Vec<T> = idx.iter().map(|&i| T::lit(i as f64 + 0.5) * step).collect();
        if let Some(k) = flag(&edge(&angles)) {
            evaluated += 1;
            if k > best_max.0 {
                best_max = (k, angles.clone());
            }
            if k < best_min.0 {
                best_min = (k, angles);
            }
        }
        let mut d = 0;
        while d < m {
            idx[d] += 1;
            if idx[d] < per {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == m {
            break;
        }
    }
    if evaluated == 0 {
        return Err(GeometryError::DegenerateFlag { denominator: 0.0 });
    }
    for sign in [T::one(), -T::one()] {
        let best = if sign > T::zero() { &mut best_max } else { &mut best_min };
        for d in 0..m {
            let base = best.1.clone();
            let f = |a: T| {
                let mut ang = base.clone();
                ang[d] = a;
                flag(&edge(&ang)).map_or(T::neg_infinity(), |k| sign * k)
            };
            let (a, v) = golden_section(&f, base[d] - step, base[d] + step, 40);
            if v > sign * best.0 {
                best.0 = v * sign;
                best.1[d] = a;
            }
        }
    }
    Ok(CurvatureRange { kmax: best_max.0, kmin: best_min.0, evaluated, skipped: skipped.get() })
}
