use crate::chart::ChartedFinslerMetric;
use crate::error::{GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::ode::{self, OdeOptions, OdeStatus};
use crate::Real;

use super::spray::{connection, spray_linearization, spray_values};

/// Sampling and accuracy settings for curve integration.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicOptions<T> {
    pub tolerance: T,
    /// Number of sample intervals across the whole span.
    pub samples: usize,
    /// Maximum relative drift of `F(γ, γ̇)`; `None` disables the check.
    pub speed_tolerance: Option<T>,
}

impl<T: Real> Default for GeodesicOptions<T> {
    fn default() -> Self {
        GeodesicOptions { tolerance: T::lit(1e-10), samples: 200, speed_tolerance: Some(T::lit(1e-7)) }
    }
}

impl<T: Real> GeodesicOptions<T> {
    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

/// A sampled geodesic. Samples include `t = 0`, where the initial data sit.
#[derive(Clone, Debug)]
pub struct GeodesicSolution<T> {
    pub times: Vec<T>,
    pub positions: Vec<Vec<T>>,
    pub velocities: Vec<Vec<T>>,
    pub accelerations: Vec<Vec<T>>,
    pub speeds: Vec<T>,
    /// `Completed`, or where and why the curve was cut short.
    pub status: OdeStatus,
}

/// A Jacobi field integrated jointly with its geodesic.
#[derive(Clone, Debug)]
pub struct JacobiSolution<T> {
    pub geodesic: GeodesicSolution<T>,
    pub field: Vec<Vec<T>>,
    pub rate: Vec<Vec<T>>,
    pub second: Vec<Vec<T>>,
}

fn cubic_hermite<T: Real>(p0: &[T], m0: &[T], p1: &[T], m1: &[T], h: T, s: T) -> Vec<T> {
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    (0..p0.len()).map(|i| h00 * p0[i] + h10 * h * m0[i] + h01 * p1[i] + h11 * h * m1[i]).collect()
}

impl<T: Real> GeodesicSolution<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        self.times[self.times.len() - 1]
    }

    pub fn is_complete(&self) -> bool {
        self.status == OdeStatus::Completed
    }

    /// Index of the sample at `t = 0`.
    pub fn origin(&self) -> usize {
        self.times.iter().position(|t| t.is_zero()).unwrap_or(0)
    }

    pub fn initial_position(&self) -> &[T] {
        &self.positions[self.origin()]
    }

    pub fn initial_velocity(&self) -> &[T] {
        &self.velocities[self.origin()]
    }

    fn locate(&self, t: T) -> Result<(usize, T, T)> {
        let (a, b) = (self.start(), self.end());
        let slack = T::lit(1e-12) * (b - a).abs().max(T::one());
        if t < a - slack || t > b + slack {
            return Err(GeometryError::TimeOutsideSpan { t: t.approx(), start: a.approx(), end: b.approx() });
        }
        let k = match self.times.iter().position(|&s| s > t) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => self.times.len().saturating_sub(2),
        };
        let k = k.min(self.times.len().saturating_sub(2));
        let h = self.times[k + 1] - self.times[k];
        Ok((k, h, (t - self.times[k]) / h))
    }

    /// Position and velocity at `t`, by cubic Hermite interpolation.
    pub fn state_at(&self, t: T) -> Result<(Vec<T>, Vec<T>)> {
        if self.times.len() == 1 {
            return Ok((self.positions[0].clone(), self.velocities[0].clone()));
        }
        let (k, h, s) = self.locate(t)?;
        let x = cubic_hermite(&self.positions[k], &self.velocities[k], &self.positions[k + 1], &self.velocities[k + 1], h, s);
        let v = cubic_hermite(
            &self.velocities[k],
            &self.accelerations[k],
            &self.velocities[k + 1],
            &self.accelerations[k + 1],
            h,
            s,
        );
        Ok((x, v))
    }

    /// `max |F(γ̇) − F(γ̇(0))| / F(γ̇(0))` over the samples.
    pub fn speed_drift(&self) -> T {
        let f0 = self.speeds[self.origin()];
        let scale = f0.max(T::lit(1e-300));
        self.speeds.iter().map(|&f| (f - f0).abs() / scale).fold(T::zero(), T::max)
    }
}

impl<T: Real> JacobiSolution<T> {
    /// Field and its coordinate derivative at `t`, by Hermite interpolation.
    pub fn field_at(&self, t: T) -> Result<(Vec<T>, Vec<T>)> {
        let g = &self.geodesic;
        if g.times.len() == 1 {
            return Ok((self.field[0].clone(), self.rate[0].clone()));
        }
        let (k, h, s) = g.locate(t)?;
        let j = cubic_hermite(&self.field[k], &self.rate[k], &self.field[k + 1], &self.rate[k + 1], h, s);
        let r = cubic_hermite(&self.rate[k], &self.second[k], &self.rate[k + 1], &self.second[k + 1], h, s);
        Ok((j, r))
    }

    /// `D_{γ̇} J` at sample `k`, from the stored derivative and the connection.
    pub fn covariant_rate(&self, metric: &ChartedFinslerMetric<T>, k: usize) -> Result<Vec<T>> {
        let g = &self.geodesic;
        let n = connection(metric, &g.positions[k], &g.velocities[k])?;
        Ok(linalg::add(&self.rate[k], &n.mul_vec(&self.field[k])))
    }
}

/// Forward and backward sample grids for `span`, both starting at 0.
fn grids<T: Real>(span: (T, T), samples: usize) -> Result<(Vec<T>, Vec<T>)> {
    let (a, b) = span;
    if !(a <= T::zero() && T::zero() <= b) || a == b {
        return Err(GeometryError::InvalidInput(format!(
            "time span [{}, {}] must contain 0 and be non-degenerate",
            a.approx(),
            b.approx()
        )));
    }
    let samples = samples.max(2) as f64;
    let total = (b - a).approx();
    let count = |len: T| -> usize {
        if len.is_zero() {
            0
        } else {
            ((samples * len.abs().approx() / total).round() as usize).max(1)
        }
    };
    let fwd = if b > T::zero() { ode::linspace(T::zero(), b, count(b)) } else { vec![T::zero()] };
    let bwd = if a < T::zero() { ode::linspace(T::zero(), a, count(a)) } else { vec![T::zero()] };
    Ok((fwd, bwd))
}

/// Runs an augmented geodesic system both ways from `t = 0` and merges the
/// results in increasing time.
fn run_both_ways<T, F>(
    metric: &ChartedFinslerMetric<T>,
    state0: &[T],
    span: (T, T),
    opts: &GeodesicOptions<T>,
    rhs: F,
) -> Result<(Vec<T>, Vec<Vec<T>>, OdeStatus)>
where
    T: Real,
    F: Fn(T, &[T]) -> Result<Vec<T>>,
{
    let n = metric.dim();
    let (fwd, bwd) = grids(span, opts.samples)?;
    let o = OdeOptions::with_tolerance(opts.tolerance);
    let inside = |_t: T, s: &[T]| metric.contains(&s[..n]);
    let forward = ode::integrate(&rhs, T::zero(), state0, &fwd, &o, inside)?;
    let backward = if bwd.len() > 1 {
        Some(ode::integrate(&rhs, T::zero(), state0, &bwd[1..], &o, inside)?)
    } else {
        None
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut status = OdeStatus::Completed;
    if let Some(bw) = backward {
        if bw.status != OdeStatus::Completed {
            status = bw.status.clone();
        }
        for (t, s) in bw.times.into_iter().zip(bw.states).rev() {
            times.push(t);
            states.push(s);
        }
    }
    if forward.status != OdeStatus::Completed && status == OdeStatus::Completed {
        status = forward.status.clone();
    }
    times.extend(forward.times);
    states.extend(forward.states);
    if times.is_empty() {
        return Err(GeometryError::IntegrationFailed("no samples produced".into()));
    }
    Ok((times, states, status))
}

fn check_dims<T: Real>(metric: &ChartedFinslerMetric<T>, vs: &[&[T]]) -> Result<()> {
    for v in vs {
        if v.len() != metric.dim() {
            return Err(GeometryError::DimensionMismatch { expected: metric.dim(), got: v.len() });
        }
    }
    Ok(())
}

fn geodesic_rhs<T: Real>(metric: &ChartedFinslerMetric<T>, s: &[T]) -> Result<Vec<T>> {
    let n = metric.dim();
    let (x, v) = s.split_at(n);
    let g = spray_values(metric, x, &v[..n])?;
    let mut out = v[..n].to_vec();
    out.extend(g.iter().map(|&gi| -T::lit(2.0) * gi));
    Ok(out)
}

fn finish<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    times: Vec<T>,
    states: &[Vec<T>],
    status: OdeStatus,
    opts: &GeodesicOptions<T>,
) -> Result<GeodesicSolution<T>> {
    let n = metric.dim();
    let mut sol = GeodesicSolution {
        times,
        positions: Vec::with_capacity(states.len()),
        velocities: Vec::with_capacity(states.len()),
        accelerations: Vec::with_capacity(states.len()),
        speeds: Vec::with_capacity(states.len()),
        status,
    };
    for s in states {
        let d = geodesic_rhs(metric, &s[..2 * n])?;
        sol.positions.push(s[..n].to_vec());
        sol.velocities.push(s[n..2 * n].to_vec());
        sol.accelerations.push(d[n..].to_vec());
        sol.speeds.push(metric.norm(&s[..n], &s[n..2 * n])?);
    }
    if let Some(tol) = opts.speed_tolerance {
        let drift = sol.speed_drift();
        if drift > tol {
            return Err(GeometryError::SpeedDrift { drift: drift.approx(), tolerance: tol.approx() });
        }
    }
    Ok(sol)
}

/// Solves `ẍ + 2G(x, ẋ) = 0` with `x(0) = x0`, `ẋ(0) = y0` over `span`
/// (which must contain 0). Leaving the chart truncates the solution and is
/// reported in `status`.
pub fn integrate_geodesic<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x0: &[T],
    y0: &[T],
    span: (T, T),
    opts: &GeodesicOptions<T>,
) -> Result<GeodesicSolution<T>> {
    check_dims(metric, &[x0, y0])?;
    if !metric.contains(x0) {
        return Err(GeometryError::InvalidInput("initial point outside the chart".into()));
    }
    let mut s0 = x0.to_vec();
    s0.extend_from_slice(y0);
    let (times, states, status) = run_both_ways(metric, &s0, span, opts, |_, s| geodesic_rhs(metric, s))?;
    finish(metric, times, &states, status, opts)
}

/// Jacobi field with coordinate initial data `J(0) = j0`, `J̇(0) = jdot0`
/// along the geodesic through `(x0, y0)`.
pub fn integrate_jacobi_raw<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x0: &[T],
    y0: &[T],
    j0: &[T],
    jdot0: &[T],
    span: (T, T),
    opts: &GeodesicOptions<T>,
) -> Result<JacobiSolution<T>> {
    check_dims(metric, &[x0, y0, j0, jdot0])?;
    let n = metric.dim();
    let mut s0 = x0.to_vec();
    s0.extend_from_slice(y0);
    s0.extend_from_slice(j0);
    s0.extend_from_slice(jdot0);
    let rhs = |_t: T, s: &[T]| -> Result<Vec<T>> {
        let mut out = geodesic_rhs(metric, &s[..2 * n])?;
        let (x, v) = (&s[..n], &s[n..2 * n]);
        let (j, jd) = (&s[2 * n..3 * n], &s[3 * n..]);
        let lin = spray_linearization(metric, x, v, j, jd)?;
        out.extend_from_slice(jd);
        out.extend(lin.iter().map(|&l| -T::lit(2.0) * l));
        Ok(out)
    };
    let (times, states, status) = run_both_ways(metric, &s0, span, opts, rhs)?;
    let geodesic = finish(metric, times, &states, status, opts)?;
    let mut field = Vec::with_capacity(states.len());
    let mut rate = Vec::with_capacity(states.len());
    let mut second = Vec::with_capacity(states.len());
    for s in &states {
        let d = rhs(T::zero(), s)?;
        field.push(s[2 * n..3 * n].to_vec());
        rate.push(s[3 * n..].to_vec());
        second.push(d[3 * n..].to_vec());
    }
    Ok(JacobiSolution { geodesic, field, rate, second })
}

/// Jacobi field along the geodesic through `(x0, y0)` with `J(0) = j0` and
/// covariant derivative `D_{γ̇}J(0) = dj0`.
pub fn integrate_jacobi<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    x0: &[T],
    y0: &[T],
    j0: &[T],
    dj0: &[T],
    span: (T, T),
    opts: &GeodesicOptions<T>,
) -> Result<JacobiSolution<T>> {
    check_dims(metric, &[x0, y0, j0, dj0])?;
    let n = connection(metric, x0, y0)?;
    let jdot0 = linalg::sub(dj0, &n.mul_vec(j0));
    integrate_jacobi_raw(metric, x0, y0, j0, &jdot0, span, opts)
}

/// Largest deviation between a Jacobi field and the central difference of
/// the geodesic variation `(x0 + εJ(0), y0 + εJ̇(0))`, over common samples.
pub fn variation_discrepancy<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    jacobi: &JacobiSolution<T>,
    eps: T,
    opts: &GeodesicOptions<T>,
) -> Result<T> {
    let g = &jacobi.geodesic;
    let o = g.origin();
    let (x0, y0) = (&g.positions[o], &g.velocities[o]);
    let (j0, jd0) = (&jacobi.field[o], &jacobi.rate[o]);
    let span = (g.start(), g.end());
    let opts = GeodesicOptions { speed_tolerance: None, ..*opts };
    let plus = integrate_geodesic(metric, &linalg::axpy(x0, eps, j0), &linalg::axpy(y0, eps, jd0), span, &opts)?;
    let minus = integrate_geodesic(metric, &linalg::axpy(x0, -eps, j0), &linalg::axpy(y0, -eps, jd0), span, &opts)?;
    let mut worst = T::zero();
    for (k, &t) in g.times.iter().enumerate() {
        let (Ok((p, _)), Ok((m, _))) = (plus.state_at(t), minus.state_at(t)) else {
            continue;
        };
        let fd = linalg::scale(&linalg::sub(&p, &m), T::one() / (T::lit(2.0) * eps));
        worst = worst.max(linalg::max_abs_diff(&fd, &jacobi.field[k]));
    }
    Ok(worst)
}

/// `D_{γ̇}U = U̇ + N(γ, γ̇)U` at `t`, with `U̇` from a five-point stencil of
/// step `h`.
pub fn covariant_derivative<T, F>(
    metric: &ChartedFinslerMetric<T>,
    geodesic: &GeodesicSolution<T>,
    field: F,
    t: T,
    h: T,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T) -> Result<Vec<T>>,
{
    let (a, b) = (geodesic.start(), geodesic.end());
    if t - T::lit(2.0) * h < a || t + T::lit(2.0) * h > b {
        return Err(GeometryError::TimeOutsideSpan { t: t.approx(), start: a.approx(), end: b.approx() });
    }
    let u = field(t)?;
    let (p2, p1) = (field(t + T::lit(2.0) * h)?, field(t + h)?);
    let (m1, m2) = (field(t - h)?, field(t - T::lit(2.0) * h)?);
    let du: Vec<T> = (0..u.len())
        .map(|i| (-p2[i] + T::lit(8.0) * p1[i] - T::lit(8.0) * m1[i] + m2[i]) / (T::lit(12.0) * h))
        .collect();
    let (x, v) = geodesic.state_at(t)?;
    let n: Matrix<T> = connection(metric, &x, &v)?;
    Ok(linalg::add(&du, &n.mul_vec(&u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, ConformalFactor, MatrixField};

    fn sphere() -> ChartedFinslerMetric<f64> {
        ChartedFinslerMetric::quadratic(
            "round sphere",
            ChartDomain::unit_ball(2, 4.0),
            MatrixField::Conformal { base: Matrix::identity(2), factor: ConformalFactor::Stereographic { curvature: 1.0 } },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_lines() {
        let e = ChartedFinslerMetric::euclidean(2, ChartDomain::unit_ball(2, 10.0));
        let g = integrate_geodesic(&e, &[0.1, 0.2], &[1.0, -0.5], (-1.0, 2.0), &GeodesicOptions::default()).unwrap();
        assert!(g.is_complete());
        for (t, x) in g.times.iter().zip(&g.positions) {
            assert!(linalg::max_abs_diff(x, &[0.1 + t, 0.2 - 0.5 * t]) < 1e-12);
        }
        assert_eq!(g.times[g.origin()], 0.0);
        let (x, v) = g.state_at(0.37).unwrap();
        assert!(linalg::max_abs_diff(&x, &[0.47, 0.2 - 0.185]) < 1e-12);
        assert!(linalg::max_abs_diff(&v, &[1.0, -0.5]) < 1e-12);
    }

    #[test]
    fn great_circles_close_up() {
        let s = sphere();
        let period = 2.0 * std::f64::consts::PI;
        let g = integrate_geodesic(&s, &[1.0, 0.0], &[0.0, 1.0], (0.0, period), &GeodesicOptions::default()).unwrap();
        assert!(g.is_complete());
        let last = g.positions.last().unwrap();
        assert!(linalg::max_abs_diff(last, &[1.0, 0.0]) < 1e-7, "{last:?}");
        // the equator stays on the unit circle
        assert!(g.positions.iter().all(|x| (linalg::norm(x) - 1.0).abs() < 1e-8));
        assert!(g.speed_drift() < 1e-8);
    }

    #[test]
    fn leaving_the_chart_truncates() {
        let e = ChartedFinslerMetric::euclidean(2, ChartDomain::unit_ball(2, 1.0));
        let g = integrate_geodesic(&e, &[0.0, 0.0], &[1.0, 0.0], (0.0, 3.0), &GeodesicOptions::default()).unwrap();
        assert!(!g.is_complete());
        assert!(g.end() <= 1.0);
        assert!(g.state_at(2.0).is_err());
    }

    #[test]
    fn sphere_jacobi_is_sine() {
        // K = 1: a normal Jacobi field with J(0) = 0, DJ(0) = e has length sin t
        let s = sphere();
        let j = integrate_jacobi(&s, &[0.0, 0.0], &[0.5, 0.0], &[0.0, 0.0], &[0.0, 0.5], (0.0, 2.0), &GeodesicOptions::default())
            .unwrap();
        for (k, &t) in j.geodesic.times.iter().enumerate() {
            let x = &j.geodesic.positions[k];
            let v = &j.geodesic.velocities[k];
            let len = s.inner(x, v, &j.field[k], &j.field[k]).unwrap().sqrt();
            assert!((len - t.sin()).abs() < 1e-7, "t={t} {len}");
        }
        let disc = variation_discrepancy(&s, &j, 1e-4, &GeodesicOptions::default().with_tolerance(1e-12)).unwrap();
        assert!(disc < 1e-6, "{disc}");
    }

    #[test]
    fn metric_compatibility() {
        let s = sphere();
        let g = integrate_geodesic(&s, &[0.2, -0.1], &[0.3, 0.4], (-1.0, 1.0), &GeodesicOptions::default()).unwrap();
        let u = |t: f64| -> Result<Vec<f64>> { Ok(vec![1.0 + t * t, t.sin()]) };
        let w = |t: f64| -> Result<Vec<f64>> { Ok(vec![t.cos(), 0.5 - t]) };
        let gw = |t: f64| {
            let (x, v) = g.state_at(t).unwrap();
            s.inner(&x, &v, &u(t).unwrap(), &w(t).unwrap()).unwrap()
        };
        let (t, h) = (0.3, 1e-3);
        let lhs = (-gw(t + 2.0 * h) + 8.0 * gw(t + h) - 8.0 * gw(t - h) + gw(t - 2.0 * h)) / (12.0 * h);
        let du = covariant_derivative(&s, &g, u, t, h).unwrap();
        let dw = covariant_derivative(&s, &g, w, t, h).unwrap();
        let (x, v) = g.state_at(t).unwrap();
        let rhs = s.inner(&x, &v, &du, &w(t).unwrap()).unwrap() + s.inner(&x, &v, &u(t).unwrap(), &dw).unwrap();
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} {rhs}");
    }
}
