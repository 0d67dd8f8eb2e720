//! Gradients, the nonlinear Laplacian, normalized transnormal functions and
//! their transport under homothetic navigation.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::ChartedFinslerMetric;
use crate::correspondence::{linear_pairing, HomotheticNavigation};
use crate::error::{to_f64s, GeometryError, Result};
use crate::geodesics::{integrate_geodesic, GeodesicOptions};
use crate::linalg::{self, Matrix};
use crate::ode::{self, OdeOptions, OdeStatus};
use crate::Real;

/// Smallest differential norm accepted as regular.
pub const REGULARITY_FLOOR: f64 = 1e-6;
/// Within-level spread below which a function counts as transnormal.
pub const TRANSNORMAL_TOLERANCE: f64 = 1e-4;
/// Within-level spread below which a function counts as isoparametric.
pub const ISOPARAMETRIC_TOLERANCE: f64 = 1e-3;

/// A real function on the chart with its differential.
pub trait ScalarField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> Result<T>;

    /// `df(x)`; the default uses central differences at step `1e-6`.
    fn differential(&self, x: &[T]) -> Result<Vec<T>> {
        central_differential(|p| self.value(p), x, T::lit(1e-6))
    }
}

fn central_differential<T: Real>(f: impl Fn(&[T]) -> Result<T>, x: &[T], step: T) -> Result<Vec<T>> {
    let h = step * linalg::norm(x).max(T::one());
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[i] += h;
            q[i] -= h;
            Ok((f(&p)? - f(&q)?) / (T::lit(2.0) * h))
        })
        .collect()
}

type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type CovectorFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// A scalar field given by closures.
#[derive(Clone)]
pub struct ScalarFieldSpec<T> {
    pub name: String,
    dim: usize,
    value: ValueFn<T>,
    differential: Option<CovectorFn<T>>,
}

impl<T> fmt::Debug for ScalarFieldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFieldSpec").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl<T: Real> ScalarFieldSpec<T> {
    pub fn new(name: &str, dim: usize, value: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        ScalarFieldSpec { name: name.into(), dim, value: Arc::new(value), differential: None }
    }

    pub fn with_differential(mut self, df: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.differential = Some(Arc::new(df));
        self
    }

    /// `|x − center| − r0`.
    pub fn radial(center: Vec<T>, r0: T) -> Self {
        let dim = center.len();
        let c1 = center.clone();
        ScalarFieldSpec::new("radial", dim, move |x| linalg::norm(&linalg::sub(x, &c1)) - r0).with_differential(
            move |x| {
                let d = linalg::sub(x, &center);
                linalg::scale(&d, T::one() / linalg::norm(&d))
            },
        )
    }

    /// `⟨a, x⟩ + b`.
    pub fn linear(a: Vec<T>, b: T) -> Self {
        let dim = a.len();
        let a1 = a.clone();
        ScalarFieldSpec::new("linear", dim, move |x| linalg::dot(&a1, x) + b).with_differential(move |_| a.clone())
    }
}

impl<T: Real> ScalarField<T> for ScalarFieldSpec<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let v = (self.value)(x);
        if !v.is_finite() {
            return Err(GeometryError::InvalidInput(format!("scalar field {} is not finite here", self.name)));
        }
        Ok(v)
    }

    fn differential(&self, x: &[T]) -> Result<Vec<T>> {
        match &self.differential {
            Some(df) => Ok(df(x)),
            None => central_differential(|p| self.value(p), x, T::lit(1e-6)),
        }
    }
}

fn regular_differential<T: Real>(f: &dyn ScalarField<T>, x: &[T]) -> Result<Vec<T>> {
    let df = f.differential(x)?;
    let n = linalg::norm(&df);
    if !(n >= T::lit(REGULARITY_FLOOR)) {
        return Err(GeometryError::CriticalPoint { norm: n.approx(), x: to_f64s(x) });
    }
    Ok(df)
}

/// `∇f(x)`, the vector with `g_{∇f}(∇f, ·) = df(x)`.
pub fn finsler_gradient<T: Real>(metric: &ChartedFinslerMetric<T>, f: &dyn ScalarField<T>, x: &[T]) -> Result<Vec<T>> {
    let df = regular_differential(f, x)?;
    let norm = metric.norm_at(x)?;
    let y = norm.legendre(&df)?;
    let g = norm.fundamental_tensor(&y)?;
    let res = linalg::norm(&linalg::sub(&g.mul_vec(&y), &df)) / linalg::norm(&df);
    if res > T::lit(1e-10) {
        return Err(GeometryError::LegendreSolveFailed { residual: res.approx() });
    }
    Ok(y)
}

/// Moves `x` along the gradient lines of `f` onto the level `f = level`.
pub fn project_to_level<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    f: &dyn ScalarField<T>,
    x: &[T],
    level: T,
) -> Result<Vec<T>> {
    let fail = |reason: String| GeometryError::LevelSampling { level: level.approx(), reason };
    let f0 = f.value(x)?;
    let gap = level - f0;
    // along x' = ∇f / df(∇f), f changes at unit rate
    let mut y = x.to_vec();
    if gap.abs() > T::lit(1e-12) {
        let rhs = |_t: T, p: &[T]| -> Result<Vec<T>> {
            let grad = finsler_gradient(metric, f, p)?;
            let rate = linalg::dot(&f.differential(p)?, &grad);
            Ok(linalg::scale(&grad, T::one() / rate))
        };
        let sol = ode::integrate(rhs, T::zero(), x, &[gap], &OdeOptions::with_tolerance(T::lit(1e-10)), |_, p| {
            metric.contains(p)
        })?;
        match sol.status {
            OdeStatus::Completed => y = sol.states.last().cloned().ok_or_else(|| fail("no state".into()))?,
            OdeStatus::Stopped { reason, .. } => return Err(fail(reason)),
        }
    }
    for _ in 0..8 {
        let r = level - f.value(&y)?;
        if r.abs() <= T::lit(1e-13) * level.abs().max(T::one()) {
            break;
        }
        let grad = finsler_gradient(metric, f, &y)?;
        let rate = linalg::dot(&f.differential(&y)?, &grad);
        y = linalg::axpy(&y, r / rate, &grad);
    }
    if !metric.contains(&y) {
        return Err(fail("projection left the chart".into()));
    }
    Ok(y)
}

/// Samples `count` points of one level set by projecting random chart
/// points; failed projections are retried with fresh points.
pub fn sample_level<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    f: &dyn ScalarField<T>,
    level: T,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<T>>> {
    let inset = T::lit(0.02) * metric.domain().scale();
    let mut out = Vec::with_capacity(count);
    let mut last_err = None;
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count.max(1) {
            let reason = last_err.map_or("no admissible start points".to_string(), |e: GeometryError| e.to_string());
            return Err(GeometryError::LevelSampling { level: level.approx(), reason });
        }
        let x = metric.domain().sample(rng, inset);
        if !metric.contains(&x) {
            continue;
        }
        match project_to_level(metric, f, &x, level) {
            Ok(p) if metric.domain().clearance(&p) > inset => out.push(p),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Ok(out)
}

/// `F(∇f)` per level with its within-level spread.
#[derive(Clone, Debug)]
pub struct TransnormalProfile<T> {
    /// `(level, mean F(∇f))`.
    pub levels: Vec<(T, T)>,
    /// Largest `max − min` of `F(∇f)` within a level.
    pub spread: T,
}

impl<T: Real> TransnormalProfile<T> {
    pub fn is_transnormal(&self) -> bool {
        self.spread < T::lit(TRANSNORMAL_TOLERANCE)
    }
}

pub fn transnormal_profile<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    f: &dyn ScalarField<T>,
    levels: &[T],
    per_level: usize,
    seed: u64,
) -> Result<TransnormalProfile<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TransnormalProfile { levels: Vec::with_capacity(levels.len()), spread: T::zero() };
    for &level in levels {
        let pts = sample_level(metric, f, level, per_level, &mut rng)?;
        let a: Vec<T> = pts
            .iter()
            .map(|p| metric.norm(p, &finsler_gradient(metric, f, p)?))
            .collect::<Result<_>>()?;
        let (lo, hi) = a.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
        out.spread = out.spread.max(hi - lo);
        let m = T::from_usize(a.len()).expect("len");
        out.levels.push((level, a.iter().copied().sum::<T>() / m));
    }
    Ok(out)
}

/// `φ(s)` with `φ' = 1/a(s)` tabulated along a gradient curve.
#[derive(Clone, Debug)]
struct PhiTable<T> {
    s: Vec<T>,
    phi: Vec<T>,
    dphi: Vec<T>,
}

impl<T: Real> PhiTable<T> {
    fn eval(&self, s: T) -> Result<(T, T)> {
        let (lo, hi) = (self.s[0], self.s[self.s.len() - 1]);
        if s < lo || s > hi {
            return Err(GeometryError::LevelSampling {
                level: s.approx(),
                reason: format!("outside the normalized window [{}, {}]", lo.approx(), hi.approx()),
            });
        }
        let k = self.s.iter().position(|&v| v > s).map_or(self.s.len() - 2, |k| k.saturating_sub(1)).min(self.s.len() - 2);
        let h = self.s[k + 1] - self.s[k];
        let u = (s - self.s[k]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let v = (two * u3 - three * u2 + T::one()) * self.phi[k]
            + (u3 - two * u2 + u) * h * self.dphi[k]
            + (three * u2 - two * u3) * self.phi[k + 1]
            + (u3 - u2) * h * self.dphi[k + 1];
        let d = ((T::lit(6.0) * u2 - T::lit(6.0) * u) * (self.phi[k] - self.phi[k + 1])) / h
            + (three * u2 - T::lit(4.0) * u + T::one()) * self.dphi[k]
            + (three * u2 - two * u) * self.dphi[k + 1];
        Ok((v, d))
    }
}

/// `φ∘f` with `F(∇(φ∘f)) = 1` and value 0 at the base point.
#[derive(Clone)]
pub struct NormalizedField<T: Real> {
    inner: Arc<dyn ScalarField<T>>,
    table: PhiTable<T>,
}

impl<T: Real> fmt::Debug for NormalizedField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalizedField").field("window", &(self.table.s[0], self.table.s[self.table.s.len() - 1])).finish()
    }
}

impl<T: Real> ScalarField<T> for NormalizedField<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[T]) -> Result<T> {
        Ok(self.table.eval(self.inner.value(x)?)?.0)
    }

    fn differential(&self, x: &[T]) -> Result<Vec<T>> {
        let (_, d) = self.table.eval(self.inner.value(x)?)?;
        Ok(linalg::scale(&self.inner.differential(x)?, d))
    }
}

/// Reparametrizes a transnormal `f` so that its gradient has unit length
/// and it vanishes at `x0`, on the values `window` of `f`.
pub fn normalize_transnormal<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    f: Arc<dyn ScalarField<T>>,
    x0: &[T],
    window: (T, T),
    seed: u64,
) -> Result<NormalizedField<T>> {
    let f0 = f.value(x0)?;
    let (lo, hi) = window;
    if !(lo <= f0 && f0 <= hi) || lo == hi {
        return Err(GeometryError::InvalidInput("the window must contain f(x0)".into()));
    }
    let levels: Vec<T> = ode::linspace(lo, hi, 6);
    let profile = transnormal_profile(metric, f.as_ref(), &levels, 6, seed)?;
    if !profile.is_transnormal() {
        return Err(GeometryError::NotTransnormal { spread: profile.spread.approx() });
    }
    // along dx/ds = ∇f / a², f increases at unit rate; carry φ with φ' = 1/a
    let rhs = |_s: T, state: &[T]| -> Result<Vec<T>> {
        let x = &state[..state.len() - 1];
        let grad = finsler_gradient(metric, f.as_ref(), x)?;
        let a = metric.norm(x, &grad)?;
        let mut out = linalg::scale(&grad, T::one() / (a * a));
        out.push(T::one() / a);
        Ok(out)
    };
    let mut y0 = x0.to_vec();
    y0.push(T::zero());
    let opts = OdeOptions::with_tolerance(T::lit(1e-12));
    let run = |end: T| -> Result<Vec<(T, Vec<T>)>> {
        if end == f0 {
            return Ok(vec![(f0, y0.clone())]);
        }
        let grid = ode::linspace(f0, end, 200);
        let sol = ode::integrate(rhs, f0, &y0, &grid, &opts, |_, s| metric.contains(&s[..s.len() - 1]))?;
        if let OdeStatus::Stopped { reason, .. } = sol.status {
            return Err(GeometryError::LevelSampling { level: end.approx(), reason });
        }
        Ok(sol.times.into_iter().zip(sol.states).collect())
    };
    let mut rows = run(lo)?;
    rows.reverse();
    rows.extend(run(hi)?.into_iter().skip(1));
    let mut table = PhiTable { s: Vec::new(), phi: Vec::new(), dphi: Vec::new() };
    for (s, state) in rows {
        let n = state.len() - 1;
        let x = &state[..n];
        let a = metric.norm(x, &finsler_gradient(metric, f.as_ref(), x)?)?;
        table.s.push(s);
        table.phi.push(state[n]);
        table.dphi.push(T::one() / a);
    }
    Ok(NormalizedField { inner: f, table })
}

/// `Δf = (1/σ) Σ ∂_i(σ (∇f)^i)` with the Busemann–Hausdorff density.
pub fn nonlinear_laplacian<T: Real>(metric: &ChartedFinslerMetric<T>, f: &dyn ScalarField<T>, x: &[T]) -> Result<T> {
    let h = T::lit(metric.policy().laplacian_step) * metric.domain().scale().max(T::one());
    if metric.domain().clearance(x) <= h {
        return Err(GeometryError::InsufficientStencil { x: to_f64s(x) });
    }
    let flux = |p: &[T], i: usize| -> Result<T> {
        let sigma = metric.deterministic_density(p)?;
        Ok(sigma * finsler_gradient(metric, f, p)?[i])
    };
    let mut div = T::zero();
    for i in 0..x.len() {
        let mut p = x.to_vec();
        let mut q = x.to_vec();
        p[i] += h;
        q[i] -= h;
        div += (flux(&p, i)? - flux(&q, i)?) / (T::lit(2.0) * h);
    }
    Ok(div / metric.deterministic_density(x)?)
}

/// Per-level statistics of `F(∇f)` and `Δf`.
#[derive(Clone, Debug)]
pub struct LevelStats<T> {
    pub level: T,
    pub samples: Vec<Vec<T>>,
    pub gradient_mean: T,
    pub gradient_std: T,
    pub laplacian_mean: T,
    pub laplacian_std: T,
    /// Why the level could not be sampled, if it could not.
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct IsoparametricReport<T> {
    pub levels: Vec<LevelStats<T>>,
    pub isoparametric: bool,
}

fn mean_std<T: Real>(v: &[T]) -> (T, T) {
    let m = T::from_usize(v.len().max(1)).expect("len");
    let mean = v.iter().copied().sum::<T>() / m;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / m;
    (mean, var.sqrt())
}

/// Samples each level and reports how much `F(∇f)` and `Δf` vary on it.
/// The verdict requires every level to be sampled and both spreads to stay
/// below the isoparametric tolerance.
pub fn isoparametric_check<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    f: &dyn ScalarField<T>,
    levels: &[T],
    per_level: usize,
    seed: u64,
) -> Result<IsoparametricReport<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(levels.len());
    let mut verdict = true;
    for &level in levels {
        let stats = (|| -> Result<LevelStats<T>> {
            let pts = sample_level(metric, f, level, per_level, &mut rng)?;
            let mut grads = Vec::with_capacity(pts.len());
            let mut laps = Vec::with_capacity(pts.len());
            for p in &pts {
                grads.push(metric.norm(p, &finsler_gradient(metric, f, p)?)?);
                laps.push(nonlinear_laplacian(metric, f, p)?);
            }
            let (gm, gs) = mean_std(&grads);
            let (lm, ls) = mean_std(&laps);
            Ok(LevelStats {
                level,
                samples: pts,
                gradient_mean: gm,
                gradient_std: gs,
                laplacian_mean: lm,
                laplacian_std: ls,
                failure: None,
            })
        })();
        let stats = match stats {
            Ok(s) => s,
            Err(e @ (GeometryError::LevelSampling { .. } | GeometryError::InsufficientStencil { .. })) => LevelStats {
                level,
                samples: Vec::new(),
                gradient_mean: T::nan(),
                gradient_std: T::nan(),
                laplacian_mean: T::nan(),
                laplacian_std: T::nan(),
                failure: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        let tol = T::lit(ISOPARAMETRIC_TOLERANCE);
        verdict &= stats.failure.is_none() && stats.gradient_std < tol && stats.laplacian_std < tol;
        out.push(stats);
    }
    Ok(IsoparametricReport { levels: out, isoparametric: verdict })
}

/// The function `f̃` whose level `t` is `Ψ_t` applied to the level
/// `s(t)` of `f`, evaluated pointwise by root finding.
#[derive(Clone)]
pub struct TransportedField<T: Real> {
    nav: HomotheticNavigation<T>,
    base: Arc<dyn ScalarField<T>>,
}

impl<T: Real> fmt::Debug for TransportedField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportedField").field("c", &self.nav.c()).finish()
    }
}

impl<T: Real> TransportedField<T> {
    pub fn new(nav: HomotheticNavigation<T>, base: Arc<dyn ScalarField<T>>) -> Self {
        TransportedField { nav, base }
    }

    pub fn navigation(&self) -> &HomotheticNavigation<T> {
        &self.nav
    }

    pub fn base_field(&self) -> &Arc<dyn ScalarField<T>> {
        &self.base
    }

    /// `t = f̃(x̃)` with the base point `p = Ψ_{−t}(x̃)` on `f = s(t)`.
    fn solve(&self, xt: &[T]) -> Result<(T, Vec<T>, Matrix<T>)> {
        transport_root(&self.nav, self.base.as_ref(), xt)
    }
}

fn transport_root<T: Real>(
    nav: &HomotheticNavigation<T>,
    f: &dyn ScalarField<T>,
    xt: &[T],
) -> Result<(T, Vec<T>, Matrix<T>)> {
    let wind = nav.datum().wind();
    let domain = nav.base().domain();
    let warp = nav.warp();
    // ρ(t) = f(Ψ_{−t} x̃) − s(t) is decreasing in the correspondence region
    let rho = |t: T| -> Result<(T, T, Vec<T>, Matrix<T>)> {
        let (p, d) = wind.flow_within(xt, -t, domain).map_err(|_| GeometryError::OutsideCorrespondence)?;
        let df = f.differential(&p)?;
        let val = f.value(&p)? - warp.s(t);
        let slope = -linalg::dot(&df, &wind.value(&p)?) - warp.ds(t);
        Ok((val, slope, p, d))
    };
    let mut t = f.value(xt)?;
    for _ in 0..60 {
        let (val, slope, p, d) = rho(t)?;
        if !(slope < T::zero()) {
            return Err(GeometryError::OutsideCorrespondence);
        }
        let step = val / slope;
        let mut next = t - step;
        // keep Newton from jumping far outside the working horizon
        let cap = T::lit(0.5) * (T::one() + t.abs());
        if (next - t).abs() > cap {
            next = t - cap * step.signum();
        }
        if (next - t).abs() <= T::lit(1e-15) * (T::one() + t.abs()) {
            return Ok((next, p, d));
        }
        t = next;
    }
    let (val, _, p, d) = rho(t)?;
    if val.abs() < T::lit(1e-12) {
        Ok((t, p, d))
    } else {
        Err(GeometryError::OutsideCorrespondence)
    }
}

impl<T: Real> ScalarField<T> for TransportedField<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[T]) -> Result<T> {
        Ok(self.solve(x)?.0)
    }

    /// Implicit differentiation of `f(Ψ_{−t} x̃) = s(t)`.
    fn differential(&self, x: &[T]) -> Result<Vec<T>> {
        let (t, p, d) = self.solve(x)?;
        let df = self.base.differential(&p)?;
        let denom = linalg::dot(&df, &self.nav.datum().wind().value(&p)?) + self.nav.warp().ds(t);
        let row = d.transpose().mul_vec(&df);
        Ok(linalg::scale(&row, T::one() / denom))
    }
}

/// `f̃(x̃)` for a normalized `f`.
pub fn transport_isoparametric<T: Real>(nav: &HomotheticNavigation<T>, f: &dyn ScalarField<T>, xt: &[T]) -> Result<T> {
    Ok(transport_root(nav, f, xt)?.0)
}

/// The level-dependent map `Ψ(x) = Ψ_{t(x)}(x)` with `s(t(x)) = f(x)`, and
/// its tangent map.
pub fn level_map<T: Real>(
    nav: &HomotheticNavigation<T>,
    f: &dyn ScalarField<T>,
    x: &[T],
) -> Result<(Vec<T>, Matrix<T>)> {
    let fx = f.value(x)?;
    let t = nav.warp().inverse(fx);
    let wind = nav.datum().wind();
    let (p, d) = wind.flow_within(x, t, nav.base().domain())?;
    // ∂t/∂x = df / s'(t)
    let dt = linalg::scale(&f.differential(x)?, T::one() / nav.warp().ds(t));
    let v = wind.value(&p)?;
    let n = x.len();
    Ok((p, d.add(&Matrix::from_fn(n, n, |i, j| v[i] * dt[j]))))
}

/// Recovers `f(x)` from `f̃` by solving `f̃(Ψ_t x) = t` and returning
/// `s(t)`.
pub fn recover_base_value<T: Real>(
    nav: &HomotheticNavigation<T>,
    ft: &dyn ScalarField<T>,
    x: &[T],
) -> Result<T> {
    let wind = nav.datum().wind();
    let domain = nav.base().domain();
    let mut t = ft.value(x)?;
    for _ in 0..60 {
        let (p, _) = wind.flow_within(x, t, domain).map_err(|_| GeometryError::OutsideCorrespondence)?;
        let q = ft.value(&p)? - t;
        let dq = linalg::dot(&ft.differential(&p)?, &wind.value(&p)?) - T::one();
        if !(dq < T::zero()) {
            return Err(GeometryError::OutsideCorrespondence);
        }
        let next = t - q / dq;
        if (next - t).abs() <= T::lit(1e-14) * (T::one() + t.abs()) {
            return Ok(nav.warp().s(next));
        }
        t = next;
    }
    Err(GeometryError::OutsideCorrespondence)
}

/// One point of the Laplacian relation.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianRow<T> {
    pub x: Vec<T>,
    pub x_tilde: Vec<T>,
    /// `Δ̃f̃(Ψ(x))`.
    pub lhs: T,
    /// `(2cf(x) + 1) Δf(x) − 2cn`.
    pub rhs: T,
    pub residual: T,
}

pub fn laplacian_relation<T: Real>(
    ft: &TransportedField<T>,
    x: &[T],
) -> Result<LaplacianRow<T>> {
    let nav = ft.navigation();
    let f = ft.base_field().as_ref();
    let c = nav.c();
    let n = T::from_usize(nav.dim()).expect("dim");
    let (xt, _) = level_map(nav, f, x)?;
    let lhs = nonlinear_laplacian(nav.navigated(), ft, &xt)?;
    let rhs = (T::lit(2.0) * c * f.value(x)? + T::one()) * nonlinear_laplacian(nav.base(), f, x)? - T::lit(2.0) * c * n;
    Ok(LaplacianRow { x: x.to_vec(), x_tilde: xt, lhs, rhs, residual: (lhs - rhs).abs() })
}

pub fn verify_laplacian_relation<T: Real>(ft: &TransportedField<T>, points: &[Vec<T>]) -> Result<Vec<LaplacianRow<T>>> {
    points.iter().map(|x| laplacian_relation(ft, x)).collect()
}

/// One point of the density pull-back identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackRow<T> {
    pub x: Vec<T>,
    pub c0: T,
    /// `det Ψ_* · σ̃(Ψ(x)) / σ(x)`.
    pub measured: T,
    /// `(1 + c0)(2cf(x) + 1)^{−n−1}`.
    pub expected: T,
    pub relative_residual: T,
    /// Spread of `c0` along the gradient curve through `x`.
    pub c0_spread: T,
}

/// Checks the pull-back of the navigated density under the level map, with
/// `c0` from the pairing fit along the gradient geodesic through `x`.
pub fn density_pullback<T: Real>(nav: &HomotheticNavigation<T>, f: &dyn ScalarField<T>, x: &[T], half_span: T) -> Result<PullbackRow<T>> {
    let base = nav.base();
    let c = nav.c();
    let fx = f.value(x)?;
    let grad = finsler_gradient(base, f, x)?;
    let opts = GeodesicOptions::default().with_samples(40);
    let geo = integrate_geodesic(base, x, &grad, (-half_span, half_span), &opts)?;
    let pairing = linear_pairing(base, &geo, nav.datum().wind())?;
    // the pairing is fitted with time origin at x, which sits at s = f(x)
    let c0 = pairing.c0 + T::lit(2.0) * c * fx;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for p in &geo.positions {
        let g = finsler_gradient(base, f, p)?;
        let v = base.inner(p, &g, &nav.datum().wind().value(p)?, &g)? + T::lit(2.0) * c * f.value(p)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let (xt, d) = level_map(nav, f, x)?;
    let measured = d.determinant() * nav.navigated().deterministic_density(&xt)? / base.deterministic_density(x)?;
    let n = nav.dim() as i32;
    let expected = (T::one() + c0) * (T::lit(2.0) * c * fx + T::one()).powi(-n - 1);
    Ok(PullbackRow {
        x: x.to_vec(),
        c0,
        measured,
        expected,
        relative_residual: (measured - expected).abs() / expected.abs(),
        c0_spread: hi - lo,
    })
}
