//! Transport of geodesics, Jacobi fields and curvature under navigation by a
//! homothetic (or Killing) wind, with the matching verification routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{homothetic_dilation, HomotheticEstimate};
use crate::chart::{ChartedFinslerMetric, VectorFieldKind};
use crate::error::{GeometryError, Result};
use crate::geodesics::{
    flag_curvature, integrate_geodesic, integrate_jacobi_raw, kmax_kmin, s_curvature, spray_values,
    GeodesicOptions, GeodesicSolution, JacobiSolution,
};
use crate::linalg::{self, Matrix};
use crate::navigation::NavigationDatum;
use crate::ode::OdeStatus;
use crate::Real;

const SERIES_THRESHOLD: f64 = 1e-8;

/// Reparametrization `s(t) = (e^{2ct} − 1)/(2c)` relating base and
/// navigated unit-speed geodesics, with `s(t) = t` at `c = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWarp<T> {
    c: T,
}

impl<T: Real> TimeWarp<T> {
    pub fn new(c: T) -> Self {
        TimeWarp { c }
    }

    pub fn c(&self) -> T {
        self.c
    }

    fn series(&self) -> bool {
        self.c.abs() < T::lit(SERIES_THRESHOLD)
    }

    pub fn s(&self, t: T) -> T {
        let c = self.c;
        if self.series() {
            t + c * t * t + T::lit(2.0 / 3.0) * c * c * t * t * t
        } else {
            (T::lit(2.0) * c * t).exp_m1() / (T::lit(2.0) * c)
        }
    }

    /// `s'(t) = e^{2ct}`.
    pub fn ds(&self, t: T) -> T {
        (T::lit(2.0) * self.c * t).exp()
    }

    pub fn inverse(&self, s: T) -> T {
        let c = self.c;
        if self.series() {
            s - c * s * s + T::lit(4.0 / 3.0) * c * c * s * s * s
        } else {
            (T::lit(2.0) * c * s).ln_1p() / (T::lit(2.0) * c)
        }
    }
}

/// A navigation datum whose wind has a measured dilation.
#[derive(Clone, Debug)]
pub struct HomotheticNavigation<T: Real> {
    datum: NavigationDatum<T>,
    navigated: ChartedFinslerMetric<T>,
    estimate: HomotheticEstimate<T>,
    warp: TimeWarp<T>,
}

/// Tolerance between a declared and a measured dilation.
pub const DILATION_TOLERANCE: f64 = 1e-6;

impl<T: Real> HomotheticNavigation<T> {
    /// Measures the dilation of the wind on `samples` random admissible
    /// points. Fails if the wind is not homothetic or contradicts a declared
    /// dilation.
    pub fn new(mut datum: NavigationDatum<T>, samples: usize, seed: u64) -> Result<Self> {
        let base = datum.base();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inset = T::lit(0.1) * base.domain().scale();
        let mut pts = Vec::with_capacity(samples);
        let mut attempts = 0;
        while pts.len() < samples.max(1) {
            attempts += 1;
            if attempts > 100 * samples.max(1) {
                return Err(GeometryError::InvalidInput("no admissible sample points for the dilation fit".into()));
            }
            let x = base.domain().sample(&mut rng, inset);
            if !datum.admissible(&x) {
                continue;
            }
            let y: Vec<T> = (0..datum.dim()).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            if linalg::norm(&y) < T::lit(0.1) {
                continue;
            }
            pts.push((x, y));
        }
        let estimate = homothetic_dilation(base, datum.wind(), &pts)?;
        if !estimate.homothetic {
            return Err(GeometryError::NotHomothetic { residual: estimate.max_residual.approx() });
        }
        if let Some(declared) = datum.wind().dilation() {
            if (declared - estimate.c).abs() > T::lit(DILATION_TOLERANCE) {
                return Err(GeometryError::DilationMismatch {
                    declared: declared.approx(),
                    measured: estimate.c.approx(),
                });
            }
        }
        datum.wind_mut().set_dilation(Some(estimate.c));
        let navigated = datum.navigated_metric();
        Ok(HomotheticNavigation { datum, navigated, estimate, warp: TimeWarp::new(estimate.c) })
    }

    /// Uses the closed-form Randers expression for `F̃` (Riemannian bases).
    pub fn with_closed_form(mut self) -> Result<Self> {
        self.navigated = self.datum.navigate_randers()?;
        Ok(self)
    }

    pub fn datum(&self) -> &NavigationDatum<T> {
        &self.datum
    }

    pub fn base(&self) -> &ChartedFinslerMetric<T> {
        self.datum.base()
    }

    pub fn navigated(&self) -> &ChartedFinslerMetric<T> {
        &self.navigated
    }

    pub fn c(&self) -> T {
        self.estimate.c
    }

    pub fn estimate(&self) -> &HomotheticEstimate<T> {
        &self.estimate
    }

    pub fn warp(&self) -> &TimeWarp<T> {
        &self.warp
    }

    pub fn dim(&self) -> usize {
        self.datum.dim()
    }

    /// `ỹ = y + F(x, y) V(x)`.
    pub fn shifted(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        let f = self.base().norm(x, y)?;
        Ok(linalg::axpy(y, f, &self.datum.wind().value(x)?))
    }

    fn flow(&self, x: &[T], t: T) -> Result<(Vec<T>, Matrix<T>)> {
        self.datum.wind().flow_within(x, t, self.base().domain())
    }

    fn base_state(&self, gamma: &GeodesicSolution<T>, t: T) -> Result<(T, Vec<T>, Vec<T>)> {
        let s = self.warp.s(t);
        if s < gamma.start() || s > gamma.end() {
            return Err(GeometryError::ExtendBaseGeodesic {
                needed: s.approx(),
                start: gamma.start().approx(),
                end: gamma.end().approx(),
            });
        }
        let (x, v) = gamma.state_at(s)?;
        Ok((s, x, v))
    }

    /// `(Ψ_t)_*(s'(t) v) + V(Ψ_t x)` for a base point `x` and velocity `v`.
    fn transported_velocity(&self, x: &[T], v: &[T], t: T) -> Result<(Vec<T>, Vec<T>)> {
        let (p, d) = self.flow(x, t)?;
        let vel = linalg::axpy(&self.datum.wind().value(&p)?, self.warp.ds(t), &d.mul_vec(v));
        Ok((p, vel))
    }
}

fn check_unit_speed<T: Real>(metric: &ChartedFinslerMetric<T>, gamma: &GeodesicSolution<T>) -> Result<()> {
    let o = gamma.origin();
    let f = metric.norm(&gamma.positions[o], &gamma.velocities[o])?;
    let drift = gamma.speed_drift().max((f - T::one()).abs());
    if drift > T::lit(1e-7) {
        return Err(GeometryError::SpeedDrift { drift: drift.approx(), tolerance: 1e-7 });
    }
    Ok(())
}

fn time_grid<T: Real>(span: (T, T), samples: usize) -> Result<Vec<T>> {
    let (a, b) = span;
    if !(a <= T::zero() && T::zero() <= b) || a == b {
        return Err(GeometryError::InvalidInput("time span must contain 0".into()));
    }
    let samples = samples.max(2);
    let total = (b - a).approx();
    let nb = ((samples as f64) * (-a).approx() / total).round() as usize;
    let nf = ((samples as f64) * b.approx() / total).round() as usize;
    let mut out: Vec<T> = (1..=nb).rev().map(|k| a * T::lit(k as f64 / nb as f64)).collect();
    out.push(T::zero());
    out.extend((1..=nf).map(|k| b * T::lit(k as f64 / nf as f64)));
    Ok(out)
}

/// `γ̃(t) = Ψ_t(γ(s(t)))` for an `F`-unit-speed geodesic `γ`, sampled at
/// `samples` intervals of `span`.
pub fn transport_geodesic<T: Real>(
    nav: &HomotheticNavigation<T>,
    gamma: &GeodesicSolution<T>,
    span: (T, T),
    samples: usize,
) -> Result<GeodesicSolution<T>> {
    check_unit_speed(nav.base(), gamma)?;
    let times = time_grid(span, samples)?;
    let delta = T::lit(1e-5) * (span.1 - span.0).max(T::one());
    let mut out = GeodesicSolution {
        times: Vec::with_capacity(times.len()),
        positions: Vec::with_capacity(times.len()),
        velocities: Vec::with_capacity(times.len()),
        accelerations: Vec::with_capacity(times.len()),
        speeds: Vec::with_capacity(times.len()),
        status: OdeStatus::Completed,
    };
    let velocity_at = |t: T| -> Result<(Vec<T>, Vec<T>)> {
        let (_, x, v) = nav.base_state(gamma, t)?;
        nav.transported_velocity(&x, &v, t)
    };
    for &t in &times {
        let (p, vel) = velocity_at(t)?;
        // one-sided at the ends of the base geodesic
        let acc = match (velocity_at(t + delta), velocity_at(t - delta)) {
            (Ok((_, vp)), Ok((_, vm))) => linalg::scale(&linalg::sub(&vp, &vm), T::one() / (T::lit(2.0) * delta)),
            (Ok((_, vp)), Err(_)) => linalg::scale(&linalg::sub(&vp, &vel), T::one() / delta),
            (Err(_), Ok((_, vm))) => linalg::scale(&linalg::sub(&vel, &vm), T::one() / delta),
            (Err(e), Err(_)) => return Err(e),
        };
        out.speeds.push(nav.navigated().norm(&p, &vel)?);
        out.times.push(t);
        out.positions.push(p);
        out.velocities.push(vel);
        out.accelerations.push(acc);
    }
    Ok(out)
}

/// `J̃(t) = (Ψ_t)_* J(s(t))` along the transported geodesic.
pub fn transport_jacobi<T: Real>(
    nav: &HomotheticNavigation<T>,
    jacobi: &JacobiSolution<T>,
    span: (T, T),
    samples: usize,
) -> Result<JacobiSolution<T>> {
    let gamma = &jacobi.geodesic;
    let geodesic = transport_geodesic(nav, gamma, span, samples)?;
    let wind = nav.datum.wind();
    let affine = matches!(wind.kind(), VectorFieldKind::Affine { .. });
    let mut field = Vec::with_capacity(geodesic.len());
    let mut rate = Vec::with_capacity(geodesic.len());
    let mut second = Vec::with_capacity(geodesic.len());
    for (k, &t) in geodesic.times.iter().enumerate() {
        let (s, x, v) = nav.base_state(gamma, t)?;
        let (j, jd) = jacobi.field_at(s)?;
        let (p, d) = nav.flow(&x, t)?;
        let jt = d.mul_vec(&j);
        // d/dt of (Ψ_t)_* J(s(t)) = V'(p) J̃ + s' (Ψ_t)_* J̇ + s' (D²Ψ_t)[J, γ̇]
        let mut r = linalg::add(&wind.jacobian(&p)?.mul_vec(&jt), &linalg::scale(&d.mul_vec(&jd), nav.warp.ds(t)));
        if !affine {
            let eps = T::lit(1e-4) * linalg::norm(&x).max(T::one()) / linalg::norm(&j).max(T::lit(1e-300));
            let (_, dp) = nav.flow(&linalg::axpy(&x, eps, &j), t)?;
            let (_, dm) = nav.flow(&linalg::axpy(&x, -eps, &j), t)?;
            let curv = dp.sub(&dm).scale(T::one() / (T::lit(2.0) * eps)).mul_vec(&v);
            r = linalg::axpy(&r, nav.warp.ds(t), &curv);
        }
        let lin = crate::geodesics::spray_linearization(nav.navigated(), &p, &geodesic.velocities[k], &jt, &r)?;
        second.push(linalg::scale(&lin, -T::lit(2.0)));
        field.push(jt);
        rate.push(r);
    }
    Ok(JacobiSolution { geodesic, field, rate, second })
}

/// How well a transported curve satisfies the navigated geodesic equations.
#[derive(Clone, Debug)]
pub struct TransportCheck<T> {
    /// `max |F̃(γ̃, γ̇̃) − 1|`.
    pub speed_residual: T,
    /// `max |γ̈̃ + 2G̃(γ̃, γ̇̃)|` over interior samples.
    pub equation_residual: T,
    /// Sup distance to the `F̃`-solution with the same initial data.
    pub direct_discrepancy: T,
}

/// Checks a transported geodesic against the navigated metric directly.
pub fn check_transported_geodesic<T: Real>(
    nav: &HomotheticNavigation<T>,
    transported: &GeodesicSolution<T>,
) -> Result<TransportCheck<T>> {
    let f = nav.navigated();
    let speed = transported.speeds.iter().fold(T::zero(), |m, &s| m.max((s - T::one()).abs()));
    let mut eq = T::zero();
    let last = transported.len() - 1;
    for k in 1..last {
        let g = spray_values(f, &transported.positions[k], &transported.velocities[k])?;
        let r = linalg::axpy(&transported.accelerations[k], T::lit(2.0), &g);
        eq = eq.max(linalg::norm(&r));
    }
    let o = transported.origin();
    let opts = GeodesicOptions { speed_tolerance: None, ..GeodesicOptions::default() };
    let direct = integrate_geodesic(
        f,
        &transported.positions[o],
        &transported.velocities[o],
        (transported.start(), transported.end()),
        &opts,
    )?;
    let mut disc = T::zero();
    for (t, x) in transported.times.iter().zip(&transported.positions) {
        let (y, _) = direct.state_at(*t)?;
        disc = disc.max(linalg::max_abs_diff(x, &y));
    }
    Ok(TransportCheck { speed_residual: speed, equation_residual: eq, direct_discrepancy: disc })
}

/// Checks a transported Jacobi field: orthogonality to `γ̇̃` (relative) and
/// the sup distance to the `F̃`-Jacobi field re-integrated from the same
/// initial data.
pub fn check_transported_jacobi<T: Real>(
    nav: &HomotheticNavigation<T>,
    transported: &JacobiSolution<T>,
) -> Result<(T, T)> {
    let f = nav.navigated();
    let g = &transported.geodesic;
    let mut orth = T::zero();
    for k in 0..g.len() {
        let (x, v, j) = (&g.positions[k], &g.velocities[k], &transported.field[k]);
        let gram = f.fundamental_tensor(x, v)?;
        let denom = (gram.bilinear(j, j) * gram.bilinear(v, v)).sqrt();
        if denom > T::zero() {
            orth = orth.max(gram.bilinear(j, v).abs() / denom);
        }
    }
    let o = g.origin();
    let opts = GeodesicOptions { tolerance: T::lit(1e-11), samples: 200, speed_tolerance: None };
    let direct = integrate_jacobi_raw(
        f,
        &g.positions[o],
        &g.velocities[o],
        &transported.field[o],
        &transported.rate[o],
        (g.start(), g.end()),
        &opts,
    )?;
    let mut disc = T::zero();
    for (t, j) in g.times.iter().zip(&transported.field) {
        let (jd, _) = direct.field_at(*t)?;
        disc = disc.max(linalg::max_abs_diff(j, &jd));
    }
    Ok((orth, disc))
}

/// Affine fit of `p(t) = ⟨V(γ(t)), γ̇(t)⟩_{γ̇(t)}` along a geodesic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearPairingResult<T> {
    pub c0: T,
    pub slope: T,
    pub max_abs_residual: T,
}

pub fn linear_pairing<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    gamma: &GeodesicSolution<T>,
    wind: &crate::chart::VectorFieldSpec<T>,
) -> Result<LinearPairingResult<T>> {
    let mut pts = Vec::with_capacity(gamma.len());
    for k in 0..gamma.len() {
        let (x, v) = (&gamma.positions[k], &gamma.velocities[k]);
        pts.push((gamma.times[k], metric.inner(x, v, &wind.value(x)?, v)?));
    }
    let m = T::from_usize(pts.len()).expect("len");
    let tm = pts.iter().map(|p| p.0).sum::<T>() / m;
    let pm = pts.iter().map(|p| p.1).sum::<T>() / m;
    let stt: T = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let stp: T = pts.iter().map(|p| (p.0 - tm) * (p.1 - pm)).sum();
    let slope = if stt > T::zero() { stp / stt } else { T::zero() };
    let c0 = pm - slope * tm;
    let max_abs_residual = pts.iter().fold(T::zero(), |w, &(t, p)| w.max((p - c0 - slope * t).abs()));
    Ok(LinearPairingResult { c0, slope, max_abs_residual })
}

/// Outcome of the norm-scaling identity for pushed-forward orthogonal vectors.
#[derive(Clone, Debug)]
pub struct KeyIdentityReport<T> {
    pub c0: T,
    /// Worst relative deviation of `|(Ψ_t)_* v|²_{γ̇̃}` from
    /// `e^{−2ct}/(c0 + 1)·|v|²_{γ̇(s)}`.
    pub max_relative_residual: T,
    /// Worst normalized `⟨(Ψ_t)_* v, γ̇̃⟩_{γ̇̃}`.
    pub max_orthogonality: T,
    /// At `t = 0`: deviation of the fitted `c0` from `⟨V, γ̇(0)⟩_{γ̇(0)}`.
    pub origin_consistency: T,
    pub rows: Vec<(T, T)>,
}

/// Checks the identity along `t_grid` with `v(s)` the `g_{γ̇(s)}`-orthogonal
/// part of the fixed coordinate vector `w`.
pub fn verify_key_identity<T: Real>(
    nav: &HomotheticNavigation<T>,
    gamma: &GeodesicSolution<T>,
    w: &[T],
    t_grid: &[T],
) -> Result<KeyIdentityReport<T>> {
    check_unit_speed(nav.base(), gamma)?;
    let base = nav.base();
    let pairing = linear_pairing(base, gamma, nav.datum.wind())?;
    let c0 = pairing.c0;
    let o = gamma.origin();
    let p0 = base.inner(
        &gamma.positions[o],
        &gamma.velocities[o],
        &nav.datum.wind().value(&gamma.positions[o])?,
        &gamma.velocities[o],
    )?;
    let mut rel = T::zero();
    let mut orth = T::zero();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (_, x, v) = nav.base_state(gamma, t)?;
        let g = base.fundamental_tensor(&x, &v)?;
        let vv = g.bilinear(&v, &v);
        let u = linalg::axpy(w, -g.bilinear(&v, w) / vv, &v);
        let (p, d) = nav.flow(&x, t)?;
        let pushed = d.mul_vec(&u);
        let (_, vel) = nav.transported_velocity(&x, &v, t)?;
        let gt = nav.navigated().fundamental_tensor(&p, &vel)?;
        let lhs = gt.bilinear(&pushed, &pushed);
        let rhs = (-T::lit(2.0) * nav.c() * t).exp() / (c0 + T::one()) * g.bilinear(&u, &u);
        let r = (lhs - rhs).abs() / rhs.abs();
        rel = rel.max(r);
        orth = orth.max(gt.bilinear(&pushed, &vel).abs() / (lhs * gt.bilinear(&vel, &vel)).sqrt());
        rows.push((t, r));
    }
    Ok(KeyIdentityReport {
        c0,
        max_relative_residual: rel,
        max_orthogonality: orth,
        origin_consistency: (p0 - c0).abs(),
        rows,
    })
}

/// One compared flag: `K` for the base flag `(y, u)`, `K̃` for `(ỹ, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagShiftRow<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub u: Vec<T>,
    pub k: T,
    pub k_tilde: T,
    /// `|K̃ − K + c²|`.
    pub residual: T,
}

/// Compares flag curvatures of one flag. `y` is rescaled to unit length
/// and `u` replaced by its `g_y`-orthogonal part.
pub fn flag_shift<T: Real>(nav: &HomotheticNavigation<T>, x: &[T], y: &[T], u: &[T]) -> Result<FlagShiftRow<T>> {
    if !nav.datum.admissible(x) {
        return Err(GeometryError::NavigationUndefined { value: nav.datum.wind_strength(x)?.approx() });
    }
    let base = nav.base();
    let y = base.normalize(x, y)?;
    let g = base.fundamental_tensor(x, &y)?;
    let u = linalg::axpy(u, -g.bilinear(&y, u), &y);
    let k = flag_curvature(base, x, &y, &u)?;
    let yt = nav.shifted(x, &y)?;
    let k_tilde = flag_curvature(nav.navigated(), x, &yt, &u)?;
    let c = nav.c();
    Ok(FlagShiftRow { x: x.to_vec(), y, u, k, k_tilde, residual: (k_tilde - k + c * c).abs() })
}

/// Residual table over many flags; degenerate flags are counted, not fatal.
#[derive(Clone, Debug)]
pub struct ShiftTable<R> {
    pub rows: Vec<R>,
    pub skipped: usize,
}

pub fn verify_flag_shift<T: Real>(
    nav: &HomotheticNavigation<T>,
    flags: &[(Vec<T>, Vec<T>, Vec<T>)],
) -> Result<ShiftTable<FlagShiftRow<T>>> {
    let mut table = ShiftTable { rows: Vec::with_capacity(flags.len()), skipped: 0 };
    for (x, y, u) in flags {
        match flag_shift(nav, x, y, u) {
            Ok(row) => table.rows.push(row),
            Err(GeometryError::DegenerateFlag { .. }) => table.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

impl<T: Real> ShiftTable<FlagShiftRow<T>> {
    pub fn max_residual(&self) -> T {
        self.rows.iter().fold(T::zero(), |m, r| m.max(r.residual))
    }
}

/// One compared S-curvature pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SShiftRow<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub s: T,
    pub s_tilde: T,
    /// `|S̃ − S − (n + 1)c|`.
    pub residual: T,
}

pub fn s_shift<T: Real>(nav: &HomotheticNavigation<T>, x: &[T], y: &[T]) -> Result<SShiftRow<T>> {
    let base = nav.base();
    let y = base.normalize(x, y)?;
    let s = s_curvature(base, x, &y)?;
    let yt = nav.shifted(x, &y)?;
    let s_tilde = s_curvature(nav.navigated(), x, &yt)?;
    let shift = T::from_usize(nav.dim() + 1).expect("dim") * nav.c();
    Ok(SShiftRow { x: x.to_vec(), y, s, s_tilde, residual: (s_tilde - s - shift).abs() })
}

pub fn verify_s_shift<T: Real>(
    nav: &HomotheticNavigation<T>,
    points: &[(Vec<T>, Vec<T>)],
) -> Result<ShiftTable<SShiftRow<T>>> {
    let rows = points.iter().map(|(x, y)| s_shift(nav, x, y)).collect::<Result<Vec<_>>>()?;
    Ok(ShiftTable { rows, skipped: 0 })
}

impl<T: Real> ShiftTable<SShiftRow<T>> {
    pub fn max_residual(&self) -> T {
        self.rows.iter().fold(T::zero(), |m, r| m.max(r.residual))
    }
}

/// Extreme flag curvatures of the navigated metric along a curve.
#[derive(Clone, Debug)]
pub struct CurvatureProfile<T> {
    pub c: T,
    /// `(t, K̃_max, K̃_min)`.
    pub rows: Vec<(T, T, T)>,
}

impl<T: Real> CurvatureProfile<T> {
    /// Largest deviation of any extreme from `value`.
    pub fn deviation_from(&self, value: T) -> T {
        self.rows.iter().fold(T::zero(), |m, &(_, a, b)| m.max((a - value).abs()).max((b - value).abs()))
    }

    /// Rate `r` in `K̃_max + c² ∝ e^{rt}` from the first and last rows, if
    /// both sides are away from zero.
    pub fn exponential_rate(&self) -> Option<T> {
        let (first, last) = (self.rows.first()?, self.rows.last()?);
        let c2 = self.c * self.c;
        let (a, b) = (first.1 + c2, last.1 + c2);
        if a.abs() < T::lit(1e-9) || b.abs() < T::lit(1e-9) || a * b < T::zero() || first.0 == last.0 {
            return None;
        }
        Some((b / a).ln() / (last.0 - first.0))
    }
}

pub fn locally_symmetric_probe<T: Real>(
    nav: &HomotheticNavigation<T>,
    curve: &GeodesicSolution<T>,
    t_grid: &[T],
    plane_samples: usize,
) -> Result<CurvatureProfile<T>> {
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (x, v) = curve.state_at(t)?;
        let r = kmax_kmin(nav.navigated(), &x, &v, plane_samples)?;
        rows.push((t, r.kmax, r.kmin));
    }
    Ok(CurvatureProfile { c: nav.c(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, VectorFieldSpec};
    use crate::linalg::Matrix;

    #[test]
    fn warp_identities() {
        for &c in &[-0.5f64, 0.0, 0.3, 1e-8 + 1e-12, 1e-8 - 1e-12] {
            let w = TimeWarp::new(c);
            assert_eq!(w.s(0.0), 0.0);
            let t = 0.37;
            assert!((w.inverse(w.s(t)) - t).abs() < 1e-12);
            let h = 1e-5;
            assert!(((w.s(t + h) - w.s(t - h)) / (2.0 * h) - w.ds(t)).abs() < 1e-8);
        }
        // continuity across the series switch
        let t = 0.8f64;
        let below = TimeWarp::new(1e-8 - 1e-12).s(t);
        let above = TimeWarp::new(1e-8 + 1e-12).s(t);
        assert!((below - above).abs() < 1e-10);
    }

    fn euclid_nav(wind: VectorFieldSpec<f64>) -> HomotheticNavigation<f64> {
        let base = ChartedFinslerMetric::euclidean(2, ChartDomain::unit_ball(2, 0.9));
        HomotheticNavigation::new(NavigationDatum::new(base, wind, 1e-3).unwrap(), 16, 1).unwrap()
    }

    #[test]
    fn measured_dilations() {
        assert!((euclid_nav(VectorFieldSpec::radial(2, 1.0)).c() + 0.5).abs() < 1e-9);
        assert!(euclid_nav(VectorFieldSpec::rotation(2, 0.5)).c().abs() < 1e-9);
        let base = ChartedFinslerMetric::euclidean(2, ChartDomain::unit_ball(2, 0.9));
        let bad = VectorFieldSpec::affine(Matrix::diagonal(&[0.5, 0.1]), vec![0.0, 0.0]).unwrap();
        let err = HomotheticNavigation::new(NavigationDatum::new(base.clone(), bad, 1e-3).unwrap(), 8, 1);
        assert!(matches!(err, Err(GeometryError::NotHomothetic { .. })));
        let lying = VectorFieldSpec::radial(2, 1.0).with_dilation(0.5);
        let err = HomotheticNavigation::new(NavigationDatum::new(base, lying, 1e-3).unwrap(), 8, 1);
        assert!(matches!(err, Err(GeometryError::DilationMismatch { .. })));
    }

    #[test]
    fn zero_wind_is_identity() {
        let nav = euclid_nav(VectorFieldSpec::zero(2));
        let g = integrate_geodesic(nav.base(), &[0.1, 0.0], &[0.6, 0.8], (-0.3, 0.3), &GeodesicOptions::default()).unwrap();
        let gt = transport_geodesic(&nav, &g, (-0.3, 0.3), 60).unwrap();
        for (t, x) in gt.times.iter().zip(&gt.positions) {
            assert!(linalg::max_abs_diff(x, &[0.1 + 0.6 * t, 0.8 * t]) < 1e-12);
        }
    }

    #[test]
    fn euclidean_pairing_slope() {
        // V = x along x0 + t e: p(t) = ⟨x0, e⟩ + t
        let nav = euclid_nav(VectorFieldSpec::radial(2, 1.0));
        let g = integrate_geodesic(nav.base(), &[0.2, -0.1], &[0.6, 0.8], (-0.2, 0.3), &GeodesicOptions::default()).unwrap();
        let p = linear_pairing(nav.base(), &g, nav.datum().wind()).unwrap();
        assert!((p.slope - 1.0).abs() < 1e-10 && (p.c0 - (0.12 - 0.08)).abs() < 1e-10);
        assert!((p.slope + 2.0 * nav.c()).abs() < 1e-8);
    }
}
