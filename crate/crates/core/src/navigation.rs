//! Zermelo navigation: the metric whose indicatrix is the base indicatrix
//! translated by the wind.

use std::sync::Arc;

use crate::chart::{ChartedFinslerMetric, NormField, VectorFieldSpec, VolumeMethod};
use crate::error::{GeometryError, Result};
use crate::linalg;
use crate::scalar::{Jet, Lift};
use crate::Real;

/// Base metric `F` and wind `V`, with the admissibility margin.
#[derive(Clone, Debug)]
pub struct NavigationDatum<T: Real> {
    base: ChartedFinslerMetric<T>,
    wind: VectorFieldSpec<T>,
    margin: T,
}

/// Root of a convex, decreasing `h` with `h(0) > 0` on `[0, upper]`.
///
/// Newton from the left converges monotonically for such functions; the
/// bracket keeps a bisection fallback available.
fn convex_decreasing_root<T: Real>(h: impl Fn(T) -> Result<(T, T)>, upper: T) -> Result<T> {
    let (mut lo, mut hi) = (T::zero(), upper);
    let mut lambda = T::zero();
    for _ in 0..60 {
        let (v, d) = h(lambda)?;
        if v.is_zero() {
            return Ok(lambda);
        }
        if v > T::zero() {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        let newton = lambda - v / d;
        let next = if d < T::zero() && newton > lo && newton < hi { newton } else { (lo + hi) / T::lit(2.0) };
        if (next - lambda).abs() <= T::lit(4.0) * T::epsilon() * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    let (v, _) = h(lambda)?;
    if v.abs() <= T::lit(1e-12) * upper.max(T::one()) {
        Ok(lambda)
    } else {
        Err(GeometryError::NavigationRootNotFound)
    }
}

impl<T: Real> NavigationDatum<T> {
    pub fn new(base: ChartedFinslerMetric<T>, wind: VectorFieldSpec<T>, margin: T) -> Result<Self> {
        if wind.dim() != base.dim() {
            return Err(GeometryError::DimensionMismatch { expected: base.dim(), got: wind.dim() });
        }
        if !(margin >= T::zero() && margin < T::one()) {
            return Err(GeometryError::InvalidInput("margin must lie in [0, 1)".into()));
        }
        Ok(NavigationDatum { base, wind, margin })
    }

    pub fn base(&self) -> &ChartedFinslerMetric<T> {
        &self.base
    }

    pub fn wind(&self) -> &VectorFieldSpec<T> {
        &self.wind
    }

    pub fn wind_mut(&mut self) -> &mut VectorFieldSpec<T> {
        &mut self.wind
    }

    pub fn margin(&self) -> T {
        self.margin
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `F(x, −V(x))`.
    pub fn wind_strength(&self, x: &[T]) -> Result<T> {
        let v = self.wind.value(x)?;
        self.base.norm(x, &linalg::scale(&v, -T::one()))
    }

    /// `F(x, −V(x)) < 1 − margin` inside the base domain.
    pub fn admissible(&self, x: &[T]) -> bool {
        self.base.domain().contains(x)
            && self.wind_strength(x).map(|s| s < T::one() - self.margin).unwrap_or(false)
    }

    /// `d/dλ F(x, w − λV)` at the given `λ`, through a one-variable jet or,
    /// failing that, a central difference.
    fn slope(&self, x: &[T], yt: &[T], v: &[T], lambda: T) -> Result<T> {
        let xj: Vec<Jet<T>> = x.iter().map(|&c| Jet::constant(c)).collect();
        let l = Jet::variable(lambda, 0, 1);
        let wj: Vec<Jet<T>> = yt.iter().zip(v).map(|(&a, &b)| Jet::constant(a) - l * Jet::constant(b)).collect();
        match self.base.value_at::<Jet<T>>(&xj, &wj) {
            Ok(f) => Ok(f.grad(0)),
            Err(GeometryError::JetUnavailable(_)) => {
                let h = T::lit(1e-6) * lambda.abs().max(T::one());
                let fp = self.base.norm(x, &linalg::axpy(yt, -(lambda + h), v))?;
                let fm = self.base.norm(x, &linalg::axpy(yt, -(lambda - h), v))?;
                Ok((fp - fm) / (T::lit(2.0) * h))
            }
            Err(e) => Err(e),
        }
    }

    /// `F̃(x, ỹ)` at plain values.
    pub fn navigate(&self, x: &[T], yt: &[T]) -> Result<T> {
        self.navigate_at(x, yt)
    }

    /// `F̃(x, ỹ)` at lifted scalars.
    ///
    /// The root is located at plain values; two chord steps at `S` with the
    /// converged slope then carry first and second derivatives exactly.
    pub fn navigate_at<S: Lift<T>>(&self, x: &[S], yt: &[S]) -> Result<S> {
        let xv: Vec<T> = linalg::values(x);
        let yv: Vec<T> = linalg::values(yt);
        if yv.iter().all(|c| c.is_zero()) {
            return Ok(S::zero());
        }
        let v = self.wind.value(&xv)?;
        let strength = self.base.norm(&xv, &linalg::scale(&v, -T::one()))?;
        if !(strength < T::one()) {
            return Err(GeometryError::NavigationUndefined { value: strength.approx() });
        }
        let f0 = self.base.norm(&xv, &yv)?;
        let upper = f0 / (T::one() - strength);
        let h = |lambda: T| -> Result<(T, T)> {
            let w = linalg::axpy(&yv, -lambda, &v);
            let val = self.base.norm(&xv, &w)? - lambda;
            let d = self.slope(&xv, &yv, &v, lambda)? - T::one();
            Ok((val, d))
        };
        let root = convex_decreasing_root(h, upper)?;
        let chord = self.slope(&xv, &yv, &v, root)? - T::one();
        let vs = self.wind.value_at::<S>(x)?;
        let c = S::lift(chord);
        let mut lambda = S::lift(root);
        for _ in 0..2 {
            let w: Vec<S> = yt.iter().zip(&vs).map(|(&a, &b)| a - lambda * b).collect();
            let r = self.base.value_at(x, &w)? - lambda;
            lambda -= r / c;
        }
        Ok(lambda)
    }

    /// Recovers `F(x, y)` from the navigated metric: the `λ` with
    /// `F̃(x, y + λV(x)) = λ`.
    pub fn inverse_navigate(&self, x: &[T], y: &[T]) -> Result<T> {
        if y.iter().all(|c| c.is_zero()) {
            return Ok(T::zero());
        }
        let v = self.wind.value(x)?;
        let fv = self.navigate(x, &v)?;
        if !(fv < T::one()) {
            return Err(GeometryError::NavigationUndefined { value: fv.approx() });
        }
        let f0 = self.navigate(x, y)?;
        let xj: Vec<Jet<T>> = x.iter().map(|&c| Jet::constant(c)).collect();
        let h = |lambda: T| -> Result<(T, T)> {
            let l = Jet::variable(lambda, 0, 1);
            let w: Vec<Jet<T>> = y.iter().zip(&v).map(|(&a, &b)| Jet::constant(a) + l * Jet::constant(b)).collect();
            match self.navigate_at::<Jet<T>>(&xj, &w) {
                Ok(f) => Ok((f.val() - lambda, f.grad(0) - T::one())),
                Err(GeometryError::JetUnavailable(_)) => {
                    let val = self.navigate(x, &linalg::axpy(y, lambda, &v))? - lambda;
                    let e = T::lit(1e-6) * lambda.abs().max(T::one());
                    let p = self.navigate(x, &linalg::axpy(y, lambda + e, &v))?;
                    let m = self.navigate(x, &linalg::axpy(y, lambda - e, &v))?;
                    Ok((val, (p - m) / (T::lit(2.0) * e) - T::one()))
                }
                Err(err) => Err(err),
            }
        };
        convex_decreasing_root(h, f0 / (T::one() - fv))
    }

    /// The navigated metric `F̃` on the base domain, evaluated by root
    /// finding.
    pub fn navigated_metric(&self) -> ChartedFinslerMetric<T> {
        let name = format!("{} navigated by {}", self.base.name, self.wind.name);
        ChartedFinslerMetric::new(&name, self.base.domain().clone(), NormField::Navigated(Arc::new(self.clone())))
            .expect("dimensions checked at construction")
            .with_policy(*self.base.policy())
    }

    /// Closed-form Randers metric for a Riemannian base.
    pub fn navigate_randers(&self) -> Result<ChartedFinslerMetric<T>> {
        match self.base.field() {
            NormField::Quadratic(h) => {
                let name = format!("{} navigated by {} (randers)", self.base.name, self.wind.name);
                let field = if self.wind.is_zero() {
                    NormField::Quadratic(h.clone())
                } else {
                    NormField::ZermeloRanders { h: h.clone(), wind: self.wind.clone() }
                };
                Ok(ChartedFinslerMetric::new(&name, self.base.domain().clone(), field)?.with_policy(*self.base.policy()))
            }
            _ => Err(GeometryError::InvalidInput("closed-form navigation needs a Riemannian base".into())),
        }
    }

    fn check_admissible(&self, x: &[T]) -> Result<()> {
        let s = self.wind_strength(x)?;
        if !(s < T::one()) {
            return Err(GeometryError::NavigationUndefined { value: s.approx() });
        }
        Ok(())
    }

    /// Largest relative deviation between `⟨u, v⟩^F̃_ỹ` and
    /// `⟨u, v⟩^F_y / (1 + ⟨V, y⟩^F_y)` over the complement basis of `y`.
    ///
    /// `y` is rescaled to unit length first, as the relation presumes.
    pub fn verify_tensor_relation(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_admissible(x)?;
        let y = self.base.normalize(x, y)?;
        let v = self.wind.value(x)?;
        let yt = linalg::add(&y, &v);
        let g = self.base.fundamental_tensor(x, &y)?;
        let gt = self.navigated_metric().fundamental_tensor(x, &yt)?;
        let factor = T::one() + g.bilinear(&v, &y);
        let basis = crate::norm::complement_basis(&g, &y);
        let mut worst = T::zero();
        for u in &basis {
            for w in &basis {
                let lhs = gt.bilinear(u, w);
                let rhs = g.bilinear(u, w) / factor;
                let scale = (g.bilinear(u, u) * g.bilinear(w, w)).sqrt() / factor;
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        Ok(worst)
    }

    /// `|σ^F(x) − σ^F̃(x)| / σ^F(x)` with both densities computed by the same
    /// non-exact path (quadrature for `n = 2, 3`, seeded quasi-Monte Carlo
    /// otherwise).
    pub fn verify_volume_equality(&self, x: &[T], budget: usize, seed: u64) -> Result<T> {
        self.check_admissible(x)?;
        let method = match self.dim() {
            2 => VolumeMethod::Polar,
            3 => VolumeMethod::Spherical,
            _ => VolumeMethod::QuasiMonteCarlo,
        };
        let base = self.base.bh_density_with(x, method, budget, seed)?;
        let nav = self.navigated_metric().bh_density_with(x, method, budget, seed)?;
        Ok((base.sigma - nav.sigma).abs() / base.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, MatrixField};
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid() -> ChartedFinslerMetric<f64> {
        ChartedFinslerMetric::euclidean(2, ChartDomain::unit_ball(2, 0.9))
    }

    fn funk() -> NavigationDatum<f64> {
        NavigationDatum::new(euclid(), VectorFieldSpec::radial(2, 1.0), 0.05).unwrap()
    }

    #[test]
    fn navigate_examples() {
        let still = NavigationDatum::new(euclid(), VectorFieldSpec::zero(2), 0.05).unwrap();
        assert_eq!(still.navigate(&[0.3, 0.1], &[0.3, -0.4]).unwrap(), 0.5);
        let d = funk();
        assert!((d.navigate(&[0.0, 0.0], &[0.3, -0.4]).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.navigate(&[0.5, 0.0], &[1.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let strong = NavigationDatum::new(euclid(), VectorFieldSpec::translation(vec![1.2, 0.0]), 0.05).unwrap();
        assert!(matches!(
            strong.navigate(&[0.0, 0.0], &[1.0, 0.0]),
            Err(GeometryError::NavigationUndefined { .. })
        ));
    }

    #[test]
    fn closed_form_randers_agrees_with_root_finder() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for wind in [VectorFieldSpec::translation(vec![0.5, 0.0]), VectorFieldSpec::radial(2, 1.0)] {
            let d = NavigationDatum::new(euclid(), wind, 0.05).unwrap();
            let closed = d.navigate_randers().unwrap();
            for _ in 0..100 {
                let x = d.base().domain().sample(&mut rng, 0.0);
                let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let a = d.navigate(&x, &y).unwrap();
                let b = closed.norm(&x, &y).unwrap();
                assert!((a - b).abs() < 1e-10 * b.max(1e-3), "{a} vs {b}");
            }
        }
        let still = NavigationDatum::new(euclid(), VectorFieldSpec::zero(2), 0.05).unwrap();
        assert!(still.navigate_randers().unwrap().is_riemannian());
    }

    #[test]
    fn inverse_round_trip_and_indicatrix_shift() {
        let d = funk();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = d.base().domain().sample(&mut rng, 0.0);
            let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let f = d.base().norm(&x, &y).unwrap();
            let back = d.inverse_navigate(&x, &y).unwrap();
            assert!((back - f).abs() < 1e-9 * f);
            let unit = linalg::scale(&y, 1.0 / f);
            let shifted = linalg::add(&unit, &x);
            assert!((d.navigate(&x, &shifted).unwrap() - 1.0).abs() < 1e-9);
            let ft = d.navigate(&x, &y).unwrap();
            assert!((d.navigate(&x, &linalg::scale(&y, 3.7)).unwrap() - 3.7 * ft).abs() < 1e-9 * ft);
        }
    }

    #[test]
    fn jets_through_the_root_finder_are_exact() {
        let d = funk();
        let closed = d.navigate_randers().unwrap();
        let nav = d.navigated_metric();
        let x = [0.3, -0.2];
        let y = [0.1, 0.9];
        let a = nav.lagrangian(&x, &y).unwrap();
        let b = closed.lagrangian(&x, &y).unwrap();
        assert!(linalg::max_abs_diff(&a.lx, &b.lx) < 1e-12);
        assert!(a.lxy.sub(&b.lxy).max_abs() < 1e-11);
        assert!(a.lyy.sub(&b.lyy).max_abs() < 1e-11);
    }

    #[test]
    fn tensor_relation() {
        let still = NavigationDatum::new(euclid(), VectorFieldSpec::zero(2), 0.05).unwrap();
        assert!(still.verify_tensor_relation(&[0.3, 0.0], &[0.0, 1.0]).unwrap() < 1e-12);
        assert!(funk().verify_tensor_relation(&[0.3, 0.0], &[0.0, 1.0]).unwrap() < 1e-5);
        let rot = NavigationDatum::new(euclid(), VectorFieldSpec::rotation(2, 0.5), 0.05).unwrap();
        assert!(rot.verify_tensor_relation(&[0.3, 0.4], &[0.2, 1.0]).unwrap() < 1e-5);
        // a non-Euclidean base in three dimensions
        let base = ChartedFinslerMetric::quadratic(
            "aniso",
            ChartDomain::unit_ball(3, 0.9),
            MatrixField::Constant(Matrix::diagonal(&[1.0, 2.0, 0.5])),
        )
        .unwrap();
        let d3 = NavigationDatum::new(base, VectorFieldSpec::radial(3, 0.8), 0.05).unwrap();
        assert!(d3.verify_tensor_relation(&[0.2, 0.1, -0.3], &[0.3, -1.0, 0.4]).unwrap() < 1e-5);
    }

    #[test]
    fn volume_equality() {
        let still = NavigationDatum::new(euclid(), VectorFieldSpec::zero(2), 0.05).unwrap();
        assert!(still.verify_volume_equality(&[0.3, 0.0], 0, 0).unwrap() < 1e-12);
        assert!(funk().verify_volume_equality(&[0.3, 0.0], 0, 0).unwrap() < 1e-6);
        let wind = NavigationDatum::new(euclid(), VectorFieldSpec::translation(vec![0.5, 0.0]), 0.05).unwrap();
        assert!(wind.verify_volume_equality(&[0.1, 0.2], 0, 0).unwrap() < 1e-6);
    }
}
