use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartedFinslerMetric, NormField};
use crate::error::{GeometryError, Result};
use crate::linalg::{self, Matrix};
use crate::norm;
use crate::Real;

/// How the Busemann–Hausdorff density is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeMethod {
    /// Exact where a closed form exists, quadrature for `n = 2, 3`,
    /// quasi-Monte Carlo otherwise.
    Auto,
    /// Closed form (Riemannian and Randers kinds).
    Exact,
    /// Simpson quadrature of `½∮ r(θ)² dθ` (`n = 2` only).
    Polar,
    /// `⅓∬ r(ω)³ dω` over the unit sphere with Gauss-Legendre nodes in
    /// `cos θ` and the trapezoid rule in the azimuth (`n = 3` only).
    Spherical,
    /// Randomly shifted Halton rejection sampling in a bounding box.
    QuasiMonteCarlo,
}

/// `σ(x)` with the standard error of its estimator (zero for deterministic
/// paths).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeDensity<T> {
    pub sigma: T,
    pub std_error: T,
    pub method: VolumeMethod,
}

/// Volume of the Euclidean unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Closed-form density of `|y|_A + ⟨b, y⟩`:
/// `sqrt(det A) · (1 − |b|²_{A⁻¹})^{(n+1)/2}`.
pub fn randers_density<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<T> {
    let len = norm::dual_length(a, b)?;
    let n = T::from_usize(a.rows()).expect("dim");
    Ok(a.determinant().sqrt() * (T::one() - len * len).powf((n + T::one()) / T::lit(2.0)))
}

const QMC_REPLICATES: usize = 10;
const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

impl<T: Real> ChartedFinslerMetric<T> {
    pub fn bh_density(&self, x: &[T], budget: usize, seed: u64) -> Result<VolumeDensity<T>> {
        self.bh_density_with(x, VolumeMethod::Auto, budget, seed)
    }

    pub fn bh_density_with(&self, x: &[T], method: VolumeMethod, budget: usize, seed: u64) -> Result<VolumeDensity<T>> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let method = match method {
            VolumeMethod::Auto => {
                if self.exact_density(x).is_some() && (self.is_riemannian() || self.dim() != 2) {
                    VolumeMethod::Exact
                } else if self.dim() == 2 {
                    VolumeMethod::Polar
                } else if self.dim() == 3 {
                    VolumeMethod::Spherical
                } else {
                    VolumeMethod::QuasiMonteCarlo
                }
            }
            m => m,
        };
        match method {
            VolumeMethod::Exact => {
                let sigma = self
                    .exact_density(x)
                    .ok_or_else(|| GeometryError::InvalidInput("no closed-form density for this metric".into()))??;
                Ok(VolumeDensity { sigma, std_error: T::zero(), method })
            }
            VolumeMethod::Polar => self.polar_density(x),
            VolumeMethod::Spherical => self.spherical_density(x),
            VolumeMethod::QuasiMonteCarlo => self.qmc_density(x, budget.max(QMC_REPLICATES * 100), seed),
            VolumeMethod::Auto => unreachable!("resolved above"),
        }
    }

    fn exact_density(&self, x: &[T]) -> Option<Result<T>> {
        match self.field() {
            NormField::Quadratic(a) => Some(a.eval(x).map(|m| m.determinant().sqrt())),
            NormField::Randers { .. } | NormField::ZermeloRanders { .. } => Some(self.norm_at(x).and_then(|n| match n.kind() {
                norm::NormKind::Randers { a, b } => randers_density(a, b),
                norm::NormKind::Quadratic { a } => Ok(a.determinant().sqrt()),
                norm::NormKind::Custom(_) => Err(GeometryError::InvalidInput("unexpected norm kind".into())),
            })),
            _ => None,
        }
    }

    fn radius(&self, x: &[T], dir: &[T]) -> Result<T> {
        let f = self.norm(x, dir)?;
        if !(f > T::lit(1e-12)) {
            return Err(GeometryError::IndicatrixUnbounded);
        }
        Ok(T::one() / f)
    }

    fn polar_density(&self, x: &[T]) -> Result<VolumeDensity<T>> {
        if self.dim() != 2 {
            return Err(GeometryError::InvalidInput("planar quadrature needs n = 2".into()));
        }
        let nodes = self.policy().polar_nodes.max(8) & !1;
        let h = T::lit(std::f64::consts::TAU) / T::from_usize(nodes).expect("nodes");
        let mut sum = T::zero();
        // the integrand is periodic, so node 0 and node `nodes` coincide
        for k in 0..nodes {
            let th = h * T::from_usize(k).expect("k");
            let r = self.radius(x, &[th.cos(), th.sin()])?;
            let w = if k % 2 == 0 { T::lit(2.0) } else { T::lit(4.0) };
            sum += w * r * r;
        }
        let area = T::lit(0.5) * sum * h / T::lit(3.0);
        Ok(VolumeDensity { sigma: T::lit(std::f64::consts::PI) / area, std_error: T::zero(), method: VolumeMethod::Polar })
    }

    fn spherical_density(&self, x: &[T]) -> Result<VolumeDensity<T>> {
        if self.dim() != 3 {
            return Err(GeometryError::InvalidInput("spherical quadrature needs n = 3".into()));
        }
        let m = self.policy().spherical_nodes.max(4);
        let rule = GaussLegendre::new(NonZeroUsize::new(m).expect("positive"));
        let azimuths = 2 * m;
        let h = T::lit(std::f64::consts::TAU) / T::from_usize(azimuths).expect("nodes");
        let mut volume = T::zero();
        // after the azimuthal sum only zonal harmonics survive, which are
        // polynomials in cos θ, so both rules converge spectrally
        for &(z, w) in rule.as_node_weight_pairs() {
            let (z, w) = (T::lit(z), T::lit(w));
            let rho = (T::one() - z * z).sqrt();
            let mut ring = T::zero();
            for k in 0..azimuths {
                let phi = h * T::from_usize(k).expect("k");
                let r = self.radius(x, &[rho * phi.cos(), rho * phi.sin(), z])?;
                ring += r * r * r;
            }
            volume += w * ring * h;
        }
        volume /= T::lit(3.0);
        Ok(VolumeDensity {
            sigma: T::lit(unit_ball_volume(3)) / volume,
            std_error: T::zero(),
            method: VolumeMethod::Spherical,
        })
    }

    fn qmc_density(&self, x: &[T], budget: usize, seed: u64) -> Result<VolumeDensity<T>> {
        let n = self.dim();
        if n > PRIMES.len() {
            return Err(GeometryError::InvalidInput("quasi-Monte Carlo supports n ≤ 8".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // per-axis extents of the indicatrix from many boundary points; the
        // indicatrix of a Randers-type norm is off-center, so a box around
        // the origin would waste most samples
        let mut lo = vec![T::zero(); n];
        let mut hi = vec![T::zero(); n];
        let mut extend = |dir: &[T]| -> Result<()> {
            let rho = self.radius(x, dir)?;
            for d in 0..n {
                lo[d] = lo[d].min(rho * dir[d]);
                hi[d] = hi[d].max(rho * dir[d]);
            }
            Ok(())
        };
        for i in 0..n {
            for s in [T::one(), -T::one()] {
                let mut e = vec![T::zero(); n];
                e[i] = s;
                extend(&e)?;
            }
        }
        for _ in 0..512 * n {
            let g: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            let len = linalg::norm(&g);
            if len > T::lit(1e-3) {
                extend(&linalg::scale(&g, T::one() / len))?;
            }
        }
        // sampled extremes can undershoot the true ones; pad each side
        for d in 0..n {
            let pad = T::lit(0.1) * (hi[d] - lo[d]);
            lo[d] -= pad;
            hi[d] += pad;
        }
        let box_volume = (0..n).fold(T::one(), |v, d| v * (hi[d] - lo[d]));
        let per = budget / QMC_REPLICATES;
        let mut estimates = Vec::with_capacity(QMC_REPLICATES);
        for _ in 0..QMC_REPLICATES {
            let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mut inside = 0usize;
            for i in 1..=per {
                let y: Vec<T> = (0..n)
                    .map(|d| {
                        let u = (radical_inverse(i as u64, PRIMES[d]) + shift[d]).fract();
                        lo[d] + (hi[d] - lo[d]) * T::lit(u)
                    })
                    .collect();
                if self.norm(x, &y)? <= T::one() {
                    inside += 1;
                }
            }
            let frac = T::from_usize(inside).expect("count") / T::from_usize(per).expect("count");
            estimates.push(box_volume * frac);
        }
        let k = T::from_usize(QMC_REPLICATES).expect("k");
        let mean = estimates.iter().copied().sum::<T>() / k;
        let var = estimates.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (k - T::one());
        let se = (var / k).sqrt();
        if !(mean > T::zero()) {
            return Err(GeometryError::IndicatrixUnbounded);
        }
        let sigma = T::lit(unit_ball_volume(n)) / mean;
        Ok(VolumeDensity { sigma, std_error: sigma * se / mean, method: VolumeMethod::QuasiMonteCarlo })
    }

    /// Deterministic density, or "S-curvature requires deterministic density"
    /// when only the sampling path is available.
    pub fn deterministic_density(&self, x: &[T]) -> Result<T> {
        let d = self.bh_density(x, 0, 0);
        match d {
            Ok(v) if v.method != VolumeMethod::QuasiMonteCarlo => Ok(v.sigma),
            Ok(_) => Err(GeometryError::NoisyDensity),
            Err(e) => Err(e),
        }
    }

    /// `τ = ln(sqrt(det g_y) / σ(x))`.
    pub fn distortion(&self, x: &[T], y: &[T]) -> Result<T> {
        let g = self.fundamental_tensor(x, y)?;
        let sigma = match self.deterministic_density(x) {
            Ok(s) => s,
            Err(GeometryError::NoisyDensity) => self.bh_density(x, 200_000, 0)?.sigma,
            Err(e) => return Err(e),
        };
        Ok((g.determinant().sqrt() / sigma).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartDomain, MatrixField, VectorFieldSpec};
    use crate::navigation::NavigationDatum;

    fn dom(n: usize) -> ChartDomain<f64> {
        ChartDomain::unit_ball(n, 0.9)
    }

    fn diag41() -> ChartedFinslerMetric<f64> {
        ChartedFinslerMetric::quadratic("diag", dom(2), MatrixField::Constant(Matrix::diagonal(&[4.0, 1.0]))).unwrap()
    }

    fn funk_like() -> ChartedFinslerMetric<f64> {
        ChartedFinslerMetric::randers(
            "r",
            dom(2),
            MatrixField::Constant(Matrix::identity(2)),
            VectorFieldSpec::translation(vec![0.5, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn densities() {
        let e = ChartedFinslerMetric::euclidean(2, dom(2));
        assert_eq!(e.bh_density(&[0.2, 0.1], 0, 0).unwrap().sigma, 1.0);
        let p = e.bh_density_with(&[0.2, 0.1], VolumeMethod::Polar, 0, 0).unwrap().sigma;
        assert!((p - 1.0).abs() < 1e-13);

        let d = diag41();
        assert!((d.bh_density(&[0.0, 0.0], 0, 0).unwrap().sigma - 2.0).abs() < 1e-14);
        let p = d.bh_density_with(&[0.0, 0.0], VolumeMethod::Polar, 0, 0).unwrap().sigma;
        assert!((p - 2.0).abs() < 1e-10);

        let r = funk_like();
        let expected = 0.75f64.powf(1.5);
        let p = r.bh_density(&[0.0, 0.0], 0, 0).unwrap();
        assert_eq!(p.method, VolumeMethod::Polar);
        assert!((p.sigma - expected).abs() < 1e-10);
        let ex = r.bh_density_with(&[0.0, 0.0], VolumeMethod::Exact, 0, 0).unwrap().sigma;
        assert!((ex - expected).abs() < 1e-14);
    }

    #[test]
    fn quasi_monte_carlo_in_three_dimensions() {
        let a = Matrix::diagonal(&[1.0, 2.0, 0.5]);
        let q = ChartedFinslerMetric::quadratic("q", dom(3), MatrixField::Constant(a.clone())).unwrap();
        let est = q.bh_density_with(&[0.0; 3], VolumeMethod::QuasiMonteCarlo, 200_000, 9).unwrap();
        assert!((est.sigma - 1.0).abs() <= 3.0 * est.std_error.max(1e-4), "{est:?}");
        let again = q.bh_density_with(&[0.0; 3], VolumeMethod::QuasiMonteCarlo, 200_000, 9).unwrap();
        assert_eq!(est, again);

        let nav = NavigationDatum::new(q, VectorFieldSpec::translation(vec![0.3, 0.0, 0.2]), 0.05).unwrap();
        let f = nav.navigated_metric();
        let est = f.bh_density_with(&[0.1, 0.0, 0.0], VolumeMethod::QuasiMonteCarlo, 100_000, 1).unwrap();
        assert!((est.sigma - 1.0).abs() <= 4.0 * est.std_error.max(1e-4), "{est:?}");

        let four = ChartedFinslerMetric::euclidean(4, dom(4));
        let nav4 = NavigationDatum::new(four, VectorFieldSpec::radial(4, 0.5), 0.05).unwrap();
        let f4 = nav4.navigated_metric();
        assert!(matches!(f4.deterministic_density(&[0.1, 0.0, 0.0, 0.0]), Err(GeometryError::NoisyDensity)));
    }

    #[test]
    fn spherical_quadrature_matches_closed_forms() {
        let a = Matrix::diagonal(&[1.0, 2.0, 0.5]);
        let q = ChartedFinslerMetric::quadratic("q", dom(3), MatrixField::Constant(a)).unwrap();
        let s = q.bh_density_with(&[0.0; 3], VolumeMethod::Spherical, 0, 0).unwrap();
        assert!((s.sigma - 1.0).abs() < 1e-12, "{s:?}");

        let nav = NavigationDatum::new(q, VectorFieldSpec::radial(3, 0.8), 0.05).unwrap();
        let implicit = nav.navigated_metric();
        let closed = nav.navigate_randers().unwrap();
        for x in [[0.1, 0.0, 0.0], [0.3, -0.2, 0.4]] {
            let est = implicit.bh_density(&x, 0, 0).unwrap();
            assert_eq!(est.method, VolumeMethod::Spherical);
            let exact = closed.bh_density(&x, 0, 0).unwrap();
            assert_eq!(exact.method, VolumeMethod::Exact);
            assert!((est.sigma - exact.sigma).abs() < 1e-10 * exact.sigma, "{est:?} vs {exact:?}");
            assert_eq!(implicit.deterministic_density(&x).unwrap(), est.sigma);
        }
    }

    #[test]
    fn distortion_examples() {
        let e = ChartedFinslerMetric::euclidean(2, dom(2));
        assert!(e.distortion(&[0.3, 0.2], &[1.0, 2.0]).unwrap().abs() < 1e-15);
        let d = diag41();
        for y in [[1.0, 0.0], [0.3, -0.8], [-2.0, 1.0]] {
            assert!(d.distortion(&[0.0, 0.0], &y).unwrap().abs() < 1e-8);
        }
        let r = funk_like();
        let x = [0.1, 0.0];
        let sigma = r.bh_density(&x, 0, 0).unwrap().sigma;
        let (t1, t2) = (r.distortion(&x, &[1.0, 0.0]).unwrap(), r.distortion(&x, &[0.0, 1.0]).unwrap());
        assert!((t1 - t2).abs() > 1e-3);
        for y in [[1.0, 0.0], [0.0, 1.0], [-0.4, 0.3]] {
            let tau = r.distortion(&x, &y).unwrap();
            let det = r.fundamental_tensor(&x, &y).unwrap().determinant();
            assert!((tau.exp() * sigma - det.sqrt()).abs() < 1e-12);
        }
    }
}
