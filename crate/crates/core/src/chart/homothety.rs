use crate::chart::{ChartedFinslerMetric, VectorFieldSpec};
use crate::error::{GeometryError, Result};
use crate::Real;

/// Residual threshold below which a field counts as homothetic.
pub const HOMOTHETY_THRESHOLD: f64 = 1e-6;

/// Least-squares dilation of a vector field and how well it fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomotheticEstimate<T> {
    pub c: T,
    /// Worst relative deviation `|∂ₜF + 2cF| / F` over the samples.
    pub max_residual: T,
    pub homothetic: bool,
}

/// Estimates `c` in `F(Ψ_t x, (Ψ_t)_* y) = e^{−2ct} F(x, y)` from central
/// differences of the flow.
pub fn homothetic_dilation<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    field: &VectorFieldSpec<T>,
    samples: &[(Vec<T>, Vec<T>)],
) -> Result<HomotheticEstimate<T>> {
    if samples.is_empty() {
        return Err(GeometryError::InvalidInput("no samples".into()));
    }
    let h = T::lit(metric.policy().homothety_step);
    let mut rates = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        let f = metric.norm(x, y)?;
        if !(f > T::zero()) {
            return Err(GeometryError::DegenerateVector { norm: 0.0 });
        }
        let at = |t: T| -> Result<T> {
            let (p, d) = field.flow(x, t)?;
            metric.norm(&p, &d.mul_vec(y))
        };
        let rate = (at(h)? - at(-h)?) / (T::lit(2.0) * h);
        rates.push((rate, f));
    }
    let num: T = rates.iter().map(|&(r, f)| r * f).sum();
    let den: T = rates.iter().map(|&(_, f)| f * f).sum();
    let c = -num / (T::lit(2.0) * den);
    let max_residual = rates
        .iter()
        .fold(T::zero(), |m, &(r, f)| m.max((r + T::lit(2.0) * c * f).abs() / f));
    Ok(HomotheticEstimate { c, max_residual, homothetic: max_residual < T::lit(HOMOTHETY_THRESHOLD) })
}

impl<T: Real> VectorFieldSpec<T> {
    /// Measures the dilation and records it when the field is homothetic.
    /// A non-homothetic field is reported through the estimate, not an
    /// error.
    pub fn verify_homothetic(
        &mut self,
        metric: &ChartedFinslerMetric<T>,
        samples: &[(Vec<T>, Vec<T>)],
    ) -> Result<HomotheticEstimate<T>> {
        let est = homothetic_dilation(metric, self, samples)?;
        self.set_dilation(if est.homothetic { Some(est.c) } else { None });
        Ok(est)
    }
}

/// Relative deviation of `det((Ψ_t)_*) σ(Ψ_t x)` from `e^{−2cnt} σ(x)`.
pub fn verify_homothetic_volume_scaling<T: Real>(
    metric: &ChartedFinslerMetric<T>,
    field: &VectorFieldSpec<T>,
    x: &[T],
    t: T,
    budget: usize,
    seed: u64,
) -> Result<T> {
    let c = field
        .dilation()
        .ok_or_else(|| GeometryError::InvalidInput("field has no verified dilation".into()))?;
    let (p, d) = field.flow_within(x, t, metric.domain())?;
    let sigma_x = metric.bh_density(x, budget, seed)?.sigma;
    let sigma_p = metric.bh_density(&p, budget, seed)?.sigma;
    let n = T::from_usize(metric.dim()).expect("dim");
    let pulled = d.determinant() * sigma_p;
    let expected = (-T::lit(2.0) * c * n * t).exp() * sigma_x;
    Ok((pulled - expected).abs() / expected)
}
