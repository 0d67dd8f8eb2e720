use rand::Rng;

use crate::error::{GeometryError, Result};
use crate::linalg;
use crate::Real;

/// Region of the coordinate chart on which a metric is considered.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartDomain<T> {
    Ball { center: Vec<T>, radius: T },
    Box { lower: Vec<T>, upper: Vec<T> },
}

impl<T: Real> ChartDomain<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(GeometryError::InvalidInput("ball radius must be positive".into()));
        }
        Ok(ChartDomain::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize, radius: T) -> Self {
        ChartDomain::Ball { center: vec![T::zero(); dim], radius }
    }

    pub fn boxed(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(GeometryError::InvalidInput("box bounds must satisfy lower < upper".into()));
        }
        Ok(ChartDomain::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            ChartDomain::Ball { center, .. } => center.len(),
            ChartDomain::Box { lower, .. } => lower.len(),
        }
    }

    /// Characteristic length used to scale finite-difference steps.
    pub fn scale(&self) -> T {
        match self {
            ChartDomain::Ball { radius, .. } => *radius,
            ChartDomain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .fold(T::zero(), |m, (&l, &u)| m.max((u - l) / T::lit(2.0))),
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn clearance(&self, x: &[T]) -> T {
        match self {
            ChartDomain::Ball { center, radius } => *radius - linalg::norm(&linalg::sub(x, center)),
            ChartDomain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .fold(T::infinity(), |m, (&xi, (&l, &u))| m.min(xi - l).min(u - xi)),
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.clearance(x) > T::zero()
    }

    /// Uniform sample from the domain shrunk by `inset` (a fraction of the
    /// scale in `[0, 1)`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, inset: T) -> Vec<T> {
        let shrink = T::one() - inset;
        match self {
            ChartDomain::Ball { center, radius } => loop {
                let v: Vec<T> = center.iter().map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
                if linalg::norm(&v) < T::one() {
                    return linalg::axpy(center, *radius * shrink, &v);
                }
            },
            ChartDomain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| {
                    let mid = (l + u) / T::lit(2.0);
                    let half = (u - l) / T::lit(2.0) * shrink;
                    mid + half * T::lit(rng.gen_range(-1.0..1.0))
                })
                .collect(),
        }
    }
}
