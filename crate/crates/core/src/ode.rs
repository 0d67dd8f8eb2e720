//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Steps are clipped so that every requested output time is hit exactly;
//! no interpolation is involved in the returned samples.

use crate::error::{GeometryError, Result};
use crate::Real;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub min_step: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tolerance(tol: T) -> Self {
        OdeOptions { rtol: tol, atol: tol, min_step: T::lit(1e-14), max_steps: 200_000 }
    }
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self::with_tolerance(T::lit(1e-10))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OdeStatus {
    Completed,
    /// Integration stopped early; samples up to `t` are valid.
    Stopped { t: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct OdeSolution<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub status: OdeStatus,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = rhs(t, y)` from `(t0, y0)` and records the state at each
/// entry of `outputs` (monotone, on one side of `t0`). `inside` is checked
/// after each accepted step; a `false` stops the run with a truncated
/// solution rather than an error.
pub fn integrate<T, F, G>(
    mut rhs: F,
    t0: T,
    y0: &[T],
    outputs: &[T],
    opts: &OdeOptions<T>,
    mut inside: G,
) -> Result<OdeSolution<T>>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>>,
    G: FnMut(T, &[T]) -> bool,
{
    let mut sol = OdeSolution { times: Vec::new(), states: Vec::new(), status: OdeStatus::Completed };
    let Some(&last) = outputs.last() else {
        return Ok(sol);
    };
    let dir = if last >= t0 { T::one() } else { -T::one() };
    if outputs.iter().any(|&t| (t - t0) * dir < T::zero()) {
        return Err(GeometryError::InvalidInput("output times on both sides of t0".into()));
    }
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y)?;
    let mut next = 0;
    while next < outputs.len() && outputs[next] == t0 {
        sol.times.push(t0);
        sol.states.push(y.clone());
        next += 1;
    }

    let span = (last - t0).abs();
    let d0 = rms(&y);
    let d1 = rms(&k1);
    let mut h = if d1 > T::lit(1e-10) { T::lit(0.01) * d0.max(T::lit(1e-3)) / d1 } else { T::lit(1e-3) };
    h = h.min(span).max(opts.min_step);

    let mut steps = 0;
    let mut stage_failures = 0;
    let mut k = vec![vec![T::zero(); dim]; 7];
    while next < outputs.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(GeometryError::IntegrationFailed("step budget exhausted".into()));
        }
        let target = outputs[next];
        let remaining = (target - t).abs();
        let mut hit = false;
        if h >= remaining {
            h = remaining;
            hit = true;
        }
        let hs = h * dir;
        k[0].clone_from(&k1);
        let mut stage_error = None;
        for s in 1..7 {
            let ys: Vec<T> = (0..dim)
                .map(|i| {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += hs * T::lit(A[s][j]) * kj[i];
                        }
                    }
                    acc
                })
                .collect();
            match rhs(t + T::lit(C[s]) * hs, &ys) {
                Ok(v) => k[s] = v,
                Err(e) => {
                    stage_error = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = stage_error {
            stage_failures += 1;
            if stage_failures > 20 || h <= opts.min_step {
                sol.status = OdeStatus::Stopped { t: t.approx(), reason: e.to_string() };
                return Ok(sol);
            }
            h *= T::lit(0.25);
            continue;
        }
        // the 7th stage is evaluated at the 5th-order solution (FSAL)
        let y_new: Vec<T> = (0..dim)
            .map(|i| {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(6) {
                    acc += hs * T::lit(A[6][j]) * kj[i];
                }
                acc
            })
            .collect();
        let mut err = T::zero();
        for i in 0..dim {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                e += T::lit(E[j]) * kj[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let r = hs * e / sc;
            err += r * r;
        }
        let err = (err / T::from_usize(dim.max(1)).expect("dim")).sqrt();
        if !err.is_finite() {
            h *= T::lit(0.2);
            if h < opts.min_step {
                return Err(GeometryError::IntegrationFailed("non-finite error estimate".into()));
            }
            continue;
        }
        if err <= T::one() {
            t = if hit { target } else { t + hs };
            y = y_new;
            k1.clone_from(&k[6]);
            stage_failures = 0;
            if !inside(t, &y) {
                sol.status = OdeStatus::Stopped { t: t.approx(), reason: "left domain".into() };
                return Ok(sol);
            }
            while next < outputs.len() && outputs[next] == t {
                sol.times.push(t);
                sol.states.push(y.clone());
                next += 1;
            }
            let fac = if err == T::zero() { T::lit(5.0) } else { T::lit(0.9) * err.powf(T::lit(-0.2)) };
            let grown = h * fac.min(T::lit(5.0)).max(T::lit(0.2));
            // a step shortened only to land on an output must not shrink the next one
            h = if hit { grown.max(h) } else { grown };
        } else {
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
            h *= fac;
            if h < opts.min_step {
                return Err(GeometryError::IntegrationFailed(format!(
                    "step size underflow at t = {}",
                    t.approx()
                )));
            }
        }
    }
    Ok(sol)
}

fn rms<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    (v.iter().map(|&x| x * x).sum::<T>() / T::from_usize(v.len()).expect("len")).sqrt()
}

/// `count + 1` equally spaced times from `a` to `b` inclusive.
pub fn linspace<T: Real>(a: T, b: T, count: usize) -> Vec<T> {
    let n = T::from_usize(count.max(1)).expect("count");
    (0..=count)
        .map(|i| {
            if i == count {
                b
            } else {
                a + (b - a) * T::from_usize(i).expect("index") / n
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let times = linspace(0.0, 10.0, 50);
        let sol = integrate(
            |_t, y: &[f64]| Ok(vec![y[1], -y[0]]),
            0.0,
            &[1.0, 0.0],
            &times,
            &OdeOptions::with_tolerance(1e-11),
            |_, _| true,
        )
        .unwrap();
        assert_eq!(sol.status, OdeStatus::Completed);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_and_stop() {
        let sol = integrate(|_t, y: &[f64]| Ok(vec![y[0]]), 0.0, &[1.0], &[-1.0], &OdeOptions::default(), |_, _| true)
            .unwrap();
        assert!((sol.states[0][0] - (-1.0f64).exp()).abs() < 1e-9);

        let sol = integrate(
            |_t, _y: &[f64]| Ok(vec![1.0]),
            0.0,
            &[0.0],
            &linspace(0.0, 2.0, 20),
            &OdeOptions::default(),
            |_, y| y[0] < 1.0,
        )
        .unwrap();
        assert!(matches!(sol.status, OdeStatus::Stopped { .. }));
        assert!(sol.times.last().copied().unwrap() < 1.0 + 1e-12);
    }
}
