//! Geodesics and curvature of the Funk metric on the disk, obtained by
//! navigating the Euclidean metric with the radial wind `W(x) = x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zermelo_core::geodesics::{
    covariant_derivative, flag_curvature, flag_curvature_via_jacobi, integrate_geodesic, integrate_jacobi,
    riemann_operator, s_curvature, variation_discrepancy, GeodesicOptions,
};
use zermelo_core::linalg;
use zermelo_core::{ChartDomain, Datum, Metric, VectorField};

fn funk() -> Metric {
    let base = Metric::euclidean(2, ChartDomain::unit_ball(2, 0.9));
    Datum::new(base, VectorField::radial(2, 1.0), 1e-3).unwrap().navigated_metric()
}

fn random_flag(rng: &mut ChaCha8Rng, radius: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let b = rng.gen_range(0.0..std::f64::consts::TAU);
    let d = rng.gen_range(0.3..std::f64::consts::PI - 0.3);
    (vec![r * a.cos(), r * a.sin()], vec![b.cos(), b.sin()], vec![(b + d).cos(), (b + d).sin()])
}

#[test]
fn rays_through_origin() {
    let f = funk();
    let g = integrate_geodesic(&f, &[0.0, 0.0], &[0.6, 0.8], (0.0, 0.5), &GeodesicOptions::default()).unwrap();
    assert!(g.is_complete());
    // unit speed against the outward wind: |x(t)| = e^t − 1
    for (t, x) in g.times.iter().zip(&g.positions) {
        assert!((linalg::norm(x) - t.exp_m1()).abs() < 1e-8);
    }
    assert!(g.speed_drift() < 1e-7);
    for x in &g.positions {
        // stays on the ray through (0.6, 0.8)
        assert!((0.8 * x[0] - 0.6 * x[1]).abs() < 1e-9, "{x:?}");
    }
}

#[test]
fn geodesics_are_autoparallel_and_compatible() {
    let f = funk();
    let g = integrate_geodesic(&f, &[0.1, -0.2], &[0.5, 0.3], (-0.5, 0.5), &GeodesicOptions::default()).unwrap();
    let h = 1e-3;
    for &t in &[-0.3, 0.0, 0.2] {
        let v = covariant_derivative(&f, &g, |s| Ok(g.state_at(s)?.1), t, h).unwrap();
        assert!(linalg::norm(&v) < 1e-7, "{v:?}");
    }
    let u = |t: f64| -> zermelo_core::Result<Vec<f64>> { Ok(vec![0.3 + t, (2.0 * t).cos()]) };
    let w = |t: f64| -> zermelo_core::Result<Vec<f64>> { Ok(vec![t * t - 0.5, 1.0 + t.sin()]) };
    let pair = |t: f64| {
        let (x, v) = g.state_at(t).unwrap();
        f.inner(&x, &v, &u(t).unwrap(), &w(t).unwrap()).unwrap()
    };
    for &t in &[-0.2, 0.1, 0.3] {
        let d = (-pair(t + 2.0 * h) + 8.0 * pair(t + h) - 8.0 * pair(t - h) + pair(t - 2.0 * h)) / (12.0 * h);
        let (x, v) = g.state_at(t).unwrap();
        let du = covariant_derivative(&f, &g, u, t, h).unwrap();
        let dw = covariant_derivative(&f, &g, w, t, h).unwrap();
        let rhs = f.inner(&x, &v, &du, &w(t).unwrap()).unwrap() + f.inner(&x, &v, &u(t).unwrap(), &dw).unwrap();
        assert!((d - rhs).abs() < 1e-6, "t={t}: {d} vs {rhs}");
    }
}

#[test]
fn jacobi_field_matches_variation() {
    let f = funk();
    let opts = GeodesicOptions::default().with_tolerance(1e-12);
    let j = integrate_jacobi(&f, &[0.1, 0.2], &[0.4, -0.3], &[0.2, 0.5], &[0.1, 0.0], (-0.4, 0.4), &opts).unwrap();
    let disc = variation_discrepancy(&f, &j, 1e-4, &opts).unwrap();
    assert!(disc < 1e-5, "{disc}");
    // ⟨J, γ̇⟩ along γ is affine in t
    let vals: Vec<f64> = (0..j.geodesic.len())
        .map(|k| {
            let g = &j.geodesic;
            f.inner(&g.positions[k], &g.velocities[k], &j.field[k], &g.velocities[k]).unwrap()
        })
        .collect();
    for k in 1..vals.len() - 1 {
        let second = vals[k + 1] - 2.0 * vals[k] + vals[k - 1];
        assert!(second.abs() < 1e-8, "{second}");
    }
}

#[test]
fn constant_flag_curvature() {
    let f = funk();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (x, y, u) = random_flag(&mut rng, 0.8);
        let k = flag_curvature(&f, &x, &y, &u).unwrap();
        assert!((k + 0.25).abs() < 1e-4, "K({x:?}, {y:?}) = {k}");
        let r = riemann_operator(&f, &x, &y).unwrap();
        assert!(linalg::norm(&r.mul_vec(&y)) < 1e-6);
    }
}

#[test]
fn curvature_routes_agree() {
    let f = funk();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10 {
        let (x, y, u) = random_flag(&mut rng, 0.75);
        let direct = flag_curvature(&f, &x, &y, &u).unwrap();
        let jac = flag_curvature_via_jacobi(&f, &x, &y, &u, 2, i).unwrap();
        assert!((direct - jac.curvature).abs() < 1e-4, "{direct} vs {}", jac.curvature);
        assert!(jac.probe_excess <= 1e-4);
    }
}

#[test]
fn s_curvature_is_constant() {
    let f = funk();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (x, y, _) = random_flag(&mut rng, 0.7);
        let unit = f.normalize(&x, &y).unwrap();
        let s = s_curvature(&f, &x, &unit).unwrap();
        assert!((s + 1.5).abs() < 1e-3, "S = {s}");
    }
}
