//! Transport of geodesics, Jacobi fields and curvature under homothetic and
//! Killing navigation, checked against direct computations on `F̃`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zermelo_core::chart::{ConformalFactor, MatrixField};
use zermelo_core::correspondence::{
    check_transported_geodesic, check_transported_jacobi, linear_pairing, locally_symmetric_probe,
    transport_geodesic, transport_jacobi, verify_flag_shift, verify_key_identity, verify_s_shift,
    HomotheticNavigation,
};
use zermelo_core::geodesics::{integrate_geodesic, integrate_jacobi, GeodesicOptions};
use zermelo_core::{ChartDomain, Datum, Mat, Metric, VectorField};

fn nav(base: Metric, wind: VectorField) -> HomotheticNavigation<f64> {
    HomotheticNavigation::new(Datum::new(base, wind, 1e-3).unwrap(), 16, 9).unwrap()
}

fn funk() -> HomotheticNavigation<f64> {
    nav(Metric::euclidean(2, ChartDomain::unit_ball(2, 0.9)), VectorField::radial(2, 1.0))
}

fn rotation() -> HomotheticNavigation<f64> {
    nav(Metric::euclidean(2, ChartDomain::unit_ball(2, 0.9)), VectorField::rotation(2, 0.5))
}

fn sphere_killing() -> HomotheticNavigation<f64> {
    let sphere = Metric::quadratic(
        "round sphere",
        ChartDomain::unit_ball(2, 2.0),
        MatrixField::Conformal { base: Mat::identity(2), factor: ConformalFactor::Stereographic { curvature: 1.0 } },
    )
    .unwrap();
    nav(sphere, VectorField::rotation(2, 0.5))
}

fn flags(rng: &mut ChaCha8Rng, radius: f64, count: usize) -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = rng.gen_range(0.3..std::f64::consts::PI - 0.3);
            (vec![r * a.cos(), r * a.sin()], vec![b.cos(), b.sin()], vec![(b + d).cos(), (b + d).sin()])
        })
        .collect()
}

#[test]
fn funk_ray_transport() {
    let n = funk();
    let g = integrate_geodesic(n.base(), &[0.0, 0.0], &[0.6, 0.8], (-0.1, 0.5), &GeodesicOptions::default()).unwrap();
    let gt = transport_geodesic(&n, &g, (0.0, 0.4), 80).unwrap();
    for (t, x) in gt.times.iter().zip(&gt.positions) {
        let r = t.exp_m1();
        assert!((x[0] - 0.6 * r).abs() < 1e-9 && (x[1] - 0.8 * r).abs() < 1e-9);
    }
    let check = check_transported_geodesic(&n, &gt).unwrap();
    assert!(check.speed_residual < 1e-6, "{check:?}");
    assert!(check.equation_residual < 1e-4, "{check:?}");
    assert!(check.direct_discrepancy < 1e-5, "{check:?}");
}

#[test]
fn killing_transport() {
    for n in [rotation(), sphere_killing()] {
        let unit = n.base().normalize(&[0.2, -0.1], &[0.7, 0.1]).unwrap();
        let g = integrate_geodesic(n.base(), &[0.2, -0.1], &unit, (-0.6, 0.6), &GeodesicOptions::default()).unwrap();
        let gt = transport_geodesic(&n, &g, (-0.5, 0.5), 100).unwrap();
        let check = check_transported_geodesic(&n, &gt).unwrap();
        assert!(check.speed_residual < 1e-6 && check.equation_residual < 1e-4, "{check:?}");
        assert!(check.direct_discrepancy < 1e-6, "{check:?}");
    }
}

#[test]
fn jacobi_transport() {
    for (n, tol) in [(funk(), 1e-4), (rotation(), 1e-5), (sphere_killing(), 1e-5)] {
        let x0 = [0.1, 0.2];
        let y0 = n.base().normalize(&x0, &[0.3, -0.5]).unwrap();
        let g = n.base().fundamental_tensor(&x0, &y0).unwrap();
        let w = [1.0, 0.4];
        let gyw = g.bilinear(&y0, &w);
        let u: Vec<f64> = (0..2).map(|i| w[i] - gyw * y0[i]).collect();
        let opts = GeodesicOptions::default().with_tolerance(1e-12);
        let j = integrate_jacobi(n.base(), &x0, &y0, &u, &[0.0, 0.0], (-0.5, 0.5), &opts).unwrap();
        let jt = transport_jacobi(&n, &j, (-0.3, 0.3), 60).unwrap();
        // same initial vector on both sides
        let o = jt.geodesic.origin();
        assert!(zermelo_core::linalg::max_abs_diff(&jt.field[o], &u) < 1e-14);
        let (orth, disc) = check_transported_jacobi(&n, &jt).unwrap();
        assert!(orth < 1e-5, "orthogonality {orth}");
        assert!(disc < tol, "re-integration {disc}");
    }
}

#[test]
fn pairing_and_key_identity() {
    for n in [funk(), rotation(), sphere_killing()] {
        let x0 = [0.15, -0.05];
        let y0 = n.base().normalize(&x0, &[0.8, 0.3]).unwrap();
        let g = integrate_geodesic(n.base(), &x0, &y0, (-0.4, 0.5), &GeodesicOptions::default()).unwrap();
        let p = linear_pairing(n.base(), &g, n.datum().wind()).unwrap();
        assert!((p.slope + 2.0 * n.c()).abs() < 1e-4 && p.max_abs_residual < 1e-6, "{p:?}");
        let grid: Vec<f64> = (0..=10).map(|k| 0.03 * k as f64).collect();
        let rep = verify_key_identity(&n, &g, &[-0.3, 1.0], &grid).unwrap();
        assert!(rep.max_relative_residual < 1e-5, "{}", rep.max_relative_residual);
        assert!(rep.max_orthogonality < 1e-6 && rep.origin_consistency < 1e-8);
    }
}

#[test]
fn flag_shift_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let t = verify_flag_shift(&funk(), &flags(&mut rng, 0.8, 30)).unwrap();
    assert_eq!(t.rows.len(), 30);
    assert!(t.max_residual() < 1e-4, "{}", t.max_residual());
    assert!(t.rows.iter().all(|r| (r.k_tilde + 0.25).abs() < 1e-4));
    let t = verify_flag_shift(&sphere_killing(), &flags(&mut rng, 1.5, 20)).unwrap();
    assert!(t.max_residual() < 1e-4 && t.rows.iter().all(|r| (r.k_tilde - 1.0).abs() < 1e-4));
}

#[test]
fn s_shift_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts: Vec<_> = flags(&mut rng, 0.7, 6).into_iter().map(|(x, y, _)| (x, y)).collect();
    let t = verify_s_shift(&funk(), &pts).unwrap();
    assert!(t.max_residual() < 1e-3, "{}", t.max_residual());
    assert!(t.rows.iter().all(|r| (r.s_tilde + 1.5).abs() < 1e-3 && r.s.abs() < 1e-9));
    let wind = nav(Metric::euclidean(2, ChartDomain::unit_ball(2, 0.9)), VectorField::translation(vec![0.5, 0.0]));
    let t = verify_s_shift(&wind, &pts[..3]).unwrap();
    assert!(t.rows.iter().all(|r| r.s_tilde.abs() < 1e-3));
}

#[test]
fn curvature_profiles() {
    let n = funk();
    let g = integrate_geodesic(n.base(), &[0.1, 0.0], &[0.0, 1.0], (-0.1, 0.5), &GeodesicOptions::default()).unwrap();
    let gt = transport_geodesic(&n, &g, (0.0, 0.3), 30).unwrap();
    let p = locally_symmetric_probe(&n, &gt, &[0.0, 0.1, 0.2, 0.3], 8).unwrap();
    assert!(p.deviation_from(-0.25) < 1e-3);
    let n = sphere_killing();
    let unit = n.base().normalize(&[0.1, 0.0], &[0.0, 1.0]).unwrap();
    let g = integrate_geodesic(n.base(), &[0.1, 0.0], &unit, (-0.5, 0.5), &GeodesicOptions::default()).unwrap();
    let gt = transport_geodesic(&n, &g, (0.0, 0.3), 30).unwrap();
    let p = locally_symmetric_probe(&n, &gt, &[0.0, 0.15, 0.3], 8).unwrap();
    assert!(p.deviation_from(1.0) < 1e-3);
}
