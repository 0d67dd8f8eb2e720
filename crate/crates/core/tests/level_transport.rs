//! Transport of normalized transnormal functions: the Funk disk with the
//! radial function `|x| − 1/2`, and a rotational Killing wind.

use std::sync::Arc;

use zermelo_core::correspondence::HomotheticNavigation;
use zermelo_core::geodesics::{integrate_geodesic, GeodesicOptions};
use zermelo_core::isoparametric::{
    density_pullback, finsler_gradient, isoparametric_check, level_map, normalize_transnormal, recover_base_value,
    transport_isoparametric, verify_laplacian_relation, ScalarField, ScalarFieldSpec, TransportedField,
};
use zermelo_core::linalg;
use zermelo_core::{ChartDomain, Datum, Metric, VectorField};

fn nav(wind: VectorField) -> HomotheticNavigation<f64> {
    let base = Metric::euclidean(2, ChartDomain::unit_ball(2, 0.9));
    HomotheticNavigation::new(Datum::new(base, wind, 1e-3).unwrap(), 16, 2).unwrap()
}

fn radial() -> Arc<dyn ScalarField<f64>> {
    Arc::new(ScalarFieldSpec::radial(vec![0.0, 0.0], 0.5))
}

#[test]
fn funk_radial_levels() {
    let n = nav(VectorField::radial(2, 1.0));
    let f = radial();
    for p in [[0.6, 0.0], [0.0, -0.45], [0.3, 0.4]] {
        let v = transport_isoparametric(&n, f.as_ref(), &p).unwrap();
        let r: f64 = linalg::norm(&p);
        assert!((v - ((r + 1.0) / 1.5).ln()).abs() < 1e-12, "{v}");
    }
    // the unit-speed F̃-geodesic leaving the level 0 normally reaches (0.6, 0) at time f̃
    let g = integrate_geodesic(n.navigated(), &[0.5, 0.0], &[1.5, 0.0], (0.0, 0.1), &GeodesicOptions::default()).unwrap();
    let target = transport_isoparametric(&n, f.as_ref(), &[0.6, 0.0]).unwrap();
    let (mut lo, mut hi) = (0.0, 0.1);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g.state_at(mid).unwrap().0[0] < 0.6 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - target).abs() < 1e-6);
}

#[test]
fn transported_gradient_is_normalized() {
    let n = nav(VectorField::radial(2, 1.0));
    let f = radial();
    let ft = TransportedField::new(n.clone(), f.clone());
    for x in [[0.35, 0.1], [-0.2, 0.5], [0.1, -0.62]] {
        let (xt, d) = level_map(&n, f.as_ref(), &x).unwrap();
        let grad = finsler_gradient(n.navigated(), &ft, &xt).unwrap();
        assert!((n.navigated().norm(&xt, &grad).unwrap() - 1.0).abs() < 1e-4);
        // ∇̃f̃ = Ψ_*((2cf + 1)∇f)
        let scale = 2.0 * n.c() * f.value(&x).unwrap() + 1.0;
        let pushed = linalg::scale(&d.mul_vec(&finsler_gradient(n.base(), f.as_ref(), &x).unwrap()), scale);
        assert!(linalg::max_abs_diff(&grad, &pushed) < 1e-6, "{grad:?} {pushed:?}");
    }
}

#[test]
fn laplacian_relations() {
    let pts: Vec<Vec<f64>> = [[0.3, 0.05], [0.0, 0.5], [-0.45, -0.3], [0.2, -0.62]].iter().map(|p| p.to_vec()).collect();
    for wind in [VectorField::radial(2, 1.0), VectorField::rotation(2, 0.5)] {
        let n = nav(wind);
        let ft = TransportedField::new(n, radial());
        let rows = verify_laplacian_relation(&ft, &pts).unwrap();
        for r in rows {
            assert!(r.residual < 1e-3, "{r:?}");
        }
    }
}

#[test]
fn density_pullback_and_round_trip() {
    let n = nav(VectorField::radial(2, 1.0));
    let f = radial();
    let ft = TransportedField::new(n.clone(), f.clone());
    for x in [[0.35, 0.1], [-0.2, 0.5], [0.1, -0.62]] {
        let row = density_pullback(&n, f.as_ref(), &x, 0.05).unwrap();
        assert!((row.c0 - 0.5).abs() < 1e-8 && row.c0_spread < 1e-5, "{row:?}");
        let r = linalg::norm(&x);
        assert!((row.expected - 1.5 / (1.5 - r).powi(3)).abs() < 1e-8);
        assert!(row.relative_residual < 1e-5, "{row:?}");
        let back = recover_base_value(&n, &ft, &x).unwrap();
        assert!((back - f.value(&x).unwrap()).abs() < 1e-5);
    }
}

#[test]
fn funk_normalization_and_verdict() {
    let n = nav(VectorField::radial(2, 1.0));
    let r2: Arc<dyn ScalarField<f64>> = Arc::new(
        ScalarFieldSpec::new("r2", 2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]).with_differential(|x| vec![2.0 * x[0], 2.0 * x[1]]),
    );
    let normalized = normalize_transnormal(n.navigated(), r2, &[0.4, 0.0], (0.04, 0.49), 5).unwrap();
    for p in [[0.3, 0.2], [-0.5, 0.1], [0.0, -0.65]] {
        let grad = finsler_gradient(n.navigated(), &normalized, &p).unwrap();
        assert!((n.navigated().norm(&p, &grad).unwrap() - 1.0).abs() < 1e-5);
    }
    let ft = TransportedField::new(n.clone(), radial());
    let rep = isoparametric_check(n.navigated(), &ft, &[-0.1, 0.0, 0.1], 4, 3).unwrap();
    assert!(rep.isoparametric, "{rep:?}");
}
