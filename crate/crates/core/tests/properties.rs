//! Randomized invariants across norms, navigation, flows and curvature.

use std::f64::consts::TAU;

use proptest::prelude::*;
use zermelo_core::geodesics::{flag_curvature, spray_values};
use zermelo_core::isoparametric::finsler_gradient;
use zermelo_core::linalg::{self, Matrix};
use zermelo_core::{ChartDomain, Datum, MatrixField, Metric, ScalarFieldSpec, VectorField, Warp};

fn spd2() -> impl Strategy<Value = Matrix<f64>> {
    (0.5f64..2.0, 0.5f64..2.0, 0.0f64..TAU).prop_map(|(a, b, th)| {
        let (c, s) = (th.cos(), th.sin());
        let r = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        r.matmul(&Matrix::diagonal(&[a, b])).matmul(&r.transpose())
    })
}

fn small_matrix(bound: f64) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(-bound..bound, 4).prop_map(|v| Matrix::from_rows(&[v[..2].to_vec(), v[2..].to_vec()]).unwrap())
}

fn vec2(bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, 2)
}

fn point(radius: f64) -> impl Strategy<Value = Vec<f64>> {
    (0.0..radius, 0.0..TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    (0.2f64..3.0, 0.0..TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
}

fn base(a: Matrix<f64>) -> Metric {
    Metric::quadratic("q", ChartDomain::unit_ball(2, 0.9), MatrixField::Constant(a)).unwrap()
}

/// Quadratic base with a weak affine wind.
fn datum() -> impl Strategy<Value = Datum> {
    (spd2(), small_matrix(0.4), vec2(0.3)).prop_map(|(a, m, b)| {
        Datum::new(base(a), VectorField::affine(m, b).unwrap(), 0.05).unwrap()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn navigation_is_homogeneous(d in datum(), x in point(0.6), y in direction(), lambda in 0.01f64..10.0) {
        prop_assume!(d.admissible(&x));
        let f = d.navigate(&x, &y).unwrap();
        let fl = d.navigate(&x, &linalg::scale(&y, lambda)).unwrap();
        prop_assert!(rel(fl, lambda * f) < 1e-9);
    }

    #[test]
    fn navigation_shifts_the_indicatrix(d in datum(), x in point(0.6), y in direction()) {
        prop_assume!(d.admissible(&x));
        let unit = linalg::scale(&y, 1.0 / d.base().norm(&x, &y).unwrap());
        let shifted = linalg::add(&unit, &d.wind().value(&x).unwrap());
        prop_assert!((d.navigate(&x, &shifted).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_root_finder(d in datum(), x in point(0.6), y in direction()) {
        prop_assume!(d.admissible(&x));
        let closed = d.navigate_randers().unwrap();
        prop_assert!(rel(d.navigate(&x, &y).unwrap(), closed.norm(&x, &y).unwrap()) < 1e-10);
    }

    #[test]
    fn inverse_navigation_round_trips(d in datum(), x in point(0.6), y in direction()) {
        prop_assume!(d.admissible(&x));
        let f = d.base().norm(&x, &y).unwrap();
        prop_assert!(rel(d.inverse_navigate(&x, &y).unwrap(), f) < 1e-9);
    }

    #[test]
    fn flows_compose(m in small_matrix(1.0), b in vec2(1.0), x in vec2(1.0), s in -0.5f64..0.5, t in -0.5f64..0.5) {
        let v = VectorField::affine(m, b).unwrap();
        let (xs, _) = v.flow(&x, s).unwrap();
        let (xst, _) = v.flow(&xs, t).unwrap();
        let (direct, _) = v.flow(&x, s + t).unwrap();
        prop_assert!(linalg::max_abs_diff(&xst, &direct) < 1e-9);
        let (numeric, _) = v.numeric_flow(&x, s, None).unwrap();
        prop_assert!(linalg::max_abs_diff(&numeric, &xs) < 1e-8);
    }

    #[test]
    fn riemannian_distortion_ignores_direction(a in spd2(), x in point(0.8), y in direction(), z in direction()) {
        let m = base(a);
        prop_assert!((m.distortion(&x, &y).unwrap() - m.distortion(&x, &z).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn warp_is_an_increasing_bijection(c in -1.0f64..1.0, t in 0.0f64..0.5, h in 1e-3f64..0.1) {
        let w = Warp::new(c);
        prop_assert_eq!(w.s(0.0), 0.0);
        prop_assert!(w.s(t + h) > w.s(t));
        prop_assert!((w.inverse(w.s(t)) - t).abs() < 1e-12);
        let fd = (w.s(t + 1e-6) - w.s(t - 1e-6)) / 2e-6;
        prop_assert!(rel(fd, w.ds(t)) < 1e-6);
    }

    #[test]
    fn warp_is_continuous_across_the_series_branch(t in 0.0f64..0.5, sign in prop::sample::select(vec![-1.0, 1.0])) {
        let below = Warp::new(sign * (1e-8 - 1e-12));
        let above = Warp::new(sign * (1e-8 + 1e-12));
        prop_assert!((below.s(t) - above.s(t)).abs() < 1e-10);
        prop_assert!((below.inverse(t) - above.inverse(t)).abs() < 1e-10);
    }

    #[test]
    fn gradient_is_the_legendre_dual(d in datum(), x in point(0.6), p in vec2(0.5)) {
        prop_assume!(d.admissible(&x) && linalg::norm(&p) > 0.05);
        let metric = d.navigate_randers().unwrap();
        let f = ScalarFieldSpec::linear(p.clone(), 0.0);
        let grad = finsler_gradient(&metric, &f, &x).unwrap();
        let g = metric.fundamental_tensor(&x, &grad).unwrap();
        for v in [linalg::unit(2, 0), linalg::unit(2, 1)] {
            prop_assert!((g.bilinear(&grad, &v) - linalg::dot(&p, &v)).abs() < 1e-10 * linalg::norm(&p));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spray_is_two_homogeneous(d in datum(), x in point(0.5), y in direction(), lambda in 0.1f64..5.0) {
        prop_assume!(d.admissible(&x));
        let metric = d.navigate_randers().unwrap();
        let g = spray_values(&metric, &x, &y).unwrap();
        let gl = spray_values(&metric, &x, &linalg::scale(&y, lambda)).unwrap();
        let scale = linalg::norm(&g).max(1e-6) * lambda * lambda;
        prop_assert!(linalg::max_abs_diff(&gl, &linalg::scale(&g, lambda * lambda)) < 1e-9 * scale);
    }

    #[test]
    fn flag_curvature_depends_only_on_the_flag(
        d in datum(),
        x in point(0.5),
        y in direction(),
        u in direction(),
        shift in -2.0f64..2.0,
        stretch in prop::sample::select(vec![-3.0, 0.5, 2.0]),
    ) {
        prop_assume!(d.admissible(&x));
        let (un, yn) = (linalg::scale(&u, 1.0 / linalg::norm(&u)), linalg::scale(&y, 1.0 / linalg::norm(&y)));
        prop_assume!((linalg::dot(&un, &yn).abs()) < 0.9);
        let metric = d.navigate_randers().unwrap();
        let k = flag_curvature(&metric, &x, &y, &u).unwrap();
        let moved = linalg::scale(&linalg::axpy(&u, shift, &y), stretch);
        let k2 = flag_curvature(&metric, &x, &y, &moved).unwrap();
        prop_assert!((k2 - k).abs() < 1e-6 * k.abs().max(1.0), "{} vs {}", k, k2);
    }
}
