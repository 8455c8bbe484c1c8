use lovelock_mass::curvature::{gauss_bonnet_l2_direct, lovelock_l, riemann};
use lovelock_mass::metrics::{schwarzschild_family, Chart, MetricField};
use lovelock_oracles::*;
use std::f64::consts::PI;

const OMEGA4: f64 = 8.0 * PI * PI / 3.0;

#[test]
fn delta_matches_determinant_rule() {
    // δ^{ab}_{cd} = δ^a_c δ^b_d − δ^a_d δ^b_c
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let want = (a == c && b == d) as i32 - (a == d && b == c) as i32;
                    assert_eq!(brute_delta(&[a, b], &[c, d]).unwrap(), want);
                }
            }
        }
    }
    assert_eq!(brute_delta(&[0, 1, 2, 3, 4], &[4, 3, 2, 1, 0]).unwrap(), 1);
    assert_eq!(brute_delta(&[0, 0, 1], &[0, 0, 1]).unwrap(), 0);
}

#[test]
fn unit_sphere_integrals() {
    let s = surface_integrals(&EllipsoidEmbedding::new(vec![1.0; 5]), 10, true).unwrap();
    assert!((s.area / OMEGA4 - 1.0).abs() < 1e-10);
    assert!((s.h1 / (4.0 * OMEGA4) - 1.0).abs() < 1e-10);
    assert!((2.0 * s.h2 / s.induced_r - 1.0).abs() < 1e-12);
    assert!((s.induced_r / (12.0 * OMEGA4) - 1.0).abs() < 1e-10);
}

#[test]
fn scaled_sphere_h3() {
    let rho = 1.7;
    let v = parametric_surface_integrals(&EllipsoidEmbedding::new(vec![rho; 5]), Functional::H3, 12).unwrap();
    assert!((3.0 * v / (12.0 * rho * OMEGA4) - 1.0).abs() < 1e-12, "{v}");
}

#[test]
fn gauss_equation_on_ellipsoid() {
    let e = EllipsoidEmbedding::new(vec![2.0, 1.0, 1.5, 1.0]);
    for th in [[0.3, 1.1, 2.0], [1.4, 0.7, 5.5], [2.5, 2.9, 0.1]] {
        let v = point_curvatures(&e, &th, true).unwrap();
        assert!((2.0 * v[2] - v[4]).abs() < 1e-10 * v[4].abs().max(1.0), "{v:?}");
    }
}

#[test]
fn fd_derivatives_match_analytic_jet() {
    let g = schwarzschild_family(2, 6, 1.0, Chart::Conformal).unwrap();
    let x = [1.2, -0.7, 0.4, 0.9, -0.3, 0.5];
    let jet = g.jet(&x, 3).unwrap();
    let (dg, d2g, d3g) = fd_metric_derivatives(&g, &x, &FdConfig::default()).unwrap();
    let worst = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(worst(&dg, &jet.dg) < 1e-6);
    assert!(worst(&d2g, &jet.d2g) < 1e-4);
    assert!(worst(&d3g, jet.d3g.as_ref().unwrap()) < 1e-2);
}

#[test]
fn three_way_l2() {
    let g = schwarzschild_family(1, 5, 1.0, Chart::Rho).unwrap();
    for x in [[3.0, 0.5, -1.0, 0.2, 0.7], [-2.0, 2.5, 0.1, -0.4, 1.3]] {
        let b = riemann(&g, &x).unwrap();
        let a = direct_l2(&g, &x).unwrap();
        let scale = a.abs().max(1e-300);
        assert!((lovelock_l(&b, 2) - a).abs() < 1e-9 * scale);
        assert!((gauss_bonnet_l2_direct(&b) - a).abs() < 1e-9 * scale);
    }
}

