use lovelock_mass::curvature::{lovelock_l, riemann, riemann_symmetry_residual, CurvatureBundle};
use lovelock_mass::graphcase::{graph_l2, Kernel, KernelShape, KernelSum};
use lovelock_mass::metrics::{fd_third_derivatives, graph_metric, schwarzschild_family, Chart, MetricField};
use lovelock_mass::multiindex::gen_kronecker_delta;
use lovelock_oracles::{brute_delta, direct_l2, fd_metric_derivatives, riemann_lower, FdConfig};
use proptest::prelude::*;
use std::sync::Arc;

fn bump(n: usize, c: f64) -> KernelSum {
    let mut center = vec![0.0; n];
    center[0] = 0.3;
    KernelSum {
        n,
        terms: vec![
            Kernel { center: center.clone(), coeff: c, shape: KernelShape::Gaussian { width: 1.2 } },
            Kernel { center: vec![-0.2; n], coeff: 0.5, shape: KernelShape::Algebraic { width: 1.0, beta: 1.0 } },
        ],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_matches_permutation_sum(upper in prop::collection::vec(0usize..5, 1..5), seed in 0usize..120) {
        let r = upper.len();
        // lower: a rotation and optional swap of upper, or a random row
        let mut lower = upper.clone();
        lower.rotate_left(seed % r);
        if seed % 3 == 0 && r > 1 {
            lower.swap(0, r - 1);
        }
        if seed % 7 == 0 {
            lower[0] = seed % 5;
        }
        prop_assert_eq!(gen_kronecker_delta(&upper, &lower) as i32, brute_delta(&upper, &lower).unwrap());
    }

    #[test]
    fn riemann_matches_independent_formula(x in prop::collection::vec(-2.0f64..2.0, 5), c in -0.8f64..0.8) {
        let g = graph_metric(Arc::new(bump(5, c)));
        let jet = g.jet(&x, 2).unwrap();
        let b = CurvatureBundle::from_jet(&jet).unwrap();
        let o = riemann_lower(5, &jet.g, &jet.dg, &jet.d2g).unwrap();
        let scale = o.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        let diff = b.riemann_lo.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-10 * scale, "diff {diff:e} scale {scale:e}");
        prop_assert!(riemann_symmetry_residual(&b.riemann_lo, 5) <= 1e-9 * scale);
    }

    #[test]
    fn l2_three_ways(x in prop::collection::vec(-2.0f64..2.0, 6), c in -0.8f64..0.8) {
        let f = bump(6, c);
        let g = graph_metric(Arc::new(f.clone()));
        let b = riemann(&g, &x).unwrap();
        let rm2: f64 = b.riemann_lo.iter().zip(&b.riemann_hi).map(|(a, h)| a * h).sum();
        let scale = rm2.max(1e-300);
        let o = direct_l2(&g, &x).unwrap();
        prop_assert!((lovelock_l(&b, 2) - o).abs() <= 1e-9 * scale);
        prop_assert!((graph_l2(&f, &x).unwrap() - o).abs() <= 1e-9 * scale);
    }
}

#[test]
fn analytic_jets_match_finite_differences() {
    let cases: Vec<Box<dyn MetricField>> = vec![
        Box::new(schwarzschild_family(2, 6, 1.0, Chart::Conformal).unwrap()),
        Box::new(schwarzschild_family(1, 5, 1.0, Chart::Rho).unwrap()),
        Box::new(graph_metric(Arc::new(bump(5, 0.6)))),
    ];
    for g in &cases {
        let n = g.dim();
        let x: Vec<f64> = (0..n).map(|i| 1.5 + 0.3 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let jet = g.jet(&x, 3).unwrap();
        let (dg, d2g, d3g) = fd_metric_derivatives(g.as_ref(), &x, &FdConfig::default()).unwrap();
        let worst = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(worst(&dg, &jet.dg) < 1e-6, "{}", g.label());
        assert!(worst(&d2g, &jet.d2g) < 1e-4, "{}", g.label());
        let d3 = jet.d3g.as_ref().unwrap();
        assert!(worst(&d3g, d3) < 1e-2, "{}", g.label());
        // the library's own third-derivative differencing
        assert!(worst(&fd_third_derivatives(g.as_ref(), &x).unwrap(), d3) < 1e-5, "{}", g.label());
    }
}
