use lovelock_mass::mass::{
    adm_mass, extrapolate_limit, gbc_flux, gbc_mass, mass, FluxSeries, Integrand, MassConfig, RadiusSchedule,
};
use lovelock_mass::metrics::{euclidean, schwarzschild_family, Chart};
use lovelock_mass::quadrature::sphere_rule;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extrapolation_recovers_power_laws(m in -3.0f64..3.0, a in -2.0f64..2.0, s in 0.5f64..3.0) {
        let radii: Vec<f64> = (0..6).map(|j| 20.0 * 2f64.powi(j)).collect();
        let flux = radii.iter().map(|r| m + a * r.powf(-s)).collect();
        let est = extrapolate_limit(&FluxSeries::new(radii, flux, "synthetic").with_hint(s)).unwrap();
        prop_assert!((est.value - m).abs() < 1e-9 * (1.0 + m.abs()), "{} vs {m}", est.value);
    }

    #[test]
    fn extrapolation_is_linear_in_the_series(m in -3.0f64..3.0, a in -2.0f64..2.0, k in 0.1f64..4.0) {
        let radii: Vec<f64> = (0..5).map(|j| 30.0 * 2f64.powi(j)).collect();
        let flux: Vec<f64> = radii.iter().map(|r| m + a / r + 0.3 * a / (r * r)).collect();
        let scaled: Vec<f64> = flux.iter().map(|v| k * v).collect();
        let e1 = extrapolate_limit(&FluxSeries::new(radii.clone(), flux, "a").with_hint(1.0)).unwrap();
        let e2 = extrapolate_limit(&FluxSeries::new(radii, scaled, "b").with_hint(1.0)).unwrap();
        prop_assert!((e2.value - k * e1.value).abs() < 1e-9 * (1.0 + (k * e1.value).abs()));
    }
}

#[test]
fn too_few_samples_rejected() {
    let s = FluxSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0], "x");
    assert!(extrapolate_limit(&s).is_err());
}

#[test]
fn adm_mass_of_rho_chart() {
    for (n, m) in [(5, 1.0), (6, 0.5)] {
        let g = schwarzschild_family(1, n, m, Chart::Rho).unwrap();
        let est = adm_mass(&g, &MassConfig::default().with_level(4)).unwrap();
        assert!((est.value - m).abs() < 1e-6, "n={n}: {}", est.value);
    }
}

#[test]
fn gbc_mass_scales_as_m_squared() {
    let cfg = MassConfig::default().with_level(4);
    let a = gbc_mass(&schwarzschild_family(2, 6, 0.5, Chart::Conformal).unwrap(), &cfg).unwrap().value;
    let b = gbc_mass(&schwarzschild_family(2, 6, 1.5, Chart::Conformal).unwrap(), &cfg).unwrap().value;
    assert!((a - 0.25).abs() < 1e-4 && (b - 2.25).abs() < 1e-3, "{a} {b}");
}

#[test]
fn flat_space_has_zero_flux() {
    let rule = sphere_rule(5, 4).unwrap();
    assert_eq!(gbc_flux(&euclidean(5), 20.0, &rule).unwrap(), 0.0);
    let cfg = MassConfig { schedule: RadiusSchedule::Geometric { r0: 10.0, ratio: 2.0, count: 4 }, ..MassConfig::default() };
    assert_eq!(mass(&euclidean(6), Integrand::Lovelock(2), &cfg).unwrap().value, 0.0);
}

#[test]
fn gbc_undefined_below_dimension_four() {
    let cfg = MassConfig::default();
    assert!(mass(&euclidean(3), Integrand::Gbc, &cfg).is_err());
    assert!(mass(&euclidean(6), Integrand::Lovelock(3), &cfg).is_err());
}
