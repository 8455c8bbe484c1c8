use lovelock_mass_cli::config::{parse_radii, RunConfig};
use proptest::prelude::*;

fn radii_doc(r: &[f64]) -> String {
    let list: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
    format!(r#"{{"mass": {{"radii": [{}]}}}}"#, list.join(","))
}

proptest! {
    #[test]
    fn radii_round_trip(r in prop::collection::vec(1e-3f64..1e6, 1..8)) {
        let text: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        let parsed = parse_radii(&text.join(", ")).unwrap();
        prop_assert_eq!(parsed, r);
    }

    #[test]
    fn increasing_radii_validate(start in 0.1f64..100.0, steps in prop::collection::vec(1e-3f64..10.0, 0..6)) {
        let mut r = vec![start];
        for s in steps {
            let last = *r.last().unwrap();
            r.push(last * (1.0 + s));
        }
        let cfg = RunConfig::from_json(&radii_doc(&r)).unwrap();
        prop_assert!(cfg.validate().is_ok());
        if r.len() > 1 {
            r.swap(0, 1);
            let cfg = RunConfig::from_json(&radii_doc(&r)).unwrap();
            prop_assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn quad_level_threshold(level in 0u32..12) {
        let cfg = RunConfig::from_json(&format!(r#"{{"quad_level": {level}}}"#)).unwrap();
        prop_assert_eq!(cfg.validate().is_ok(), level >= 2);
    }
}
