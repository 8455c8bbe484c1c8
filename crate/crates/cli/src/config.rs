//! Run configuration: one JSON document, with command-line flags layered on
//! top.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub mass: MassSpec,
    pub quad_level: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
    pub seed: Option<u64>,
    pub horizon: Option<HorizonSpec>,
    pub suite: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub family: Option<String>,
    #[serde(default)]
    pub params: MetricParams,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricParams {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub chart: Option<String>,
    /// Seed for the `random-graph` family.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MassSpec {
    pub k: Option<usize>,
    /// `gbc`, `adm`, `mk` or `egb`.
    #[serde(rename = "as")]
    pub as_: Option<String>,
    pub radii: Option<Vec<f64>>,
    pub r0: Option<f64>,
    pub ratio: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub json_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

/// A closed hypersurface for Penrose reports.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum HorizonSpec {
    Sphere {
        rho: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Ellipsoid {
        axes: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the invariants that serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(level) = self.quad_level {
            if level < 2 {
                return Err(CliError::Config(format!("quad_level: must be at least 2, got {level}")));
            }
        }
        if let Some(r) = &self.mass.radii {
            if r.is_empty() || r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(CliError::Config("mass.radii: radii must be finite and positive".into()));
            }
            if r.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config("mass.radii: radii must be strictly increasing".into()));
            }
        }
        if let Some(r0) = self.mass.r0 {
            if !(r0.is_finite() && r0 > 0.0) {
                return Err(CliError::Config(format!("mass.r0: must be positive, got {r0}")));
            }
        }
        if let Some(q) = self.mass.ratio {
            if !(q.is_finite() && q > 1.0) {
                return Err(CliError::Config(format!("mass.ratio: must exceed 1, got {q}")));
            }
        }
        if let Some(n) = self.metric.params.n {
            if n > 8 {
                return Err(CliError::Config(format!(
                    "metric.params.n: dimension {n} exceeds 8, the largest supported by product quadrature"
                )));
            }
        }
        Ok(())
    }
}

/// Parses `a,b,c` into radii.
pub fn parse_radii(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("--radii: cannot parse {t:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"metric": {"family": "euclidean", "colour": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"quadlevel": 3}"#).is_err());
    }

    #[test]
    fn full_document() {
        let c = RunConfig::from_json(
            r#"{"metric": {"family": "schwarzschild", "params": {"n": 6, "k": 2, "m": 1.0}},
                "mass": {"k": 2, "radii": [20, 40, 80, 160]}, "quad_level": 4, "seed": 3,
                "horizon": {"kind": "ellipsoid", "axes": [2, 1, 1, 1, 1]}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.metric.params.n, Some(6));
        assert!(matches!(c.horizon, Some(HorizonSpec::Ellipsoid { .. })));
    }

    #[test]
    fn decreasing_radii_rejected() {
        let c = RunConfig::from_json(r#"{"mass": {"radii": [40, 20]}}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
