use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chart::LogPolarGrid;
use crate::cone::{HermitianWeight, HolderParams};
use crate::maps::HolomorphicMapModel;
use crate::metrics::ModelMetric;
use crate::{Error, Result};

/// Checks a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    CertifyVolume,
    CertifyTrace,
    ChernLuVolume,
    ChernLuTrace,
    TheoremVolume,
    TheoremTrace,
    SingularSlope,
    BarrierBound,
    AuxiliaryRoot,
    Jeffres,
}

impl Check {
    pub fn needs_map(self) -> bool {
        !matches!(self, Check::BarrierBound | Check::Jeffres)
    }

    pub fn is_certification(self) -> bool {
        matches!(self, Check::CertifyVolume | Check::CertifyTrace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceChoice {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub metric: ModelMetric,
    /// Cone angle `α`; defaults to the metric's own angle, or 1 when smooth.
    pub angle: Option<f64>,
    #[serde(default)]
    pub provenance: ProvenanceChoice,
    /// Hermitian weight `ψ` of the divisor line bundle.
    #[serde(default = "flat_weight")]
    pub weight: HermitianWeight,
}

fn flat_weight() -> HermitianWeight {
    HermitianWeight::Flat
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub metric: ModelMetric,
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    pub gamma: f64,
    /// Hölder exponent `α_H` of the test family.
    pub holder_alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_analytic_tol")]
    pub analytic: f64,
    #[serde(default = "default_fd_tol")]
    pub finite_difference: f64,
}

fn default_analytic_tol() -> f64 {
    1e-6
}

fn default_fd_tol() -> f64 {
    1e-3
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            analytic: default_analytic_tol(),
            finite_difference: default_fd_tol(),
        }
    }
}

/// One scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub checks: Vec<Check>,
    pub source: SourceConfig,
    pub target: Option<TargetConfig>,
    pub map: Option<HolomorphicMapModel>,
    pub grid: Vec<GridConfig>,
    pub barrier: Option<BarrierConfig>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    pub out: Option<PathBuf>,
}

fn check_angle(field: &str, angle: Option<f64>, metric: &ModelMetric) -> Result<f64> {
    if let Some(a) = angle {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config(field, format!("angle must lie in (0,1), got {a}")));
        }
        if let Some(b) = metric.cone_angle() {
            if (a - b).abs() > 1e-12 {
                return Err(Error::config(field, format!("angle {a} disagrees with the metric's cone angle {b}")));
            }
        }
    }
    Ok(angle.or(metric.cone_angle()).unwrap_or(1.0))
}

fn model_error(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(&format!("{field}.{name}"), reason),
        other => Error::config(field, other.to_string()),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config("scenario", msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Source cone angle `α` (1 when smooth).
    pub fn alpha(&self) -> f64 {
        self.source.angle.or(self.source.metric.cone_angle()).unwrap_or(1.0)
    }

    /// Target cone angle `β` (1 when smooth).
    pub fn beta(&self) -> f64 {
        self.target
            .as_ref()
            .map_or(1.0, |t| t.angle.or(t.metric.cone_angle()).unwrap_or(1.0))
    }

    pub fn k(&self) -> u32 {
        self.map.as_ref().map_or(1, |m| m.divisor_order())
    }

    pub fn log_polar_grids(&self) -> Result<Vec<LogPolarGrid>> {
        self.grid
            .iter()
            .enumerate()
            .map(|(i, g)| {
                LogPolarGrid::new(g.rho_min, g.rho_max, g.n_rho, g.n_theta).map_err(|e| {
                    let reason = match e {
                        Error::InvalidGrid(r) => r,
                        other => other.to_string(),
                    };
                    Error::config(&format!("grid[{i}]"), reason)
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::config("id", "must be nonempty and use only [A-Za-z0-9_-]"));
        }
        if self.checks.is_empty() {
            return Err(Error::config("checks", "at least one check is required"));
        }
        self.source.metric.validate().map_err(|e| model_error("source.metric", e))?;
        check_angle("source.angle", self.source.angle, &self.source.metric)?;
        if let HermitianWeight::Quadratic { c } = self.source.weight {
            if !c.is_finite() {
                return Err(Error::config("source.weight.c", "must be finite"));
            }
        }
        let n = self.source.metric.dim();
        if self.grid.len() != n {
            return Err(Error::config(
                "grid",
                format!("need one grid per source coordinate ({n}), got {}", self.grid.len()),
            ));
        }
        self.log_polar_grids()?;

        if self.checks.iter().any(|c| c.needs_map()) {
            let target = self
                .target
                .as_ref()
                .ok_or_else(|| Error::config("target", "required by the requested checks"))?;
            target.metric.validate().map_err(|e| model_error("target.metric", e))?;
            check_angle("target.angle", target.angle, &target.metric)?;
            let map = self
                .map
                .as_ref()
                .ok_or_else(|| Error::config("map", "required by the requested checks"))?;
            map.validate().map_err(|e| model_error("map", e))?;
            if map.dim() != n || target.metric.dim() != n {
                return Err(Error::config(
                    "map",
                    format!(
                        "source, map and target dimensions differ ({n}, {}, {})",
                        map.dim(),
                        target.metric.dim()
                    ),
                ));
            }
        }

        let needs_barrier = self
            .checks
            .iter()
            .any(|c| matches!(c, Check::Jeffres | Check::BarrierBound | Check::AuxiliaryRoot));
        if needs_barrier {
            let b = self
                .barrier
                .as_ref()
                .ok_or_else(|| Error::config("barrier", "required by the requested checks"))?;
            if !(b.gamma > 0.0) || !b.gamma.is_finite() {
                return Err(Error::config("barrier.gamma", format!("must be positive, got {}", b.gamma)));
            }
            if let Some(e) = b.epsilon.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
                return Err(Error::config("barrier.epsilon", format!("must be finite and nonnegative, got {e}")));
            }
            if self.checks.contains(&Check::Jeffres) {
                if b.epsilon.is_empty() {
                    return Err(Error::config("barrier.epsilon", "Jeffres scenarios need a nonempty sweep"));
                }
                let alpha_h = b
                    .holder_alpha
                    .ok_or_else(|| Error::config("barrier.holder_alpha", "required by the jeffres check"))?;
                HolderParams::new(alpha_h, self.alpha()).map_err(|e| model_error("barrier", e))?;
            }
            if self.checks.contains(&Check::AuxiliaryRoot) && b.epsilon.is_empty() {
                return Err(Error::config("barrier.epsilon", "auxiliary_root needs epsilon values"));
            }
        }
        for (name, t) in [
            ("tolerance.analytic", self.tolerance.analytic),
            ("tolerance.finite_difference", self.tolerance.finite_difference),
        ] {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config(name, format!("must be finite and nonnegative, got {t}")));
            }
        }
        Ok(())
    }
}

/// Scenarios shipped with the crate: `(id, TOML text)`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("identity-poincare", include_str!("../../scenarios/identity-poincare.toml")),
    ("power2-hypcone-a", include_str!("../../scenarios/power2-hypcone-a.toml")),
    ("hypcone-equality", include_str!("../../scenarios/hypcone-equality.toml")),
    ("hypcone-a-third", include_str!("../../scenarios/hypcone-a-third.toml")),
    ("hypcone-b", include_str!("../../scenarios/hypcone-b.toml")),
    ("hypcone-fd", include_str!("../../scenarios/hypcone-fd.toml")),
    ("product-2d", include_str!("../../scenarios/product-2d.toml")),
    ("barrier-curved", include_str!("../../scenarios/barrier-curved.toml")),
    ("jeffres-barrier", include_str!("../../scenarios/jeffres-barrier.toml")),
    ("jeffres-counter", include_str!("../../scenarios/jeffres-counter.toml")),
];

/// Parses a bundled scenario by id.
pub fn bundled(id: &str) -> Option<Result<ScenarioConfig>> {
    BUNDLED
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| ScenarioConfig::from_toml_str(text))
}

/// Dotted-path aliases accepted by sweeps.
fn sweep_path(parameter: &str) -> &str {
    match parameter {
        "epsilon" => "barrier.epsilon",
        "gamma" => "barrier.gamma",
        "k" => "map.k",
        "holder_alpha" => "barrier.holder_alpha",
        other => other,
    }
}

/// Copy of a scenario with one parameter replaced, addressed by a dotted
/// path into the TOML document (`map.k`, `barrier.gamma`, `grid.0.n_rho`)
/// or an alias (`epsilon`, `gamma`, `k`, `holder_alpha`). Array-valued
/// parameters become one-element arrays.
pub fn with_parameter(config: &ScenarioConfig, parameter: &str, value: f64) -> Result<ScenarioConfig> {
    let path = sweep_path(parameter);
    let mut doc = toml::Value::try_from(config).map_err(|e| Error::config("scenario", e.to_string()))?;
    let mut slot = &mut doc;
    for part in path.split('.') {
        slot = match slot {
            toml::Value::Table(t) => t
                .get_mut(part)
                .ok_or_else(|| Error::config(parameter, format!("no field `{part}` in the scenario")))?,
            toml::Value::Array(a) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| Error::config(parameter, format!("`{part}` is not an array index")))?;
                a.get_mut(i)
                    .ok_or_else(|| Error::config(parameter, format!("index {i} out of range")))?
            }
            _ => return Err(Error::config(parameter, format!("cannot descend into `{part}`"))),
        };
    }
    *slot = match slot {
        toml::Value::Integer(_) => {
            if value.fract() != 0.0 {
                return Err(Error::config(parameter, format!("integer parameter got {value}")));
            }
            toml::Value::Integer(value as i64)
        }
        toml::Value::Array(_) => toml::Value::Array(vec![toml::Value::Float(value)]),
        _ => toml::Value::Float(value),
    };
    let cfg: ScenarioConfig = doc.try_into().map_err(|e: toml::de::Error| Error::config(parameter, e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_parses() {
        for (id, text) in BUNDLED {
            let cfg = ScenarioConfig::from_toml_str(text).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(&cfg.id, id);
        }
    }

    #[test]
    fn bad_angle_names_the_field() {
        let (_, text) = BUNDLED[0];
        let bad = text.replace("[source]", "[source]\nangle = 1.5");
        match ScenarioConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "source.angle"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parameter_substitution() {
        let cfg = bundled("power2-hypcone-a").unwrap().unwrap();
        let k3 = with_parameter(&cfg, "k", 3.0).unwrap();
        assert_eq!(k3.k(), 3);
        assert!(with_parameter(&cfg, "k", 2.5).is_err());
        assert!(with_parameter(&cfg, "nonexistent", 1.0).is_err());
    }
}
