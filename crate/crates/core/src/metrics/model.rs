//! Closed-form model metrics with analytic derivative oracles.
//!
//! Every one-dimensional model is radial in its coordinate, so its
//! coefficient is a function `g(ρ)` of `ρ = log|z|`. Derivatives in `z`
//! follow from `∂_z g = g_ρ / (2z)` and `∂_z∂_z̄ g = e^{-2ρ} g_ρρ / 4`, and
//! the Ricci form from `Ric = -e^{-2ρ} (log g)_ρρ / 4`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jet::MetricJet;
use crate::chart::{ChartGrid, PolarPoint, ScalarField};
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Domain failures carry only a reason; callers attach the grid index.
pub type DomainResult<T> = std::result::Result<T, String>;

/// Anything that can produce exact metric jets at a chart point.
pub trait JetSource: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, point: &[PolarPoint]) -> DomainResult<MetricJet>;
}

/// Kähler potential added to a base metric, `ω = ω₀ + ∂∂̄φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `φ = δ |z|^p`.
    RadialPower { delta: f64, power: f64 },
}

impl Potential {
    pub fn value(&self, p: PolarPoint) -> f64 {
        match *self {
            Potential::RadialPower { delta, power } => delta * (power * p.rho).exp(),
        }
    }

    /// `∂∂̄φ` and its first two ρ-derivatives. For `φ = δ r^p` this is
    /// `δ (p/2)² r^{p-2}`.
    fn ddbar_radial(&self, rho: f64) -> (f64, f64, f64) {
        match *self {
            Potential::RadialPower { delta, power } => {
                let q = power - 2.0;
                let t = delta * 0.25 * power * power * (q * rho).exp();
                (t, q * t, q * q * t)
            }
        }
    }

    pub fn ddbar(&self, p: PolarPoint) -> f64 {
        self.ddbar_radial(p.rho).0
    }

    /// Samples `φ` in coordinate `axis` over a chart.
    pub fn sample(&self, grid: std::sync::Arc<ChartGrid>, axis: usize) -> ScalarField {
        ScalarField::from_real_fn(grid, |p| self.value(p[axis]))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Potential::RadialPower { delta, power } => {
                if !delta.is_finite() || !power.is_finite() {
                    return Err(Error::param("potential", "coefficients must be finite"));
                }
                Ok(())
            }
        }
    }
}

/// Closed-form metric descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelMetric {
    /// Flat `δ_{ij̄}`.
    Euclidean { dim: usize },
    /// Flat cone `β² |z|^{2(β-1)}`.
    StandardCone { beta: f64 },
    /// Poincaré disk `c / (1 - |z|²)²`.
    Poincare { scale: f64 },
    /// `β² |z|^{2(β-1)} / (1 - |z|^{2β})²`, the pullback of the Poincaré
    /// disk under `z ↦ z^β`.
    HyperbolicCone { beta: f64 },
    /// Block-diagonal product, one block per factor.
    Product { factors: Vec<ModelMetric> },
    /// One-dimensional base plus `∂∂̄φ`.
    Perturbed {
        base: Box<ModelMetric>,
        potential: Potential,
    },
}

/// Value, `∂_z`, `∂_z∂_z̄` of a one-dimensional coefficient and its Ricci form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    pub g: f64,
    pub dz: Complex64,
    pub ddbar: f64,
    pub ric: f64,
}

/// `(g, g_ρ, g_ρρ, (log g)_ρρ)`.
#[derive(Debug, Clone, Copy)]
struct Radial {
    g: f64,
    g_r: f64,
    g_rr: f64,
    logg_rr: f64,
}

impl Radial {
    fn at(self, p: PolarPoint) -> Jet1 {
        let inv_r = (-p.rho).exp();
        Jet1 {
            g: self.g,
            dz: p.inv_phase() * (0.5 * self.g_r * inv_r),
            ddbar: 0.25 * inv_r * inv_r * self.g_rr,
            ric: -0.25 * inv_r * inv_r * self.logg_rr,
        }
    }
}

impl ModelMetric {
    pub fn euclidean(dim: usize) -> Self {
        ModelMetric::Euclidean { dim }
    }

    pub fn standard_cone(beta: f64) -> Self {
        ModelMetric::StandardCone { beta }
    }

    pub fn poincare() -> Self {
        ModelMetric::Poincare { scale: 1.0 }
    }

    pub fn hyperbolic_cone(beta: f64) -> Self {
        ModelMetric::HyperbolicCone { beta }
    }

    pub fn product(factors: Vec<ModelMetric>) -> Self {
        ModelMetric::Product { factors }
    }

    pub fn perturbed(base: ModelMetric, potential: Potential) -> Self {
        ModelMetric::Perturbed {
            base: Box::new(base),
            potential,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelMetric::Euclidean { dim } => *dim,
            ModelMetric::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cone = |beta: f64| {
            if beta > 0.0 && beta < 1.0 {
                Ok(())
            } else {
                Err(Error::param("beta", format!("cone angle must lie in (0,1), got {beta}")))
            }
        };
        match self {
            ModelMetric::Euclidean { dim } => {
                if *dim == 0 {
                    return Err(Error::param("dim", "must be positive"));
                }
                Ok(())
            }
            ModelMetric::StandardCone { beta } | ModelMetric::HyperbolicCone { beta } => cone(*beta),
            ModelMetric::Poincare { scale } => {
                if scale.is_finite() && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("scale", format!("must be positive, got {scale}")))
                }
            }
            ModelMetric::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::param("factors", "product needs at least one factor"));
                }
                factors.iter().try_for_each(|f| f.validate())
            }
            ModelMetric::Perturbed { base, potential } => {
                base.validate()?;
                if base.dim() != 1 {
                    return Err(Error::param("base", "perturbed base must be one-dimensional"));
                }
                potential.validate()
            }
        }
    }

    /// Cone angle of the divisor coordinate, when the model has one.
    pub fn cone_angle(&self) -> Option<f64> {
        match self {
            ModelMetric::StandardCone { beta } | ModelMetric::HyperbolicCone { beta } => Some(*beta),
            ModelMetric::Product { factors } => factors.first().and_then(|f| f.cone_angle()),
            ModelMetric::Perturbed { base, .. } => base.cone_angle(),
            _ => None,
        }
    }

    /// True for models defined only inside the unit disk.
    pub fn is_disk_model(&self) -> bool {
        matches!(self, ModelMetric::Poincare { .. } | ModelMetric::HyperbolicCone { .. })
    }

    /// One-dimensional factors in coordinate order.
    pub fn atoms(&self) -> Vec<ModelMetric> {
        match self {
            ModelMetric::Euclidean { dim } => vec![ModelMetric::Euclidean { dim: 1 }; *dim],
            ModelMetric::Product { factors } => factors.iter().flat_map(|f| f.atoms()).collect(),
            other => vec![other.clone()],
        }
    }

    fn radial(&self, p: PolarPoint) -> DomainResult<Radial> {
        let t = p.radius();
        match self {
            ModelMetric::Euclidean { .. } => Ok(Radial {
                g: 1.0,
                g_r: 0.0,
                g_rr: 0.0,
                logg_rr: 0.0,
            }),
            ModelMetric::StandardCone { beta } => {
                if !p.rho.is_finite() {
                    return Err("cone metric evaluated at the cone point".into());
                }
                let b1 = beta - 1.0;
                let g = beta * beta * (2.0 * b1 * p.rho).exp();
                Ok(Radial {
                    g,
                    g_r: 2.0 * b1 * g,
                    g_rr: 4.0 * b1 * b1 * g,
                    logg_rr: 0.0,
                })
            }
            ModelMetric::Poincare { scale } => {
                if !(t < 1.0) {
                    return Err(format!("|z| = {t} outside the unit disk"));
                }
                let s = (2.0 * p.rho).exp();
                let one = 1.0 - s;
                let g = scale / (one * one);
                let l1 = 4.0 * s / one;
                let l2 = 8.0 * s / (one * one);
                Ok(Radial {
                    g,
                    g_r: g * l1,
                    g_rr: g * (l2 + l1 * l1),
                    logg_rr: l2,
                })
            }
            ModelMetric::HyperbolicCone { beta } => {
                if !p.rho.is_finite() {
                    return Err("cone metric evaluated at the cone point".into());
                }
                if !(t < 1.0) {
                    return Err(format!("|z| = {t} outside the unit disk"));
                }
                let s = (2.0 * beta * p.rho).exp();
                let one = 1.0 - s;
                let g = beta * beta * (2.0 * (beta - 1.0) * p.rho).exp() / (one * one);
                let l1 = 2.0 * (beta - 1.0) + 4.0 * beta * s / one;
                let l2 = 8.0 * beta * beta * s / (one * one);
                Ok(Radial {
                    g,
                    g_r: g * l1,
                    g_rr: g * (l2 + l1 * l1),
                    logg_rr: l2,
                })
            }
            ModelMetric::Perturbed { base, potential } => {
                if !p.rho.is_finite() {
                    return Err("radial potential evaluated at the origin".into());
                }
                let b = base.radial(p)?;
                let (t0, t1, t2) = potential.ddbar_radial(p.rho);
                let g = b.g + t0;
                let g_r = b.g_r + t1;
                let g_rr = b.g_rr + t2;
                Ok(Radial {
                    g,
                    g_r,
                    g_rr,
                    logg_rr: g_rr / g - (g_r / g) * (g_r / g),
                })
            }
            ModelMetric::Product { factors } if factors.len() == 1 => factors[0].radial(p),
            _ => Err("radial jet requested from a multi-dimensional model".into()),
        }
    }

    /// One-dimensional jet at a point.
    pub fn jet1(&self, p: PolarPoint) -> DomainResult<Jet1> {
        match self {
            // Poincaré is smooth at the origin; use the z-form there.
            ModelMetric::Poincare { scale } => {
                let z = p.z();
                let t2 = z.norm_sqr();
                if !(t2 < 1.0) {
                    return Err(format!("|z| = {} outside the unit disk", t2.sqrt()));
                }
                let one = 1.0 - t2;
                Ok(Jet1 {
                    g: scale / (one * one),
                    dz: z.conj() * (2.0 * scale / (one * one * one)),
                    ddbar: 2.0 * scale * (1.0 + 2.0 * t2) / (one * one * one * one),
                    ric: -2.0 / (one * one),
                })
            }
            ModelMetric::Euclidean { .. } => Ok(Jet1 {
                g: 1.0,
                dz: Complex64::new(0.0, 0.0),
                ddbar: 0.0,
                ric: 0.0,
            }),
            other => Ok(other.radial(p)?.at(p)),
        }
    }

    /// Coefficient matrix at a point.
    pub fn coefficient(&self, point: &[PolarPoint]) -> DomainResult<CMatrix> {
        Ok(self.jet(point)?.g)
    }
}

impl JetSource for ModelMetric {
    fn dim(&self) -> usize {
        ModelMetric::dim(self)
    }

    fn jet(&self, point: &[PolarPoint]) -> DomainResult<MetricJet> {
        let atoms = self.atoms();
        if point.len() != atoms.len() {
            return Err(format!(
                "{}-dimensional model evaluated at a {}-dimensional point",
                atoms.len(),
                point.len()
            ));
        }
        let jets = atoms
            .iter()
            .zip(point)
            .map(|(a, &p)| a.jet1(p))
            .collect::<DomainResult<Vec<_>>>()?;
        Ok(MetricJet::block_diagonal(&jets))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(r: f64, theta: f64) -> PolarPoint {
        PolarPoint::new(r.ln(), theta)
    }

    #[test]
    fn standard_cone_coefficient_matches_closed_form() {
        let beta: f64 = 0.3;
        let p = at(0.02, 1.0);
        let j = ModelMetric::standard_cone(beta).jet1(p).unwrap();
        let expected = beta * beta * 0.02f64.powf(2.0 * (beta - 1.0));
        assert!((j.g / expected - 1.0).abs() < 1e-13);
        assert_eq!(j.ric, 0.0);
    }

    #[test]
    fn poincare_radial_and_z_forms_agree() {
        let p = at(0.4, 0.7);
        let z = ModelMetric::poincare().jet1(p).unwrap();
        let r = ModelMetric::poincare().radial(p).unwrap().at(p);
        assert!((z.g - r.g).abs() < 1e-12);
        assert!((z.dz - r.dz).norm() < 1e-12);
        assert!((z.ddbar - r.ddbar).abs() < 1e-11);
        assert!((z.ric - r.ric).abs() < 1e-11);
        assert!((z.ric + 2.0 * z.g).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_cone_has_ricci_minus_two_g() {
        for &beta in &[0.2, 0.5, 0.9] {
            for &r in &[1e-4, 0.1, 0.5, 0.95] {
                let j = ModelMetric::hyperbolic_cone(beta).jet1(at(r, 0.3)).unwrap();
                assert!((j.ric / j.g + 2.0).abs() < 1e-10, "beta={beta} r={r}");
            }
        }
    }

    #[test]
    fn disk_models_reject_outside_points() {
        assert!(ModelMetric::poincare().jet1(at(1.0, 0.0)).is_err());
        assert!(ModelMetric::hyperbolic_cone(0.5).jet1(at(1.2, 0.0)).is_err());
    }

    #[test]
    fn validation() {
        assert!(ModelMetric::standard_cone(1.5).validate().is_err());
        assert!(ModelMetric::hyperbolic_cone(0.0).validate().is_err());
        assert!(ModelMetric::product(vec![]).validate().is_err());
        assert!(ModelMetric::perturbed(
            ModelMetric::euclidean(2),
            Potential::RadialPower { delta: 0.1, power: 2.0 }
        )
        .validate()
        .is_err());
        assert!(ModelMetric::product(vec![ModelMetric::hyperbolic_cone(0.5), ModelMetric::poincare()])
            .validate()
            .is_ok());
    }

    #[test]
    fn potential_ddbar_closed_form() {
        // ∂∂̄ |z|^β = (β²/4) |z|^{β-2}
        let beta: f64 = 0.5;
        let pot = Potential::RadialPower { delta: 1.0, power: beta };
        let p = at(0.3, 0.0);
        let expected = beta * beta / 4.0 * 0.3f64.powf(beta - 2.0);
        assert!((pot.ddbar(p) / expected - 1.0).abs() < 1e-13);
    }

    #[test]
    fn product_atoms_flatten() {
        let m = ModelMetric::product(vec![
            ModelMetric::euclidean(2),
            ModelMetric::product(vec![ModelMetric::poincare()]),
        ]);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.atoms().len(), 3);
    }
}
