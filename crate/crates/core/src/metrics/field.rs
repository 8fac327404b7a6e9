use std::sync::Arc;

use rayon::prelude::*;

use super::jet::MetricJet;
use super::model::{JetSource, ModelMetric};
use crate::chart::{ddbar_stencil, hessian_matrix, wirtinger_stencil, ChartGrid, Direction, ScalarField};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

/// Where derivatives of a sampled metric come from.
#[derive(Debug, Clone)]
pub enum Provenance {
    /// Exact jets from a closed-form source.
    Analytic(Arc<dyn JetSource>),
    /// Derivatives by finite differences of the samples.
    FiniteDifference,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Analytic(_) => "analytic",
            Provenance::FiniteDifference => "finite_difference",
        }
    }
}

/// Coefficient matrices `g_{ij̄}` of a Kähler form at every chart point.
#[derive(Debug, Clone)]
pub struct HermitianMetricField {
    grid: Arc<ChartGrid>,
    dim: usize,
    coeffs: Vec<CMatrix>,
    provenance: Provenance,
}

const HERMITIAN_TOL: f64 = 1e-12;

fn check_point(grid: &ChartGrid, idx: usize, m: &CMatrix, require_pd: bool) -> Result<()> {
    let scale = m.iter().fold(1.0f64, |a, c| a.max(c.norm()));
    if linalg::hermitian_defect(m) > HERMITIAN_TOL * scale {
        return Err(Error::InvalidParameter {
            name: "metric".into(),
            reason: format!("coefficient matrix not Hermitian at point {idx}"),
        });
    }
    if require_pd && !linalg::is_positive_definite(m) {
        return Err(Error::NotPositiveDefinite {
            index: idx,
            radius: grid.divisor_distance(idx),
        });
    }
    Ok(())
}

impl HermitianMetricField {
    /// Samples a closed-form source; derivatives stay analytic.
    pub fn from_source(source: Arc<dyn JetSource>, grid: Arc<ChartGrid>, require_pd: bool) -> Result<Self> {
        if source.dim() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional metric on a {}-dimensional chart",
                source.dim(),
                grid.dim()
            )));
        }
        let coeffs = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let m = source
                    .jet(&grid.point(idx))
                    .map_err(|reason| Error::OutsideDomain { index: idx, reason })?
                    .g;
                check_point(&grid, idx, &m, require_pd)?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: source.dim(),
            grid,
            coeffs,
            provenance: Provenance::Analytic(source),
        })
    }

    pub fn from_model(model: &ModelMetric, grid: Arc<ChartGrid>) -> Result<Self> {
        model.validate()?;
        Self::from_source(Arc::new(model.clone()), grid, true)
    }

    /// Samples of a model whose derivatives will be taken by finite differences.
    pub fn sampled_model(model: &ModelMetric, grid: Arc<ChartGrid>) -> Result<Self> {
        let analytic = Self::from_model(model, grid)?;
        Ok(Self {
            provenance: Provenance::FiniteDifference,
            ..analytic
        })
    }

    /// Raw samples; derivatives by finite differences.
    pub fn from_samples(grid: Arc<ChartGrid>, coeffs: Vec<CMatrix>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for {} points",
                coeffs.len(),
                grid.len()
            )));
        }
        let dim = grid.dim();
        for (idx, m) in coeffs.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!("matrix at point {idx} is not {dim}x{dim}")));
            }
            check_point(&grid, idx, m, true)?;
        }
        Ok(Self {
            grid,
            dim,
            coeffs,
            provenance: Provenance::FiniteDifference,
        })
    }

    pub fn grid(&self) -> &Arc<ChartGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.provenance, Provenance::Analytic(_))
    }

    pub fn coeff(&self, idx: usize) -> &CMatrix {
        &self.coeffs[idx]
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn inverse(&self, idx: usize) -> Result<CMatrix> {
        linalg::inverse(&self.coeffs[idx]).ok_or(Error::Singular {
            index: idx,
            radius: self.grid.divisor_distance(idx),
        })
    }

    /// Jet at a grid point: exact for analytic provenance, stencils otherwise.
    pub fn jet_at(&self, idx: usize) -> Result<MetricJet> {
        match &self.provenance {
            Provenance::Analytic(src) => src
                .jet(&self.grid.point(idx))
                .map_err(|reason| Error::OutsideDomain { index: idx, reason }),
            Provenance::FiniteDifference => {
                let n = self.dim;
                let grid = &*self.grid;
                let dg = (0..n)
                    .map(|k| wirtinger_stencil(grid, idx, k, Direction::Z).apply(&self.coeffs))
                    .collect();
                let ddg = (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|l| ddbar_stencil(grid, idx, k, l).apply(&self.coeffs))
                            .collect()
                    })
                    .collect();
                Ok(MetricJet {
                    g: self.coeffs[idx].clone(),
                    dg,
                    ddg,
                    ric: None,
                })
            }
        }
    }
}

/// `ω = ω₀ + ∂∂̄φ` with `∂∂̄φ` by finite differences on the chart of `phi`.
///
/// Fails with the first point where the result is not positive definite.
pub fn metric_from_potential(omega0: &ModelMetric, phi: &ScalarField) -> Result<HermitianMetricField> {
    omega0.validate()?;
    let grid = phi.grid().clone();
    if omega0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional base on a {}-dimensional chart",
            omega0.dim(),
            grid.dim()
        )));
    }
    let values = phi.values();
    let coeffs = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g0 = omega0
                .coefficient(&grid.point(idx))
                .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
            let h = hessian_matrix(&grid, values, idx);
            Ok(linalg::hermitian_part(&(g0 + h)))
        })
        .collect::<Result<Vec<_>>>()?;
    HermitianMetricField::from_samples(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::LogPolarGrid;
    use crate::metrics::Potential;
    use num_complex::Complex64;

    fn chart() -> Arc<ChartGrid> {
        Arc::new(ChartGrid::single(LogPolarGrid::annulus(1e-3, 0.5, 128, 16).unwrap()).unwrap())
    }

    #[test]
    fn zero_potential_returns_base_exactly() {
        let g = chart();
        let phi = ScalarField::constant(g.clone(), Complex64::new(0.0, 0.0));
        let base = ModelMetric::hyperbolic_cone(0.5);
        let m = metric_from_potential(&base, &phi).unwrap();
        let a = HermitianMetricField::from_model(&base, g).unwrap();
        assert_eq!(m.coeffs(), a.coeffs());
    }

    #[test]
    fn quadratic_potential_shifts_flat_metric() {
        let g = chart();
        let delta = 0.25;
        let phi = ScalarField::from_real_fn(g.clone(), |p| delta * p[0].radius().powi(2));
        let m = metric_from_potential(&ModelMetric::euclidean(1), &phi).unwrap();
        for idx in 0..g.len() {
            if g.is_interior(idx) {
                assert!((m.coeff(idx)[(0, 0)].re - 1.25).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn typical_cone_potential_matches_symbolic_hessian() {
        // ω₀ + δ ∂∂̄|z|^β with ∂∂̄|z|^β = (β²/4)|z|^{β-2}
        let g = chart();
        let (beta, delta) = (0.5, 0.1);
        let pot = Potential::RadialPower { delta, power: beta };
        let phi = pot.sample(g.clone(), 0);
        let m = metric_from_potential(&ModelMetric::euclidean(1), &phi).unwrap();
        for idx in 0..g.len() {
            if g.is_interior(idx) {
                let r = g.divisor_distance(idx);
                let exact = 1.0 + delta * beta * beta / 4.0 * r.powf(beta - 2.0);
                assert!((m.coeff(idx)[(0, 0)].re / exact - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn loss_of_positivity_names_the_point() {
        let g = chart();
        let phi = ScalarField::from_real_fn(g, |p| -2.0 * p[0].radius().powi(2));
        match metric_from_potential(&ModelMetric::euclidean(1), &phi) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected positivity failure, got {other:?}"),
        }
    }
}
