use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{HermitianMetricField, Provenance};
use super::jet::MetricJet;
use crate::chart::{hessian_matrix, Rank, ScalarField, TensorField};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

fn log_det_samples(g: &HermitianMetricField) -> Vec<Complex64> {
    g.coeffs()
        .par_iter()
        .map(|m| Complex64::new(linalg::det_real(m).ln(), 0.0))
        .collect()
}

fn ricci_matrices(g: &HermitianMetricField) -> Result<Vec<CMatrix>> {
    let grid = g.grid();
    match g.provenance() {
        Provenance::Analytic(_) => (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let ginv = g.inverse(idx)?;
                Ok(g.jet_at(idx)?.ricci(&ginv))
            })
            .collect(),
        Provenance::FiniteDifference => {
            let logdet = log_det_samples(g);
            (0..grid.len())
                .into_par_iter()
                .map(|idx| {
                    g.inverse(idx)?;
                    Ok(linalg::hermitian_part(&-hessian_matrix(grid, &logdet, idx)))
                })
                .collect()
        }
    }
}

/// `Ric_{ij̄} = -∂_i∂_j̄ log det g`.
pub fn ricci(g: &HermitianMetricField) -> Result<TensorField> {
    TensorField::from_matrices(g.grid().clone(), &ricci_matrices(g)?)
}

/// `R = g^{ij̄} Ric_{ij̄}`.
pub fn scalar_curvature(g: &HermitianMetricField) -> Result<ScalarField> {
    let ric = ricci_matrices(g)?;
    let values = (0..g.grid().len())
        .into_par_iter()
        .map(|idx| Ok(Complex64::new(linalg::trace_product(&g.inverse(idx)?, &ric[idx]).re, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(g.grid().clone(), values)
}

/// Full `R_{ij̄kl̄}` per point.
pub fn curvature_tensor(g: &HermitianMetricField) -> Result<TensorField> {
    let per_point = (0..g.grid().len())
        .into_par_iter()
        .map(|idx| {
            let ginv = g.inverse(idx)?;
            Ok(g.jet_at(idx)?.curvature(&ginv))
        })
        .collect::<Result<Vec<_>>>()?;
    TensorField::new(
        g.grid().clone(),
        g.dim(),
        Rank::TWO_TWO,
        per_point.into_iter().flatten().collect(),
    )
}

fn norm_sq(gm: &CMatrix, v: &[Complex64]) -> f64 {
    linalg::hermitian_pairing(gm, v, v).re
}

/// `R(ξ, ξ̄, η, η̄) / (|ξ|² |η|²)` from a flattened curvature tensor.
pub fn bisectional_from(curv: &[Complex64], gm: &CMatrix, xi: &[Complex64], eta: &[Complex64]) -> Result<f64> {
    let n = gm.nrows();
    if xi.len() != n || eta.len() != n {
        return Err(Error::DimensionMismatch(format!("tangent vectors must have {n} components")));
    }
    let (nx, ne) = (norm_sq(gm, xi), norm_sq(gm, eta));
    if !(nx > 0.0) || !(ne > 0.0) {
        return Err(Error::param("direction", "tangent vectors must be nonzero"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = xi[i] * xi[j].conj();
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    acc += curv[((i * n + j) * n + k) * n + l] * a * eta[k] * eta[l].conj();
                }
            }
        }
    }
    Ok(acc.re / (nx * ne))
}

/// Bisectional curvature at grid point `idx` in directions `ξ`, `η`.
pub fn bisectional(g: &HermitianMetricField, idx: usize, xi: &[Complex64], eta: &[Complex64]) -> Result<f64> {
    let jet = g.jet_at(idx)?;
    let ginv = g.inverse(idx)?;
    bisectional_from(&jet.curvature(&ginv), &jet.g, xi, eta)
}

/// Same contraction on a bare jet.
pub fn bisectional_jet(jet: &MetricJet, xi: &[Complex64], eta: &[Complex64]) -> Result<f64> {
    let ginv = linalg::inverse(&jet.g).ok_or(Error::Singular {
        index: 0,
        radius: f64::NAN,
    })?;
    bisectional_from(&jet.curvature(&ginv), &jet.g, xi, eta)
}

/// `Δ_g u = g^{ij̄} ∂_i∂_j̄ u` with finite-difference Hessians.
pub fn metric_laplacian(g: &HermitianMetricField, u: &ScalarField) -> Result<ScalarField> {
    if u.grid().len() != g.grid().len() || u.grid().dim() != g.dim() {
        return Err(Error::DimensionMismatch("field and metric live on different charts".into()));
    }
    let grid = g.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let h = hessian_matrix(grid, u.values(), idx);
            Ok(linalg::trace_product(&g.inverse(idx)?, &h))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// `det g` per point.
pub fn volume_form(g: &HermitianMetricField) -> ScalarField {
    let values = g
        .coeffs()
        .par_iter()
        .map(|m| Complex64::new(linalg::det_real(m), 0.0))
        .collect();
    ScalarField::new(g.grid().clone(), values).expect("one value per point")
}
