//! Analysis near the divisor: the distance `d_β`, empirical Hölder moduli,
//! the section `s` with Hermitian weight `h = e^{-ψ}`, barrier functions
//! `u + ε|s|_h^{2γ}` and their maxima.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartGrid, LogPolarGrid, PolarPoint, ScalarField};
use crate::linalg::{self, CMatrix};
use crate::metrics::{metric_laplacian, HermitianMetricField, ModelMetric};
use crate::{Error, Result};

/// `ψ` in `h = e^{-ψ}`, as a function of the divisor coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HermitianWeight {
    /// `ψ ≡ 0`.
    Flat,
    /// `ψ = c|z¹|²`, so `i R_h = c dz¹∧dz̄¹`.
    Quadratic { c: f64 },
}

impl HermitianWeight {
    fn psi(&self, p: PolarPoint) -> f64 {
        match *self {
            HermitianWeight::Flat => 0.0,
            HermitianWeight::Quadratic { c } => c * (2.0 * p.rho).exp(),
        }
    }

    fn ddbar_psi(&self) -> f64 {
        match *self {
            HermitianWeight::Flat => 0.0,
            HermitianWeight::Quadratic { c } => c,
        }
    }
}

/// Divisor data `(β, s = z¹, h)` on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeStructure {
    beta: f64,
    weight: HermitianWeight,
    /// Constant added to `ψ` so that `|s|_h ≤ 1` on the chart.
    shift: f64,
}

impl ConeStructure {
    /// Shifts `ψ` by a constant only when `|s|_h` would exceed 1 somewhere
    /// on the chart.
    pub fn new(beta: f64, weight: HermitianWeight, grid: &ChartGrid) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::param("beta", format!("cone angle must lie in (0,1], got {beta}")));
        }
        if let HermitianWeight::Quadratic { c } = weight {
            if !c.is_finite() {
                return Err(Error::param("c", "weight coefficient must be finite"));
            }
        }
        let mut cone = Self {
            beta,
            weight,
            shift: 0.0,
        };
        let sup = (0..grid.len())
            .map(|idx| cone.log_s_sq(grid.polar(idx, 0)))
            .fold(f64::NEG_INFINITY, f64::max);
        if sup > 0.0 {
            cone.shift = sup;
        }
        Ok(cone)
    }

    pub fn flat(beta: f64, grid: &ChartGrid) -> Result<Self> {
        Self::new(beta, HermitianWeight::Flat, grid)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weight(&self) -> HermitianWeight {
        self.weight
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `log |s|_h² = 2 log|z¹| - ψ`.
    pub fn log_s_sq(&self, p: PolarPoint) -> f64 {
        2.0 * p.rho - self.weight.psi(p) - self.shift
    }

    /// `|s|_h^{2γ}` at a divisor-coordinate point.
    pub fn s_power(&self, p: PolarPoint, gamma: f64) -> f64 {
        (gamma * self.log_s_sq(p)).exp()
    }

    pub fn s_power_field(&self, grid: Arc<ChartGrid>, gamma: f64) -> ScalarField {
        ScalarField::from_real_fn(grid, |p| self.s_power(p[0], gamma))
    }

    /// `∂∂̄ψ` as a matrix in the chart.
    pub fn curvature_form(&self, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(0, 0)] = Complex64::new(self.weight.ddbar_psi(), 0.0);
        m
    }

    /// Smallest `C ≥ 0` with `i R_h ≤ C g_X` on the grid.
    pub fn curvature_bound(&self, gx: &HermitianMetricField) -> Result<f64> {
        let form = self.curvature_form(gx.dim());
        if form[(0, 0)].re == 0.0 {
            return Ok(0.0);
        }
        let worst = (0..gx.grid().len())
            .into_par_iter()
            .map(|idx| {
                let eig = linalg::relative_eigenvalues(&form, gx.coeff(idx)).ok_or(Error::NotPositiveDefinite {
                    index: idx,
                    radius: gx.grid().divisor_distance(idx),
                })?;
                Ok(eig.last().copied().unwrap_or(0.0))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(worst)
    }
}

/// Exponent of the Hölder class, with the admissible range enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HolderParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param("beta", format!("cone angle must lie in (0,1), got {beta}")));
        }
        let upper = (1.0 / beta - 1.0).min(1.0);
        if !(alpha > 0.0 && alpha < upper) {
            return Err(Error::param(
                "holder_alpha",
                format!("must lie in (0, {upper}) for beta = {beta}, got {alpha}"),
            ));
        }
        Ok(Self { alpha, beta })
    }
}

/// `(z¹)^β` on the principal branch, argument in `(-π, π]`.
fn principal_power(z: Complex64, beta: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    Complex64::from_polar(z.norm().powf(beta), beta * z.arg())
}

/// `d_β(z, w) = (|(z¹)^β - (w¹)^β|² + Σ_{a≥2} |z^a - w^a|²)^{1/2}`.
pub fn d_beta(z: &[Complex64], w: &[Complex64], beta: f64) -> f64 {
    let mut acc = (principal_power(z[0], beta) - principal_power(w[0], beta)).norm_sqr();
    for (a, b) in z.iter().zip(w).skip(1) {
        acc += (a - b).norm_sqr();
    }
    acc.sqrt()
}

fn principal_theta(theta: f64) -> f64 {
    if theta > PI {
        theta - TAU
    } else {
        theta
    }
}

/// `d_β` between two chart grid points, computed from polar data so that
/// deep points do not underflow.
fn d_beta_grid(grid: &ChartGrid, a: usize, b: usize, beta: f64) -> f64 {
    let (pa, pb) = (grid.polar(a, 0), grid.polar(b, 0));
    let za = Complex64::from_polar((beta * pa.rho).exp(), beta * principal_theta(pa.theta));
    let zb = Complex64::from_polar((beta * pb.rho).exp(), beta * principal_theta(pb.theta));
    let mut acc = (za - zb).norm_sqr();
    for axis in 1..grid.dim() {
        acc += (grid.z(a, axis) - grid.z(b, axis)).norm_sqr();
    }
    acc.sqrt()
}

fn angular_separation(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Empirical Hölder seminorm with its sampling record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub modulus: f64,
    pub budget: usize,
    /// Coincident pairs and near-divisor pairs across the branch cut region.
    pub skipped: usize,
}

/// Number of ρ-rows treated as "near the divisor" when sampling pairs.
fn near_rows(f: &LogPolarGrid) -> usize {
    (f.n_rho / 10).max(1)
}

/// `sup |u(x) - u(y)| / d_β(x, y)^α` over a deterministic pair schedule.
///
/// Even-numbered pairs have one point in the innermost tenth of the
/// divisor rows; odd-numbered pairs are uniform. The schedule depends only
/// on `seed`, so a larger budget extends a smaller one and the estimate is
/// nondecreasing in the budget.
pub fn holder_modulus(u: &ScalarField, params: HolderParams, budget: usize, seed: u64) -> Result<HolderEstimate> {
    HolderParams::new(params.alpha, params.beta)?;
    if budget < 1000 {
        return Err(Error::param("budget", format!("need at least 1000 pairs, got {budget}")));
    }
    let grid = u.grid();
    let f0 = grid.factor(0);
    let near = near_rows(f0);
    let per_row = grid.len() / f0.n_rho;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    let mut skipped = 0;
    for m in 0..budget {
        let (a, b, near_pair) = if m % 2 == 0 {
            let a = rng.random_range(0..near * per_row);
            (a, rng.random_range(0..grid.len()), true)
        } else {
            (rng.random_range(0..grid.len()), rng.random_range(0..grid.len()), false)
        };
        if a == b {
            skipped += 1;
            continue;
        }
        if near_pair && angular_separation(grid.polar(a, 0).theta, grid.polar(b, 0).theta) > FRAC_PI_2 {
            skipped += 1;
            continue;
        }
        let d = d_beta_grid(grid, a, b, params.beta);
        if d == 0.0 {
            skipped += 1;
            continue;
        }
        let q = (u.get(a) - u.get(b)).norm() / d.powf(params.alpha);
        sup = sup.max(q);
    }
    Ok(HolderEstimate {
        modulus: sup,
        budget,
        skipped,
    })
}

/// `u_ε = u + ε|s|_h^{2γ}` with the well-posedness flag `2γ < α_H β`.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub field: ScalarField,
    pub well_posed: bool,
    pub epsilon: f64,
    pub gamma: f64,
}

pub fn barrier(u: &ScalarField, cone: &ConeStructure, epsilon: f64, gamma: f64, alpha_h: f64) -> Result<Barrier> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::param("epsilon", format!("must be finite and nonnegative, got {epsilon}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
    }
    let grid = u.grid().clone();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| u.get(idx) + epsilon * cone.s_power(grid.polar(idx, 0), gamma))
        .collect();
    Ok(Barrier {
        field: ScalarField::new(grid, values)?,
        well_posed: 2.0 * gamma < alpha_h * cone.beta(),
        epsilon,
        gamma,
    })
}

/// Location of the maximum of a sampled barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax {
    pub index: usize,
    pub value: f64,
    /// `|z¹|` at the maximum.
    pub distance: f64,
    /// `log |z¹|`, exact even where the distance underflows.
    pub log_distance: f64,
    /// Divisor row of the maximum.
    pub row: usize,
    /// Grid points attaining the maximum.
    pub ties: usize,
}

/// Grid argmax of the real part over every row, ties broken toward the
/// largest `|z¹|` and then the smallest index.
pub fn jeffres_argmax(u_eps: &ScalarField) -> Argmax {
    let grid = u_eps.grid();
    let max = u_eps.values().iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-13 * max.abs().max(1e-300);
    let mut best: Option<usize> = None;
    let mut ties = 0;
    for idx in 0..grid.len() {
        if (u_eps.re(idx) - max).abs() <= tol {
            ties += 1;
            let better = match best {
                None => true,
                Some(b) => grid.polar(idx, 0).rho > grid.polar(b, 0).rho,
            };
            if better {
                best = Some(idx);
            }
        }
    }
    let index = best.unwrap_or(0);
    let p = grid.polar(index, 0);
    Argmax {
        index,
        value: u_eps.re(index),
        distance: p.radius(),
        log_distance: p.rho,
        row: grid.divisor_row(index),
        ties,
    }
}

/// `log t*` for the maximiser of `ε t^{2γ} - t^{α_H β}`, clipped to
/// `[rho_min, rho_max]`.
pub fn stationary_log_radius(epsilon: f64, gamma: f64, alpha_h: f64, beta: f64, grid: &LogPolarGrid) -> f64 {
    let p = alpha_h * beta;
    let rho = (2.0 * gamma * epsilon / p).ln() / (p - 2.0 * gamma);
    rho.clamp(grid.rho_min, grid.rho_max)
}

/// The test family `u = -d_β(·, 0)^{α_H}`.
pub fn distance_power_family(grid: Arc<ChartGrid>, alpha_h: f64, beta: f64) -> ScalarField {
    ScalarField::from_real_fn(grid, |p| -(alpha_h * beta * p[0].rho).exp())
}

/// `Δ_{g_X}|s|_h^{2γ}` with the lower bound it is expected to respect.
#[derive(Debug, Clone)]
pub struct BarrierBound {
    pub laplacian: ScalarField,
    /// Measured `C` in `i R_h ≤ C g_X`.
    pub c: f64,
    /// `-γ C sup|s|_h^{2γ}`.
    pub lower_bound: f64,
    /// Smallest interior value of the Laplacian and where it occurs.
    pub min_value: f64,
    pub min_index: usize,
}

pub fn barrier_laplacian_bound(cone: &ConeStructure, gamma: f64, gx: &HermitianMetricField) -> Result<BarrierBound> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
    }
    let grid = gx.grid();
    let s = cone.s_power_field(grid.clone(), gamma);
    let laplacian = metric_laplacian(gx, &s)?;
    let c = cone.curvature_bound(gx)?;
    let sup_s = s.values().iter().map(|v| v.re).fold(0.0, f64::max);
    let (mut min_value, mut min_index) = (f64::INFINITY, 0);
    for idx in 0..grid.len() {
        if grid.is_interior(idx) && laplacian.re(idx) < min_value {
            min_value = laplacian.re(idx);
            min_index = idx;
        }
    }
    Ok(BarrierBound {
        laplacian,
        c,
        lower_bound: -gamma * c * sup_s,
        min_value,
        min_index,
    })
}

/// `(inf, sup)` of the eigenvalues of `g` relative to the flat cone metric
/// in the divisor coordinate (Euclidean in the others).
pub fn quasi_isometry_constants(g: &HermitianMetricField, beta: f64) -> Result<(f64, f64)> {
    let grid = g.grid();
    let mut atoms = vec![ModelMetric::standard_cone(beta)];
    atoms.extend(std::iter::repeat_n(ModelMetric::euclidean(1), g.dim() - 1));
    let model = ModelMetric::product(atoms);
    model.validate()?;
    let pairs = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let reference = model
                .coefficient(&grid.point(idx))
                .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
            let eig = linalg::relative_eigenvalues(g.coeff(idx), &reference).ok_or(Error::NotPositiveDefinite {
                index: idx,
                radius: grid.divisor_distance(idx),
            })?;
            Ok((eig[0], eig[eig.len() - 1]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .into_iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, b)| (lo.min(a), hi.max(b))))
}

/// Quasi-isometry constants on a chart and on the same chart pushed two
/// decades closer to the divisor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCertificate {
    pub c_low: f64,
    pub c_high: f64,
    pub c_low_deeper: f64,
    pub c_high_deeper: f64,
    pub certified: bool,
}

/// Relative drift allowed between the two cutoffs.
pub const STABILITY_TOLERANCE: f64 = 0.05;

pub fn certify_cone_metric(model: &ModelMetric, beta: f64, grid: &ChartGrid) -> Result<ConeCertificate> {
    let deeper = ChartGrid::new(
        grid.factors()
            .iter()
            .enumerate()
            .map(|(axis, f)| {
                if axis == 0 {
                    let extra = (100.0f64).ln();
                    let per_row = f.rho_step();
                    let rows = (extra / per_row).ceil() as usize;
                    LogPolarGrid::new(f.rho_min - extra, f.rho_max, f.n_rho + rows, f.n_theta)
                } else {
                    Ok(*f)
                }
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let a = quasi_isometry_constants(&HermitianMetricField::from_model(model, Arc::new(grid.clone()))?, beta)?;
    let b = quasi_isometry_constants(&HermitianMetricField::from_model(model, Arc::new(deeper))?, beta)?;
    let stable = |x: f64, y: f64| (x / y - 1.0).abs() <= STABILITY_TOLERANCE;
    let certified = a.0 > 0.0
        && b.0 > 0.0
        && a.1.is_finite()
        && b.1.is_finite()
        && stable(a.0, b.0)
        && stable(a.1, b.1);
    Ok(ConeCertificate {
        c_low: a.0,
        c_high: a.1,
        c_low_deeper: b.0,
        c_high_deeper: b.1,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn chart(r0: f64, r1: f64, n_rho: usize) -> Arc<ChartGrid> {
        Arc::new(ChartGrid::single(LogPolarGrid::annulus(r0, r1, n_rho, 16).unwrap()).unwrap())
    }

    #[test]
    fn d_beta_examples() {
        assert!((d_beta(&[c(0.04), c(0.0)], &[c(0.0), c(0.0)], 0.5) - 0.2).abs() < 1e-15);
        let z = [Complex64::new(0.3, -0.1), c(0.2)];
        assert_eq!(d_beta(&z, &z, 0.4), 0.0);
        assert_eq!(d_beta(&[c(1.0), c(0.0)], &[c(0.0), c(0.0)], 1.0), 1.0);
    }

    #[test]
    fn holder_range_enforced() {
        assert!(HolderParams::new(0.5, 0.5).is_ok());
        assert!(HolderParams::new(0.9, 0.6).is_err());
        assert!(HolderParams::new(0.5, 1.0).is_err());
    }

    #[test]
    fn constant_field_has_zero_modulus() {
        let grid = chart(1e-4, 1.0, 32);
        let u = ScalarField::constant(grid, c(2.0));
        let est = holder_modulus(&u, HolderParams::new(0.5, 0.5).unwrap(), 2000, 1).unwrap();
        assert_eq!(est.modulus, 0.0);
    }

    #[test]
    fn barrier_examples() {
        let grid = chart(1e-3, 1.0, 32);
        let cone = ConeStructure::flat(0.5, &grid).unwrap();
        let u = distance_power_family(grid.clone(), 0.5, 0.5);
        let b0 = barrier(&u, &cone, 0.0, 0.1, 0.5).unwrap();
        assert_eq!(b0.field, u);
        let b = barrier(&u, &cone, 1.0, 0.1, 0.5).unwrap();
        assert!(b.well_posed);
        for idx in (0..grid.len()).step_by(7) {
            let t = grid.divisor_distance(idx);
            assert!((b.field.re(idx) - (t.powf(0.2) - t.powf(0.25))).abs() < 1e-14);
        }
        assert!(!barrier(&u, &cone, 1.0, 0.2, 0.5).unwrap().well_posed);
    }

    #[test]
    fn normalization_only_when_needed() {
        let grid = chart(1e-3, 0.9, 16);
        assert_eq!(ConeStructure::flat(0.5, &grid).unwrap().shift(), 0.0);
        let wide = chart(1e-3, 3.0, 16);
        let cone = ConeStructure::flat(0.5, &wide).unwrap();
        let sup = (0..wide.len())
            .map(|i| cone.s_power(wide.polar(i, 0), 0.5))
            .fold(0.0, f64::max);
        assert!((sup - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quasi_isometry_of_models() {
        let grid = chart(1e-4, 0.5, 64);
        let g = HermitianMetricField::from_model(&ModelMetric::standard_cone(0.5), grid.clone()).unwrap();
        let (lo, hi) = quasi_isometry_constants(&g, 0.5).unwrap();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
        let beta: f64 = 0.5;
        let h = HermitianMetricField::from_model(&ModelMetric::hyperbolic_cone(beta), grid.clone()).unwrap();
        let (lo, hi) = quasi_isometry_constants(&h, beta).unwrap();
        assert!((lo - 1.0).abs() < 1e-3);
        assert!((hi / (1.0 - 0.5f64.powf(2.0 * beta)).powi(-2) - 1.0).abs() < 1e-12);
        let cert = certify_cone_metric(&ModelMetric::hyperbolic_cone(beta), beta, &grid).unwrap();
        assert!(cert.certified);
        let cert = certify_cone_metric(&ModelMetric::poincare(), beta, &grid).unwrap();
        assert!(!cert.certified);
        assert!(cert.c_low_deeper < cert.c_low);
    }
}
