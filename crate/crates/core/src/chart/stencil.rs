//! Finite-difference Wirtinger calculus on log-polar charts.
//!
//! With `z = exp(ρ + iθ)`:
//!
//! ```text
//! ∂_z  = e^{-(ρ+iθ)} (∂_ρ - i∂_θ) / 2
//! ∂_z̄  = e^{-(ρ-iθ)} (∂_ρ + i∂_θ) / 2
//! ∂_z∂_z̄ = e^{-2ρ} (∂_ρ² + ∂_θ²) / 4
//! ```
//!
//! ρ-derivatives use second-order central differences with second-order
//! one-sided stencils on the two end rows; θ is periodic. The diagonal
//! `∂_z∂_z̄` uses the compact three-point second differences above; mixed
//! derivatives across coordinates compose the one-dimensional stencils.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::ScalarField;
use super::grid::{ChartGrid, LogPolarGrid};
use crate::linalg::CMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Z,
    ZBar,
}

/// Values a stencil can be applied to.
pub trait Linear: Clone {
    fn scaled(&self, w: Complex64) -> Self;
    fn add_scaled(&mut self, w: Complex64, x: &Self);
}

impl Linear for Complex64 {
    fn scaled(&self, w: Complex64) -> Self {
        w * self
    }
    fn add_scaled(&mut self, w: Complex64, x: &Self) {
        *self += w * x;
    }
}

impl Linear for CMatrix {
    fn scaled(&self, w: Complex64) -> Self {
        self * w
    }
    fn add_scaled(&mut self, w: Complex64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x.iter()) {
            *a += w * b;
        }
    }
}

/// Weighted sum over flat grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    terms: Vec<(usize, Complex64)>,
}

impl Stencil {
    pub fn terms(&self) -> &[(usize, Complex64)] {
        &self.terms
    }

    pub fn apply<T: Linear>(&self, values: &[T]) -> T {
        self.apply_with(|i| values[i].clone())
    }

    pub fn apply_with<T: Linear, F: Fn(usize) -> T>(&self, value: F) -> T {
        let (first, rest) = self.terms.split_first().expect("stencil has terms");
        let mut acc = value(first.0).scaled(first.1);
        for &(i, w) in rest {
            acc.add_scaled(w, &value(i));
        }
        acc
    }

    /// Same indices, conjugated weights.
    pub fn conj(&self) -> Stencil {
        Stencil {
            terms: self.terms.iter().map(|&(i, w)| (i, w.conj())).collect(),
        }
    }
}

fn rho_first(f: &LogPolarGrid, i: usize) -> Vec<(isize, f64)> {
    let h2 = 2.0 * f.rho_step();
    if i == 0 {
        vec![(0, -3.0 / h2), (1, 4.0 / h2), (2, -1.0 / h2)]
    } else if i + 1 == f.n_rho {
        vec![(0, 3.0 / h2), (-1, -4.0 / h2), (-2, 1.0 / h2)]
    } else {
        vec![(-1, -1.0 / h2), (1, 1.0 / h2)]
    }
}

fn rho_second(f: &LogPolarGrid, i: usize) -> Vec<(isize, f64)> {
    let hh = f.rho_step() * f.rho_step();
    if i == 0 {
        vec![(0, 2.0 / hh), (1, -5.0 / hh), (2, 4.0 / hh), (3, -1.0 / hh)]
    } else if i + 1 == f.n_rho {
        vec![(0, 2.0 / hh), (-1, -5.0 / hh), (-2, 4.0 / hh), (-3, -1.0 / hh)]
    } else {
        vec![(-1, 1.0 / hh), (0, -2.0 / hh), (1, 1.0 / hh)]
    }
}

/// Stencil of `∂_{z^axis}` or `∂_{z̄^axis}` at a point. The `z̄` weights are
/// the exact conjugates of the `z` weights.
pub fn wirtinger_stencil(grid: &ChartGrid, idx: usize, axis: usize, dir: Direction) -> Stencil {
    let f = grid.factor(axis);
    let (i, _) = grid.local(idx, axis);
    let p = grid.polar(idx, axis);
    let factor = p.inv_phase() * (0.5 * (-p.rho).exp());
    let mut terms = Vec::with_capacity(5);
    for (di, w) in rho_first(f, i) {
        let at = grid.shifted(idx, axis, di, 0).expect("ρ stencil stays on grid");
        terms.push((at, factor * w));
    }
    let ht2 = 2.0 * f.theta_step();
    let minus_i = Complex64::new(0.0, -1.0);
    for (dj, w) in [(-1isize, -1.0 / ht2), (1, 1.0 / ht2)] {
        let at = grid.shifted(idx, axis, 0, dj).expect("θ wraps");
        terms.push((at, factor * minus_i * w));
    }
    let s = Stencil { terms };
    match dir {
        Direction::Z => s,
        Direction::ZBar => s.conj(),
    }
}

/// Stencil of `∂_{z^a} ∂_{z̄^b}` at a point.
pub fn ddbar_stencil(grid: &ChartGrid, idx: usize, a: usize, b: usize) -> Stencil {
    if a == b {
        let f = grid.factor(a);
        let (i, _) = grid.local(idx, a);
        let p = grid.polar(idx, a);
        let scale = 0.25 * (-2.0 * p.rho).exp();
        let mut terms = Vec::with_capacity(7);
        for (di, w) in rho_second(f, i) {
            let at = grid.shifted(idx, a, di, 0).expect("ρ stencil stays on grid");
            terms.push((at, Complex64::new(scale * w, 0.0)));
        }
        let htt = f.theta_step() * f.theta_step();
        for (dj, w) in [(-1isize, 1.0 / htt), (0, -2.0 / htt), (1, 1.0 / htt)] {
            let at = grid.shifted(idx, a, 0, dj).expect("θ wraps");
            terms.push((at, Complex64::new(scale * w, 0.0)));
        }
        Stencil { terms }
    } else {
        let sa = wirtinger_stencil(grid, idx, a, Direction::Z);
        let sb = wirtinger_stencil(grid, idx, b, Direction::ZBar);
        let mut terms = Vec::with_capacity(sa.terms.len() * sb.terms.len());
        for &(ia, wa) in &sa.terms {
            for &(ib, wb) in &sb.terms {
                terms.push((ia + ib - idx, wa * wb));
            }
        }
        Stencil { terms }
    }
}

fn check_axis(grid: &ChartGrid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "axis {axis} on a {}-dimensional chart",
            grid.dim()
        )));
    }
    Ok(())
}

/// `∂f/∂z^axis` or `∂f/∂z̄^axis` at every point. End rows use one-sided
/// stencils and are low-accuracy (see [`ChartGrid::is_interior`]).
pub fn wirtinger_d(field: &ScalarField, dir: Direction, axis: usize) -> Result<ScalarField> {
    let grid = field.grid().clone();
    check_axis(&grid, axis)?;
    let vals = field.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|idx| wirtinger_stencil(&grid, idx, axis, dir).apply(vals))
        .collect();
    ScalarField::new(grid, out)
}

/// `∂_a ∂_b̄ f` at every point.
pub fn ddbar(field: &ScalarField, a: usize, b: usize) -> Result<ScalarField> {
    let grid = field.grid().clone();
    check_axis(&grid, a)?;
    check_axis(&grid, b)?;
    let vals = field.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|idx| ddbar_stencil(&grid, idx, a, b).apply(vals))
        .collect();
    ScalarField::new(grid, out)
}

/// Euclidean `Σ_a ∂_a∂_ā f`; for one coordinate this is `∂∂̄ f`.
pub fn laplacian_euclidean(field: &ScalarField) -> ScalarField {
    let grid = field.grid().clone();
    let vals = field.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..grid.dim() {
                acc += ddbar_stencil(&grid, idx, a, a).apply(vals);
            }
            acc
        })
        .collect();
    ScalarField::new(grid, out).expect("same grid")
}

/// Complex Hessian `H[k][l] = ∂_k∂_l̄ u` at one point.
pub fn complex_hessian_at<T: Linear, F: Fn(usize) -> T + Copy>(
    grid: &ChartGrid,
    idx: usize,
    value: F,
) -> Vec<Vec<T>> {
    let n = grid.dim();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|l| ddbar_stencil(grid, idx, k, l).apply_with(value))
                .collect()
        })
        .collect()
}

/// Complex Hessian of a sampled scalar at one point, as a matrix.
pub fn hessian_matrix(grid: &ChartGrid, values: &[Complex64], idx: usize) -> CMatrix {
    let n = grid.dim();
    CMatrix::from_fn(n, n, |k, l| ddbar_stencil(grid, idx, k, l).apply(values))
}

/// Gradient `∂_k f` of a sampled scalar at one point.
pub fn gradient_at(grid: &ChartGrid, values: &[Complex64], idx: usize) -> Vec<Complex64> {
    (0..grid.dim())
        .map(|k| wirtinger_stencil(grid, idx, k, Direction::Z).apply(values))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chart::LogPolarGrid;

    fn chart(n_rho: usize, n_theta: usize) -> Arc<ChartGrid> {
        Arc::new(
            ChartGrid::single(LogPolarGrid::annulus(1e-2, 0.8, n_rho, n_theta).unwrap()).unwrap(),
        )
    }

    fn max_interior_err(f: &ScalarField, oracle: impl Fn(Complex64) -> Complex64) -> f64 {
        let g = f.grid();
        (0..g.len())
            .filter(|&i| g.is_interior(i))
            .map(|i| {
                let z = g.z(i, 0);
                let o = oracle(z);
                (f.get(i) - o).norm() / o.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_function_derivatives() {
        let g = chart(128, 128);
        let f = ScalarField::from_fn(g, |p| p[0].z());
        let dz = wirtinger_d(&f, Direction::Z, 0).unwrap();
        let dzb = wirtinger_d(&f, Direction::ZBar, 0).unwrap();
        assert!(max_interior_err(&dz, |_| Complex64::new(1.0, 0.0)) < 2e-3);
        assert!(max_interior_err(&dzb, |_| Complex64::new(0.0, 0.0)) < 2e-3);
    }

    #[test]
    fn modulus_squared_derivative_is_conjugate() {
        let g = chart(128, 64);
        let f = ScalarField::from_real_fn(g, |p| p[0].radius().powi(2));
        let dz = wirtinger_d(&f, Direction::Z, 0).unwrap();
        // radial field: θ-differences vanish, only O(h²) from ρ.
        assert!(max_interior_err(&dz, |z| z.conj()) < 1e-3);
    }

    #[test]
    fn log_modulus_is_harmonic() {
        let g = chart(64, 16);
        let f = ScalarField::from_real_fn(g, |p| 2.0 * p[0].rho);
        let lap = laplacian_euclidean(&f);
        for i in 0..lap.len() {
            assert!(lap.get(i).norm() < 1e-6, "{}", lap.get(i));
        }
    }

    #[test]
    fn laplacian_examples() {
        let g = chart(256, 64);
        let re_z2 = ScalarField::from_real_fn(g.clone(), |p| p[0].z().powi(2).re);
        let lap = laplacian_euclidean(&re_z2);
        assert!(max_interior_err(&lap, |_| Complex64::new(0.0, 0.0)) < 5e-3);

        let r2 = ScalarField::from_real_fn(g.clone(), |p| p[0].radius().powi(2));
        assert!(max_interior_err(&laplacian_euclidean(&r2), |_| Complex64::new(1.0, 0.0)) < 1e-3);

        let gamma: f64 = 0.3;
        let rg = ScalarField::from_real_fn(g, |p| p[0].radius().powf(2.0 * gamma));
        let err = max_interior_err(&laplacian_euclidean(&rg), |z| {
            Complex64::new(gamma * gamma * z.norm().powf(2.0 * (gamma - 1.0)), 0.0)
        });
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn conjugation_commutes_exactly() {
        let g = chart(32, 16);
        let f = ScalarField::from_fn(g, |p| {
            let z = p[0].z();
            z * z * Complex64::new(0.3, 1.0) + z.conj().exp()
        });
        let lhs = wirtinger_d(&f.conj(), Direction::Z, 0).unwrap();
        let rhs = wirtinger_d(&f, Direction::ZBar, 0).unwrap().conj();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn rejects_bad_axis() {
        let g = chart(16, 8);
        let f = ScalarField::constant(g, Complex64::new(1.0, 0.0));
        assert!(wirtinger_d(&f, Direction::Z, 1).is_err());
    }

    #[test]
    fn mixed_derivatives_on_product_chart() {
        let a = LogPolarGrid::annulus(0.1, 0.6, 64, 64).unwrap();
        let b = LogPolarGrid::annulus(0.2, 0.7, 64, 64).unwrap();
        let grid = ChartGrid::new(vec![a, b]).unwrap();
        // u = |z|²|w|² → ∂_z∂_w̄ u = z̄ w; evaluated lazily at a few points.
        let u = |i: usize| {
            Complex64::new(grid.z(i, 0).norm_sqr() * grid.z(i, 1).norm_sqr(), 0.0)
        };
        let mut worst = 0.0f64;
        for idx in (0..grid.len()).step_by(9973).filter(|&i| grid.is_interior(i)) {
            let m = ddbar_stencil(&grid, idx, 0, 1).apply_with(u);
            let exact = grid.z(idx, 0).conj() * grid.z(idx, 1);
            worst = worst.max((m - exact).norm() / exact.norm());
        }
        assert!(worst < 5e-3, "{worst}");
    }
}
