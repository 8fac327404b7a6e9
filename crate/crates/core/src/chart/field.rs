use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{ChartGrid, PolarPoint};
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Complex scalar sampled at every point of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<ChartGrid>,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Arc<ChartGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: Arc<ChartGrid>, f: F) -> Self
    where
        F: Fn(&[PolarPoint]) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(&grid.point(idx)))
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn<F>(grid: Arc<ChartGrid>, f: F) -> Self
    where
        F: Fn(&[PolarPoint]) -> f64 + Sync,
    {
        Self::from_fn(grid, |p| Complex64::new(f(p), 0.0))
    }

    /// Fallible per-point construction; the first failing index wins.
    pub fn try_from_index_fn<F>(grid: Arc<ChartGrid>, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<Complex64> + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(&f)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<ChartGrid>, c: Complex64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<ChartGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn re(&self, idx: usize) -> f64 {
        self.values[idx].re
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Largest `|Im|` over all samples.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Values rotated by `steps` θ-indices along `axis`: the result at `θ_j`
    /// holds the original value at `θ_{j+steps}`.
    pub fn shift_theta(&self, axis: usize, steps: isize) -> Self {
        let values = (0..self.grid.len())
            .map(|idx| {
                let src = self.grid.shifted(idx, axis, 0, steps).expect("θ shift stays on grid");
                self.values[src]
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Rank descriptor `(p, q)`: `p` holomorphic and `q` antiholomorphic slots,
/// stored interleaved as `i j̄ k l̄ …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rank {
    pub holomorphic: usize,
    pub antiholomorphic: usize,
}

impl Rank {
    pub const ONE_ONE: Rank = Rank {
        holomorphic: 1,
        antiholomorphic: 1,
    };
    pub const TWO_TWO: Rank = Rank {
        holomorphic: 2,
        antiholomorphic: 2,
    };

    pub fn slots(&self) -> usize {
        self.holomorphic + self.antiholomorphic
    }
}

/// Tensor components per grid point. Components are laid out row-major in
/// the slot order, e.g. `R_{ij̄kl̄}` at `((i·n + j)·n + k)·n + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Arc<ChartGrid>,
    dim: usize,
    rank: Rank,
    values: Vec<Complex64>,
}

impl TensorField {
    pub fn new(grid: Arc<ChartGrid>, dim: usize, rank: Rank, values: Vec<Complex64>) -> Result<Self> {
        let per = dim.pow(rank.slots() as u32);
        if values.len() != per * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                per * grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            dim,
            rank,
            values,
        })
    }

    /// Rank-(1,1) field from one matrix per point.
    pub fn from_matrices(grid: Arc<ChartGrid>, mats: &[CMatrix]) -> Result<Self> {
        let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
        let mut values = Vec::with_capacity(mats.len() * dim * dim);
        for m in mats {
            for i in 0..dim {
                for j in 0..dim {
                    values.push(m[(i, j)]);
                }
            }
        }
        Self::new(grid, dim, Rank::ONE_ONE, values)
    }

    pub fn grid(&self) -> &Arc<ChartGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn components_per_point(&self) -> usize {
        self.dim.pow(self.rank.slots() as u32)
    }

    pub fn point_slice(&self, idx: usize) -> &[Complex64] {
        let per = self.components_per_point();
        &self.values[idx * per..(idx + 1) * per]
    }

    pub fn get(&self, idx: usize, slots: &[usize]) -> Complex64 {
        debug_assert_eq!(slots.len(), self.rank.slots());
        let offset = slots.iter().fold(0, |acc, &s| acc * self.dim + s);
        self.point_slice(idx)[offset]
    }

    /// Rank-(1,1) component matrix at a point.
    pub fn matrix(&self, idx: usize) -> CMatrix {
        assert_eq!(self.rank, Rank::ONE_ONE);
        CMatrix::from_row_slice(self.dim, self.dim, self.point_slice(idx))
    }

    /// Largest violation of the Hermitian symmetries of the rank.
    ///
    /// For (1,1): `T_{ij̄} = conj(T_{jī})`. For (2,2): `R_{ij̄kl̄} =
    /// conj(R_{jīlk̄})` and the Kähler symmetry `R_{ij̄kl̄} = R_{kj̄il̄}`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for idx in 0..self.grid.len() {
            if self.rank == Rank::ONE_ONE {
                for i in 0..n {
                    for j in 0..n {
                        let d = self.get(idx, &[i, j]) - self.get(idx, &[j, i]).conj();
                        worst = worst.max(d.norm());
                    }
                }
            } else if self.rank == Rank::TWO_TWO {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                let r = self.get(idx, &[i, j, k, l]);
                                worst = worst.max((r - self.get(idx, &[j, i, l, k]).conj()).norm());
                                worst = worst.max((r - self.get(idx, &[k, j, i, l])).norm());
                            }
                        }
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::LogPolarGrid;

    fn grid() -> Arc<ChartGrid> {
        Arc::new(ChartGrid::single(LogPolarGrid::new(-3.0, -0.5, 8, 8).unwrap()).unwrap())
    }

    #[test]
    fn value_count_is_checked() {
        assert!(ScalarField::new(grid(), vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn real_fields_have_zero_imaginary_part() {
        let f = ScalarField::from_real_fn(grid(), |p| p[0].rho);
        assert!(f.is_real(1e-12));
    }

    #[test]
    fn theta_shift_is_a_rotation() {
        let f = ScalarField::from_fn(grid(), |p| p[0].z());
        let g = f.shift_theta(0, 1);
        let h = g.shift_theta(0, -1);
        assert_eq!(f, h);
    }
}
