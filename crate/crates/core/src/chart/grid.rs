use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of ρ-rows at each end of a factor grid treated as low-accuracy.
pub const BOUNDARY_ROWS: usize = 2;

/// A point of one complex coordinate in log-polar form, `z = exp(ρ + iθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub rho: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(rho: f64, theta: f64) -> Self {
        Self { rho, theta }
    }

    /// Polar form of a complex number. `0` maps to `ρ = -∞`.
    pub fn from_complex(z: Complex64) -> Self {
        Self {
            rho: z.norm().ln(),
            theta: z.arg(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.rho.exp()
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.rho.exp(), self.theta)
    }

    /// `e^{-iθ}`, the phase of `1/z`.
    pub fn inv_phase(&self) -> Complex64 {
        Complex64::new(self.theta.cos(), -self.theta.sin())
    }
}

/// Log-polar discretization of a punctured disk in one complex coordinate.
///
/// Samples sit at `z = exp(ρ_i + iθ_j)` with `ρ_i` uniform on
/// `[rho_min, rho_max]` (both ends included) and `θ_j = 2πj / n_theta`.
/// The puncture `z = 0` is never sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPolarGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl LogPolarGrid {
    pub fn new(rho_min: f64, rho_max: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        let grid = Self {
            rho_min,
            rho_max,
            n_rho,
            n_theta,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid over the annulus `r_min ≤ |z| ≤ r_max`.
    pub fn annulus(r_min: f64, r_max: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        if !(r_min > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "inner radius must be positive, got {r_min}"
            )));
        }
        Self::new(r_min.ln(), r_max.ln(), n_rho, n_theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho_min.is_finite() || !self.rho_max.is_finite() {
            return Err(Error::InvalidGrid("rho bounds must be finite".into()));
        }
        if self.rho_min >= self.rho_max {
            return Err(Error::InvalidGrid(format!(
                "rho_min ({}) must be below rho_max ({})",
                self.rho_min, self.rho_max
            )));
        }
        if self.n_rho < 4 {
            return Err(Error::InvalidGrid(format!(
                "n_rho must be at least 4, got {}",
                self.n_rho
            )));
        }
        if self.n_theta < 8 {
            return Err(Error::InvalidGrid(format!(
                "n_theta must be at least 8, got {}",
                self.n_theta
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho_step(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.n_rho - 1) as f64
    }

    pub fn theta_step(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        if i + 1 == self.n_rho {
            self.rho_max
        } else {
            self.rho_min + i as f64 * self.rho_step()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.theta_step()
    }

    pub fn is_interior_row(&self, i: usize) -> bool {
        i >= BOUNDARY_ROWS && i + BOUNDARY_ROWS < self.n_rho
    }

    /// Same domain with `factor` times as many ρ-rows and θ-columns
    /// (step sizes halve for `factor = 2` up to the endpoint convention).
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            n_rho: (self.n_rho - 1) * factor + 1,
            n_theta: self.n_theta * factor,
        }
    }
}

/// Tensor product of per-coordinate log-polar grids; the chart of an
/// `n`-dimensional scenario. Factor 0 varies slowest in the flat index, and
/// within a factor the local index is `i_rho * n_theta + j_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartGrid {
    factors: Vec<LogPolarGrid>,
    strides: Vec<usize>,
    len: usize,
}

impl ChartGrid {
    pub fn new(factors: Vec<LogPolarGrid>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGrid("a chart needs at least one factor".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        let mut strides = vec![0; factors.len()];
        let mut acc = 1usize;
        for a in (0..factors.len()).rev() {
            strides[a] = acc;
            acc = acc
                .checked_mul(factors[a].len())
                .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        }
        Ok(Self {
            factors,
            strides,
            len: acc,
        })
    }

    pub fn single(grid: LogPolarGrid) -> Result<Self> {
        Self::new(vec![grid])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn factor(&self, axis: usize) -> &LogPolarGrid {
        &self.factors[axis]
    }

    pub fn factors(&self) -> &[LogPolarGrid] {
        &self.factors
    }

    /// `(i_rho, j_theta)` of a flat index along one axis.
    pub fn local(&self, idx: usize, axis: usize) -> (usize, usize) {
        let f = &self.factors[axis];
        let local = (idx / self.strides[axis]) % f.len();
        (local / f.n_theta, local % f.n_theta)
    }

    pub fn polar(&self, idx: usize, axis: usize) -> PolarPoint {
        let (i, j) = self.local(idx, axis);
        let f = &self.factors[axis];
        PolarPoint::new(f.rho(i), f.theta(j))
    }

    pub fn point(&self, idx: usize) -> Vec<PolarPoint> {
        (0..self.dim()).map(|a| self.polar(idx, a)).collect()
    }

    pub fn z(&self, idx: usize, axis: usize) -> Complex64 {
        self.polar(idx, axis).z()
    }

    /// Radius `|z¹|` of the divisor coordinate.
    pub fn divisor_distance(&self, idx: usize) -> f64 {
        self.polar(idx, 0).radius()
    }

    /// Flat index of the point displaced by `(di, dj)` along `axis`; θ wraps.
    /// Returns `None` when the ρ-index leaves the grid.
    pub fn shifted(&self, idx: usize, axis: usize, di: isize, dj: isize) -> Option<usize> {
        let f = &self.factors[axis];
        let (i, j) = self.local(idx, axis);
        let ni = i as isize + di;
        if ni < 0 || ni >= f.n_rho as isize {
            return None;
        }
        let nj = (j as isize + dj).rem_euclid(f.n_theta as isize) as usize;
        let old = i * f.n_theta + j;
        let new = ni as usize * f.n_theta + nj;
        Some(idx - old * self.strides[axis] + new * self.strides[axis])
    }

    /// Every factor's ρ-row is at least [`BOUNDARY_ROWS`] away from its ends.
    pub fn is_interior(&self, idx: usize) -> bool {
        (0..self.dim()).all(|a| self.factors[a].is_interior_row(self.local(idx, a).0))
    }

    pub fn interior_count(&self) -> usize {
        (0..self.len).filter(|&i| self.is_interior(i)).count()
    }

    /// ρ-row of the divisor coordinate.
    pub fn divisor_row(&self, idx: usize) -> usize {
        self.local(idx, 0).0
    }

    pub fn describe(&self) -> String {
        self.factors
            .iter()
            .map(|f| {
                format!(
                    "{}x{}[{:.6};{:.6}]",
                    f.n_rho, f.n_theta, f.rho_min, f.rho_max
                )
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}
