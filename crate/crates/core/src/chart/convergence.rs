use std::sync::Arc;

use num_complex::Complex64;

use super::field::ScalarField;
use super::grid::{ChartGrid, PolarPoint};
use crate::{Error, Result};

/// Relative max-error below which a stencil is treated as exact.
pub const SATURATION_LEVEL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedOrder {
    Order(f64),
    /// Errors sit at round-off on every level; no slope is measurable.
    Saturated,
}

impl ObservedOrder {
    /// True when the order is saturated or at least `p`.
    pub fn at_least(&self, p: f64) -> bool {
        match self {
            ObservedOrder::Saturated => true,
            ObservedOrder::Order(q) => *q >= p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: ObservedOrder,
}

/// Observed convergence order of a discrete operator against an exact oracle.
///
/// Each level's error is the max relative error `|op - oracle| / max|oracle|`
/// over interior points whose divisor-coordinate ρ lies inside the coarsest
/// level's interior band, so all levels measure the same region. The order is
/// the least-squares slope of `log error` against `log h`.
pub fn convergence_order<Op, Oracle>(
    grids: &[ChartGrid],
    op: Op,
    oracle: Oracle,
) -> Result<ConvergenceReport>
where
    Op: Fn(&Arc<ChartGrid>) -> Result<ScalarField>,
    Oracle: Fn(&[PolarPoint]) -> Complex64,
{
    if grids.len() < 3 {
        return Err(Error::TooFewLevels(grids.len()));
    }
    let coarse = &grids[0];
    let bands: Vec<(f64, f64)> = coarse
        .factors()
        .iter()
        .map(|f| (f.rho(2), f.rho(f.n_rho - 3)))
        .collect();

    let mut steps = Vec::with_capacity(grids.len());
    let mut errors = Vec::with_capacity(grids.len());
    for grid in grids {
        let grid = Arc::new(grid.clone());
        let field = op(&grid)?;
        let mut max_err = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..grid.len() {
            if !grid.is_interior(idx) {
                continue;
            }
            let p = grid.point(idx);
            let inside = p
                .iter()
                .zip(&bands)
                .all(|(q, &(lo, hi))| q.rho >= lo - 1e-12 && q.rho <= hi + 1e-12);
            if !inside {
                continue;
            }
            let exact = oracle(&p);
            scale = scale.max(exact.norm());
            max_err = max_err.max((field.get(idx) - exact).norm());
        }
        steps.push(grid.factor(0).rho_step());
        errors.push(max_err / scale.max(f64::MIN_POSITIVE));
    }

    let order = if errors.iter().all(|&e| e <= SATURATION_LEVEL) {
        ObservedOrder::Saturated
    } else {
        let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        ObservedOrder::Order(sxy / sxx)
    };
    Ok(ConvergenceReport {
        steps,
        errors,
        order,
    })
}

/// `levels` grids, each refining the previous by a factor of two.
pub fn doubling_sequence(base: &ChartGrid, levels: usize) -> Result<Vec<ChartGrid>> {
    let mut out = Vec::with_capacity(levels);
    let mut current = base.clone();
    for _ in 0..levels {
        out.push(current.clone());
        current = ChartGrid::new(current.factors().iter().map(|f| f.refined(2)).collect())?;
    }
    Ok(out)
}
