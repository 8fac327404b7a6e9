//! Punctured-chart grids, sampled fields, and finite-difference Wirtinger
//! derivatives.

mod convergence;
mod field;
mod grid;
mod stencil;

pub use convergence::{convergence_order, doubling_sequence, ConvergenceReport, ObservedOrder};
pub use field::{Rank, ScalarField, TensorField};
pub use grid::{ChartGrid, LogPolarGrid, PolarPoint, BOUNDARY_ROWS};
pub use stencil::{
    complex_hessian_at, ddbar, ddbar_stencil, gradient_at, hessian_matrix, laplacian_euclidean,
    wirtinger_d, wirtinger_stencil, Direction, Linear, Stencil,
};
