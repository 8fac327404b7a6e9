//! Numerical laboratory for conical Kähler metrics.
//!
//! The crate samples Kähler metrics with cone singularities on log-polar
//! charts around the divisor, computes their curvature, pulls them back
//! under holomorphic maps, and checks the Schwarz-type volume and trace
//! inequalities (and the Chern–Lu Laplacian estimates behind them) pointwise
//! and in supremum.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`chart`] | log-polar grids, sampled fields, Wirtinger finite differences |
//! | [`metrics`] | model metrics, potentials, Ricci / scalar / bisectional curvature |
//! | [`maps`] | holomorphic maps with exact derivatives, pullbacks, `u` and `v` |
//! | [`cone`] | `d_β`, Hölder moduli, the section `s` and weight `h`, barriers |
//! | [`schwarz`] | Chern–Lu residuals and the volume / trace inequality checks |
//! | [`scenario`] | scenario configs, the runner, CSV / summary reports |
//!
//! Conventions: a Kähler form is represented by its coefficient matrix
//! `g_{ij̄}`; `Ric_{ij̄} = -∂_i∂_j̄ log det g`; scalar curvature is
//! `g^{ij̄} Ric_{ij̄}`; `Δ_g u = g^{ij̄} ∂_i∂_j̄ u`. With these, the Poincaré
//! coefficient `1/(1-|z|²)²` has scalar curvature `-2`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod cone;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod metrics;
pub mod scenario;
pub mod schwarz;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Engine version recorded in every report row. The suffix is the CSV
/// schema revision.
pub const ENGINE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+s1");
