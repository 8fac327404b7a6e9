//! Model metrics, sampled metric fields, and their curvature.

mod curvature;
mod field;
mod jet;
mod model;

pub use curvature::{
    bisectional, bisectional_from, bisectional_jet, curvature_tensor, metric_laplacian, ricci,
    scalar_curvature, volume_form,
};
pub use field::{metric_from_potential, HermitianMetricField, Provenance};
pub use jet::{log_det_ratio_jet, log_trace_jet, trace_jet, MetricJet, ScalarJet};
pub use model::{DomainResult, Jet1, JetSource, ModelMetric, Potential};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constants in `R(g_X) ≥ -A`, `Ric(g_Y) ≤ -B g_Y` (or `Bisec ≤ -B`) and
/// `i R_h ≤ C g_X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CurvatureBounds {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let out = Self { a, b, c };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("A", self.a), ("B", self.b), ("C", self.c)] {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::param(name, format!("must be finite and nonnegative, got {x}")));
            }
        }
        Ok(())
    }

    /// Theorem checks need `B > 0`.
    pub fn require_positive_b(&self) -> Result<()> {
        if self.b > 0.0 {
            Ok(())
        } else {
            Err(Error::param("B", "theorem hypotheses need B > 0"))
        }
    }
}
