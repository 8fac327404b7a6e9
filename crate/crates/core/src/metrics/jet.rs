//! Second-order jets of Hermitian coefficient matrices and the curvature
//! quantities that only depend on them.

use num_complex::Complex64;

use super::model::Jet1;
use crate::linalg::{self, CMatrix};

/// `g`, `∂_k g` and `∂_k∂_l̄ g` at one point. `∂_l̄ g` is `(∂_l g)ᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g: CMatrix,
    pub dg: Vec<CMatrix>,
    pub ddg: Vec<Vec<CMatrix>>,
    /// Closed-form Ricci form, when the source knows it.
    pub ric: Option<CMatrix>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn block_diagonal(jets: &[Jet1]) -> Self {
        let n = jets.len();
        let mut g = CMatrix::zeros(n, n);
        let mut ric = CMatrix::zeros(n, n);
        let mut dg = vec![CMatrix::zeros(n, n); n];
        let mut ddg = vec![vec![CMatrix::zeros(n, n); n]; n];
        for (a, j) in jets.iter().enumerate() {
            g[(a, a)] = Complex64::new(j.g, 0.0);
            ric[(a, a)] = Complex64::new(j.ric, 0.0);
            dg[a][(a, a)] = j.dz;
            ddg[a][a][(a, a)] = Complex64::new(j.ddbar, 0.0);
        }
        Self {
            g,
            dg,
            ddg,
            ric: Some(ric),
        }
    }

    pub fn dbar(&self, l: usize) -> CMatrix {
        self.dg[l].adjoint()
    }

    /// `R_{ij̄kl̄} = -∂_k∂_l̄ g_{ij̄} + g^{pq̄} (∂_k g_{iq̄}) (∂_l̄ g_{pj̄})`,
    /// flattened as `((i·n + j)·n + k)·n + l`.
    ///
    /// For a product of one-dimensional factors with a closed-form Ricci
    /// form the only components are `R_{kk̄kk̄} = g_{kk̄} Ric_{kk̄}`.
    pub fn curvature(&self, ginv: &CMatrix) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n * n];
        if let Some(ric) = self.ric.as_ref().filter(|_| self.is_split()) {
            for k in 0..n {
                out[((k * n + k) * n + k) * n + k] = self.g[(k, k)] * ric[(k, k)];
            }
            return out;
        }
        for k in 0..n {
            for l in 0..n {
                let quad = &self.dg[k] * ginv * self.dbar(l);
                for i in 0..n {
                    for j in 0..n {
                        out[((i * n + j) * n + k) * n + l] = quad[(i, j)] - self.ddg[k][l][(i, j)];
                    }
                }
            }
        }
        out
    }

    /// True when `g_{kk̄}` depends on `z_k` alone and all off-diagonal
    /// entries vanish.
    fn is_split(&self) -> bool {
        let n = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        // Entries other than `(k, k)` vanish; with `k = None`, off-diagonal ones.
        let only = |m: &CMatrix, k: Option<usize>| {
            (0..n).all(|i| (0..n).all(|j| m[(i, j)] == zero || (i == j && k.is_none_or(|k| k == i))))
        };
        only(&self.g, None)
            && (0..n).all(|k| only(&self.dg[k], Some(k)))
            && (0..n).all(|k| {
                (0..n).all(|l| {
                    if k == l {
                        only(&self.ddg[k][l], Some(k))
                    } else {
                        self.ddg[k][l].iter().all(|x| *x == zero)
                    }
                })
            })
    }

    /// `∂_k log det g = tr(g⁻¹ ∂_k g)`.
    pub fn log_det_d(&self, ginv: &CMatrix) -> Vec<Complex64> {
        self.dg.iter().map(|d| linalg::trace_product(ginv, d)).collect()
    }

    /// `∂_k∂_l̄ log det g = tr(g⁻¹ ∂_k∂_l̄ g) - tr(g⁻¹ ∂_k g g⁻¹ ∂_l̄ g)`.
    pub fn log_det_ddbar(&self, ginv: &CMatrix) -> CMatrix {
        let n = self.dim();
        let a: Vec<CMatrix> = self.dg.iter().map(|d| ginv * d).collect();
        let b: Vec<CMatrix> = (0..n).map(|l| ginv * self.dbar(l)).collect();
        CMatrix::from_fn(n, n, |k, l| {
            linalg::trace_product(ginv, &self.ddg[k][l]) - linalg::trace_product(&a[k], &b[l])
        })
    }

    /// Ricci form, closed-form when available.
    pub fn ricci(&self, ginv: &CMatrix) -> CMatrix {
        match &self.ric {
            Some(r) => r.clone(),
            None => -self.log_det_ddbar(ginv),
        }
    }
}

/// Real scalar with first and mixed second Wirtinger derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    /// `∂_k f`.
    pub d: Vec<Complex64>,
    /// `∂_k∂_l̄ f`.
    pub dd: CMatrix,
}

impl ScalarJet {
    /// `Δ_g f = g^{kl̄} ∂_k∂_l̄ f`.
    pub fn laplacian(&self, ginv: &CMatrix) -> f64 {
        linalg::trace_product(ginv, &self.dd).re
    }

    /// `|∂f|²_g = g^{kl̄} ∂_k f conj(∂_l f)`.
    pub fn gradient_norm_sq(&self, ginv: &CMatrix) -> f64 {
        let n = self.d.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            for l in 0..n {
                acc += ginv[(l, k)] * self.d[k] * self.d[l].conj();
            }
        }
        acc.re
    }

    /// Jet of `log f` for `f > 0`.
    pub fn log(&self) -> ScalarJet {
        let n = self.d.len();
        let inv = 1.0 / self.value;
        ScalarJet {
            value: self.value.ln(),
            d: self.d.iter().map(|x| x * inv).collect(),
            dd: CMatrix::from_fn(n, n, |k, l| {
                self.dd[(k, l)] * inv - self.d[k] * self.d[l].conj() * (inv * inv)
            }),
        }
    }
}

/// Jet of `log(det h / det g)`.
pub fn log_det_ratio_jet(h: &MetricJet, hinv: &CMatrix, g: &MetricJet, ginv: &CMatrix) -> ScalarJet {
    let dh = h.log_det_d(hinv);
    let dgv = g.log_det_d(ginv);
    ScalarJet {
        value: (linalg::det_real(&h.g) / linalg::det_real(&g.g)).ln(),
        d: dh.iter().zip(&dgv).map(|(a, b)| a - b).collect(),
        dd: match (&h.ric, &g.ric) {
            (Some(rh), Some(rg)) => rg - rh,
            _ => h.log_det_ddbar(hinv) - g.log_det_ddbar(ginv),
        },
    }
}

/// Jet of the trace `u = tr_g h = tr(g⁻¹ h)`.
pub fn trace_jet(g: &MetricJet, ginv: &CMatrix, h: &MetricJet) -> ScalarJet {
    let n = g.dim();
    // ∂_k u = tr(-g⁻¹ ∂_k g g⁻¹ h + g⁻¹ ∂_k h)
    let gi_h = ginv * &h.g;
    let gi_dg: Vec<CMatrix> = g.dg.iter().map(|d| ginv * d).collect();
    let gi_dgb: Vec<CMatrix> = (0..n).map(|l| ginv * g.dbar(l)).collect();
    let gi_dh: Vec<CMatrix> = h.dg.iter().map(|d| ginv * d).collect();
    let gi_dhb: Vec<CMatrix> = (0..n).map(|l| ginv * h.dbar(l)).collect();
    let d: Vec<Complex64> = (0..n)
        .map(|k| gi_dh[k].trace() - (&gi_dg[k] * &gi_h).trace())
        .collect();
    let dd = CMatrix::from_fn(n, n, |k, l| {
        let t1 = (&gi_dgb[l] * &gi_dg[k] * &gi_h).trace();
        let t2 = (&gi_dg[k] * &gi_dgb[l] * &gi_h).trace();
        let t3 = (ginv * &g.ddg[k][l] * &gi_h).trace();
        let t4 = (&gi_dg[k] * &gi_dhb[l]).trace();
        let t5 = (&gi_dgb[l] * &gi_dh[k]).trace();
        let t6 = (ginv * &h.ddg[k][l]).trace();
        t1 + t2 - t3 - t4 - t5 + t6
    });
    ScalarJet {
        value: gi_h.trace().re,
        d,
        dd,
    }
}

/// Jet of `log tr_g h`. In one dimension `u = h / g`, and with closed-form
/// Ricci forms this avoids cancelling second derivatives.
pub fn log_trace_jet(g: &MetricJet, ginv: &CMatrix, h: &MetricJet) -> ScalarJet {
    if g.dim() == 1 && g.ric.is_some() && h.ric.is_some() {
        if let Some(hinv) = linalg::inverse(&h.g) {
            return log_det_ratio_jet(h, &hinv, g, ginv);
        }
    }
    trace_jet(g, ginv, h).log()
}
