//! Holomorphic maps with exact derivatives, pullback metrics, and the
//! trace `u` and volume ratio `v` of a map between Kähler charts.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartGrid, PolarPoint, ScalarField};
use crate::linalg::{self, CMatrix};
use crate::metrics::{DomainResult, HermitianMetricField, JetSource, MetricJet, ModelMetric};
use crate::{Error, Result};

/// Map descriptor. Components act on consecutive coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolomorphicMapModel {
    /// `z ↦ z^k`.
    Power { k: u32 },
    /// `z ↦ (z - a) / (1 - ā z)`.
    Blaschke { a: Complex64 },
    /// One map per block of coordinates.
    MonomialProduct { components: Vec<HolomorphicMapModel> },
    /// Applied first element first.
    Composite { maps: Vec<HolomorphicMapModel> },
}

/// Value, Jacobian `J[(α, i)] = ∂_i f^α` and Hessians `∂_i∂_k f^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    pub target: Vec<PolarPoint>,
    pub jac: CMatrix,
    pub hess: Vec<CMatrix>,
}

impl MapJet {
    pub fn det(&self) -> Complex64 {
        let n = self.jac.nrows();
        if n == 1 {
            self.jac[(0, 0)]
        } else {
            self.jac.determinant()
        }
    }

    /// `∂_k J`, i.e. the matrix `(α, i) ↦ ∂_i∂_k f^α`.
    fn d_jac(&self, k: usize) -> CMatrix {
        let n = self.jac.nrows();
        CMatrix::from_fn(n, self.jac.ncols(), |a, i| self.hess[a][(i, k)])
    }
}

fn one_dim(target: PolarPoint, d1: Complex64, d2: Complex64) -> MapJet {
    MapJet {
        target: vec![target],
        jac: CMatrix::from_element(1, 1, d1),
        hess: vec![CMatrix::from_element(1, 1, d2)],
    }
}

impl HolomorphicMapModel {
    pub fn power(k: u32) -> Self {
        HolomorphicMapModel::Power { k }
    }

    pub fn identity(n: usize) -> Self {
        if n == 1 {
            Self::power(1)
        } else {
            HolomorphicMapModel::MonomialProduct {
                components: vec![Self::power(1); n],
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            HolomorphicMapModel::Power { .. } | HolomorphicMapModel::Blaschke { .. } => 1,
            HolomorphicMapModel::MonomialProduct { components } => components.iter().map(|c| c.dim()).sum(),
            HolomorphicMapModel::Composite { maps } => maps.first().map_or(0, |m| m.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HolomorphicMapModel::Power { k } => {
                if *k == 0 {
                    return Err(Error::param("k", "power must be a positive integer"));
                }
                Ok(())
            }
            HolomorphicMapModel::Blaschke { a } => {
                if !(a.norm() < 1.0) {
                    return Err(Error::param("a", format!("Blaschke zero must satisfy |a| < 1, got {a}")));
                }
                Ok(())
            }
            HolomorphicMapModel::MonomialProduct { components } => {
                if components.is_empty() {
                    return Err(Error::param("components", "need at least one component"));
                }
                components.iter().try_for_each(|c| c.validate())
            }
            HolomorphicMapModel::Composite { maps } => {
                let first = maps.first().ok_or_else(|| Error::param("maps", "need at least one map"))?;
                for m in maps {
                    m.validate()?;
                    if m.dim() != first.dim() {
                        return Err(Error::param("maps", "composed maps must share a dimension"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Vanishing order along the divisor `{z¹ = 0}`, the `k` of `f*E = kD`.
    pub fn divisor_order(&self) -> u32 {
        match self {
            HolomorphicMapModel::Power { k } => *k,
            HolomorphicMapModel::Blaschke { a } => u32::from(*a == Complex64::new(0.0, 0.0)),
            HolomorphicMapModel::MonomialProduct { components } => {
                components.first().map_or(0, |c| c.divisor_order())
            }
            HolomorphicMapModel::Composite { maps } => maps.iter().map(|m| m.divisor_order()).product(),
        }
    }

    pub fn jet(&self, point: &[PolarPoint]) -> MapJet {
        match self {
            HolomorphicMapModel::Power { k } => {
                let p = point[0];
                let kf = f64::from(*k);
                let w = Complex64::new(p.rho, p.theta);
                let d1 = kf * ((kf - 1.0) * w).exp();
                let d2 = if *k == 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    kf * (kf - 1.0) * ((kf - 2.0) * w).exp()
                };
                let theta = (kf * p.theta).rem_euclid(std::f64::consts::TAU);
                one_dim(PolarPoint::new(kf * p.rho, theta), d1, d2)
            }
            HolomorphicMapModel::Blaschke { a } => {
                let z = point[0].z();
                let one = Complex64::new(1.0, 0.0);
                let den = one - a.conj() * z;
                let s = 1.0 - a.norm_sqr();
                one_dim(
                    PolarPoint::from_complex((z - a) / den),
                    s / (den * den),
                    2.0 * a.conj() * s / (den * den * den),
                )
            }
            HolomorphicMapModel::MonomialProduct { components } => {
                let n = self.dim();
                let mut target = Vec::with_capacity(n);
                let mut jac = CMatrix::zeros(n, n);
                let mut hess = Vec::with_capacity(n);
                let mut off = 0;
                for c in components {
                    let m = c.dim();
                    let j = c.jet(&point[off..off + m]);
                    target.extend(j.target);
                    jac.view_mut((off, off), (m, m)).copy_from(&j.jac);
                    for h in j.hess {
                        let mut full = CMatrix::zeros(n, n);
                        full.view_mut((off, off), (m, m)).copy_from(&h);
                        hess.push(full);
                    }
                    off += m;
                }
                MapJet { target, jac, hess }
            }
            HolomorphicMapModel::Composite { maps } => {
                let mut acc = maps[0].jet(point);
                for g in &maps[1..] {
                    let outer = g.jet(&acc.target);
                    let n = acc.jac.nrows();
                    let hess = (0..n)
                        .map(|a| {
                            let mut h = acc.jac.transpose() * &outer.hess[a] * &acc.jac;
                            for b in 0..n {
                                h += &acc.hess[b] * outer.jac[(a, b)];
                            }
                            h
                        })
                        .collect();
                    acc = MapJet {
                        target: outer.target,
                        jac: &outer.jac * &acc.jac,
                        hess,
                    };
                }
                acc
            }
        }
    }
}

/// `f*g_Y` as a closed-form jet source.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub map: HolomorphicMapModel,
    pub target: ModelMetric,
}

impl Pullback {
    pub fn new(map: HolomorphicMapModel, target: ModelMetric) -> Result<Self> {
        map.validate()?;
        target.validate()?;
        if map.dim() != target.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional map into a {}-dimensional target",
                map.dim(),
                target.dim()
            )));
        }
        Ok(Self { map, target })
    }

    /// Map jet and target jet at the image point.
    pub fn parts(&self, point: &[PolarPoint]) -> DomainResult<(MapJet, MetricJet)> {
        let f = self.map.jet(point);
        let h = self.target.jet(&f.target)?;
        Ok((f, h))
    }
}

/// `Aᵀ M conj(B)`.
fn sandwich(a: &CMatrix, m: &CMatrix, b: &CMatrix) -> CMatrix {
    a.transpose() * m * b.conjugate()
}

impl JetSource for Pullback {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn jet(&self, point: &[PolarPoint]) -> DomainResult<MetricJet> {
        let (f, h) = self.parts(point)?;
        let n = f.jac.nrows();
        let j = &f.jac;
        let dj: Vec<CMatrix> = (0..n).map(|k| f.d_jac(k)).collect();
        let g = sandwich(j, &h.g, j);
        let dg: Vec<CMatrix> = (0..n)
            .map(|k| {
                let mut out = sandwich(&dj[k], &h.g, j);
                for c in 0..n {
                    out += sandwich(j, &h.dg[c], j) * j[(c, k)];
                }
                out
            })
            .collect();
        let ddg = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let mut out = sandwich(&dj[k], &h.g, &dj[l]);
                        for c in 0..n {
                            out += sandwich(j, &h.dg[c], &dj[l]) * j[(c, k)];
                            out += sandwich(&dj[k], &h.dbar(c), j) * j[(c, l)].conj();
                            for d in 0..n {
                                out += sandwich(j, &h.ddg[c][d], j) * (j[(c, k)] * j[(d, l)].conj());
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        let ric = h.ric.as_ref().map(|r| sandwich(j, r, j));
        Ok(MetricJet { g, dg, ddg, ric })
    }
}

fn check_dims(f: &HolomorphicMapModel, gx: &HermitianMetricField, gy: &ModelMetric) -> Result<()> {
    if f.dim() != gx.dim() || gy.dim() != gx.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source dim {}, map dim {}, target dim {}",
            gx.dim(),
            f.dim(),
            gy.dim()
        )));
    }
    Ok(())
}

/// `h_{ij̄} = (h_{αβ̄}∘f) ∂_i f^α conj(∂_j f^β)`, with analytic jets.
pub fn pullback_metric(
    f: &HolomorphicMapModel,
    gy: &ModelMetric,
    grid: Arc<ChartGrid>,
) -> Result<HermitianMetricField> {
    let source = Pullback::new(f.clone(), gy.clone())?;
    HermitianMetricField::from_source(Arc::new(source), grid, false)
}

/// `det J(f)` per point.
pub fn jacobian_det(f: &HolomorphicMapModel, grid: Arc<ChartGrid>) -> Result<ScalarField> {
    f.validate()?;
    if f.dim() != grid.dim() {
        return Err(Error::DimensionMismatch("map and chart dimensions differ".into()));
    }
    Ok(ScalarField::from_fn(grid, |p| f.jet(p).det()))
}

fn image_jet(f: &HolomorphicMapModel, gy: &ModelMetric, grid: &ChartGrid, idx: usize) -> Result<(MapJet, CMatrix)> {
    let jet = f.jet(&grid.point(idx));
    let h = gy
        .coefficient(&jet.target)
        .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
    Ok((jet, h))
}

/// `v = det(h∘f) |det J|² / det g`.
pub fn volume_ratio(
    f: &HolomorphicMapModel,
    gx: &HermitianMetricField,
    gy: &ModelMetric,
) -> Result<ScalarField> {
    check_dims(f, gx, gy)?;
    let grid = gx.grid();
    ScalarField::try_from_index_fn(grid.clone(), |idx| {
        let (jet, h) = image_jet(f, gy, grid, idx)?;
        let v = linalg::det_real(&h) * jet.det().norm_sqr() / linalg::det_real(gx.coeff(idx));
        Ok(Complex64::new(v, 0.0))
    })
}

/// `v` through `det(f*g_Y) / det g`, the second route to the same ratio.
pub fn volume_ratio_via_pullback(
    f: &HolomorphicMapModel,
    gx: &HermitianMetricField,
    gy: &ModelMetric,
) -> Result<ScalarField> {
    check_dims(f, gx, gy)?;
    let grid = gx.grid();
    ScalarField::try_from_index_fn(grid.clone(), |idx| {
        let (jet, h) = image_jet(f, gy, grid, idx)?;
        let pb = sandwich(&jet.jac, &h, &jet.jac);
        Ok(Complex64::new(linalg::det_real(&pb) / linalg::det_real(gx.coeff(idx)), 0.0))
    })
}

/// `u = g^{ij̄} h_{ij̄}`.
pub fn trace(f: &HolomorphicMapModel, gx: &HermitianMetricField, gy: &ModelMetric) -> Result<ScalarField> {
    check_dims(f, gx, gy)?;
    let grid = gx.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (jet, h) = image_jet(f, gy, grid, idx)?;
            let pb = sandwich(&jet.jac, &h, &jet.jac);
            Ok(Complex64::new(linalg::trace_product(&gx.inverse(idx)?, &pb).re, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::LogPolarGrid;

    fn chart(r0: f64, r1: f64) -> Arc<ChartGrid> {
        Arc::new(ChartGrid::single(LogPolarGrid::annulus(r0, r1, 32, 16).unwrap()).unwrap())
    }

    #[test]
    fn power_pullback_of_flat_cone() {
        let (k, beta) = (3u32, 0.4f64);
        let grid = chart(1e-3, 0.9);
        let pb = pullback_metric(&HolomorphicMapModel::power(k), &ModelMetric::standard_cone(beta), grid.clone())
            .unwrap();
        let kf = f64::from(k);
        for idx in 0..grid.len() {
            let r = grid.divisor_distance(idx);
            let exact = beta * beta * kf * kf * r.powf(2.0 * (kf * beta - 1.0));
            assert!((pb.coeff(idx)[(0, 0)].re / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_pullback_of_poincare_is_hyperbolic_pattern() {
        let k = 2u32;
        let grid = chart(1e-2, 0.9);
        let pb = pullback_metric(&HolomorphicMapModel::power(k), &ModelMetric::poincare(), grid.clone()).unwrap();
        for idx in 0..grid.len() {
            let t = grid.divisor_distance(idx);
            let exact = 4.0 * t * t / (1.0 - t.powi(4)).powi(2);
            assert!((pb.coeff(idx)[(0, 0)].re / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_of_composite() {
        let grid = chart(0.1, 0.9);
        let f = HolomorphicMapModel::Composite {
            maps: vec![HolomorphicMapModel::power(2), HolomorphicMapModel::power(3)],
        };
        let d = jacobian_det(&f, grid.clone()).unwrap();
        for idx in 0..grid.len() {
            let z = grid.z(idx, 0);
            assert!((d.get(idx) - 6.0 * z.powi(5)).norm() < 1e-12);
        }
        assert_eq!(f.divisor_order(), 6);
    }

    #[test]
    fn pullback_outside_disk_names_the_point() {
        let grid = chart(0.5, 1.5);
        match pullback_metric(&HolomorphicMapModel::power(2), &ModelMetric::poincare(), grid) {
            Err(Error::OutsideDomain { index, .. }) => assert!(index > 0),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn blaschke_derivatives_are_exact() {
        let a = Complex64::new(0.3, -0.2);
        let f = HolomorphicMapModel::Blaschke { a };
        let z = Complex64::new(0.2, 0.4);
        let b = |z: Complex64| (z - a) / (1.0 - a.conj() * z);
        let h = 1e-5;
        let jet = f.jet(&[PolarPoint::from_complex(z)]);
        let fd1 = (b(z + h) - b(z - h)) / (2.0 * h);
        assert!((jet.jac[(0, 0)] - fd1).norm() < 1e-9);
        assert!((jet.target[0].z() - b(z)).norm() < 1e-14);
        assert!(HolomorphicMapModel::Blaschke { a: Complex64::new(1.0, 0.0) }.validate().is_err());
    }
}
