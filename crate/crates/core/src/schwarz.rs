//! Chern–Lu residuals, curvature-bound certification, and the supremum
//! checks of the volume and trace Schwarz inequalities in both angle regimes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chart::{ChartGrid, ScalarField, BOUNDARY_ROWS};
use crate::cone::ConeStructure;
use crate::linalg::{self, CMatrix};
use crate::maps::{self, HolomorphicMapModel, Pullback};
use crate::metrics::{
    bisectional_jet, log_det_ratio_jet, log_trace_jet, metric_laplacian, ricci, CurvatureBounds, HermitianMetricField,
    JetSource, MetricJet, ModelMetric,
};
use crate::{Error, Result};

/// Points where `v` (or `u`) falls below this are excluded from scans.
pub const MASK_THRESHOLD: f64 = 1e-14;

/// Safety margin on bounds measured from finite-difference curvature.
pub const FD_MARGIN: f64 = 0.01;

/// Random direction pairs per sampled point for bisectional bounds.
pub const DIRECTION_PAIRS: usize = 1000;

/// Upper limit on points sampled for bisectional bounds when `n ≥ 2`.
pub const MAX_BISECTIONAL_POINTS: usize = 256;

/// Ratio within this distance of 1 everywhere is reported as equality.
pub const EQUALITY_TOLERANCE: f64 = 1e-8;

/// A holomorphic map between a sampled source and a model target.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub map: &'a HolomorphicMapModel,
    pub gx: &'a HermitianMetricField,
    pub gy: &'a ModelMetric,
}

impl Problem<'_> {
    pub fn dim(&self) -> usize {
        self.gx.dim()
    }

    fn pullback(&self) -> Result<Pullback> {
        if self.map.dim() != self.gx.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional map on a {}-dimensional source",
                self.map.dim(),
                self.gx.dim()
            )));
        }
        Pullback::new(self.map.clone(), self.gy.clone())
    }

    fn grid(&self) -> &ChartGrid {
        self.gx.grid()
    }

    fn target_jet(&self, src: &Pullback, idx: usize) -> Result<MetricJet> {
        let (f, _) = src
            .parts(&self.grid().point(idx))
            .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
        self.gy
            .jet(&f.target)
            .map_err(|reason| Error::OutsideDomain { index: idx, reason })
    }

    /// Points entering suprema: every point for analytic sources, interior
    /// points otherwise.
    pub fn scan_points(&self) -> Vec<usize> {
        let grid = self.grid();
        if self.gx.is_analytic() {
            (0..grid.len()).collect()
        } else {
            (0..grid.len()).filter(|&i| grid.is_interior(i)).collect()
        }
    }
}

/// Cone angles and vanishing order; `α = 1` or `β = 1` for smooth metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub alpha: f64,
    pub beta: f64,
    pub k: u32,
}

impl Angles {
    /// `ℓ = α - kβ` when positive.
    pub fn ell(&self) -> Option<f64> {
        let ell = self.alpha - f64::from(self.k) * self.beta;
        (ell > 1e-12).then_some(ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `R(g_X) ≥ -A`, `Ric(g_Y) ≤ -B g_Y`.
    Volume,
    /// `Ric(g_X) ≥ -A g_X`, `Bisec(g_Y) ≤ -B`.
    Trace,
}

/// Bounds measured on the grid, with where the extremes occur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub bounds: CurvatureBounds,
    /// Bounds before the safety margin.
    pub raw: CurvatureBounds,
    pub margin: f64,
    pub a_index: usize,
    pub b_index: usize,
}

fn arg_min(values: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    values.fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) })
}

fn arg_max(values: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    values.fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) })
}

/// Random unit-free complex direction.
fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if v.iter().any(|c| c.norm() > 1e-3) {
            return v;
        }
    }
}

fn axis(n: usize, i: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0)).collect()
}

/// Largest bisectional curvature of a target jet over the coordinate axes
/// and `pairs` seeded random direction pairs.
pub fn max_bisectional(jet: &MetricJet, pairs: usize, seed: u64) -> Result<f64> {
    let n = jet.dim();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(bisectional_jet(jet, &axis(n, i), &axis(n, j))?);
        }
    }
    if n == 1 {
        // Every pair of directions is proportional in one dimension.
        return Ok(worst);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let xi = random_direction(&mut rng, n);
        let eta = random_direction(&mut rng, n);
        worst = worst.max(bisectional_jet(jet, &xi, &eta)?);
    }
    Ok(worst)
}

/// Measures `A`, `B` (and `C` when a cone is given) on the grid.
pub fn certify_bounds(
    problem: Problem<'_>,
    kind: BoundKind,
    cone: Option<&ConeStructure>,
    seed: u64,
) -> Result<Certification> {
    let src = problem.pullback()?;
    let gx = problem.gx;
    let scan = problem.scan_points();
    let ric = ricci(gx)?;

    let a_vals = scan
        .par_iter()
        .map(|&idx| {
            let ginv = gx.inverse(idx)?;
            let r = ric.matrix(idx);
            let v = match kind {
                BoundKind::Volume => linalg::trace_product(&ginv, &r).re,
                BoundKind::Trace => linalg::relative_eigenvalues(&r, gx.coeff(idx))
                    .map(|e| e[0])
                    .ok_or(Error::NotPositiveDefinite {
                        index: idx,
                        radius: gx.grid().divisor_distance(idx),
                    })?,
            };
            Ok((idx, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a_index, a_min) = arg_min(a_vals.into_iter());

    let b_points: Vec<usize> = match kind {
        BoundKind::Trace if problem.dim() >= 2 && scan.len() > MAX_BISECTIONAL_POINTS => {
            let step = scan.len() / MAX_BISECTIONAL_POINTS;
            scan.iter().step_by(step).copied().take(MAX_BISECTIONAL_POINTS).collect()
        }
        _ => scan.clone(),
    };
    let b_vals = b_points
        .par_iter()
        .map(|&idx| {
            let jet = problem.target_jet(&src, idx)?;
            let v = match kind {
                BoundKind::Volume => {
                    let r = jet.ric.clone().expect("model targets carry their Ricci form");
                    let e = linalg::relative_eigenvalues(&r, &jet.g).ok_or(Error::NotPositiveDefinite {
                        index: idx,
                        radius: gx.grid().divisor_distance(idx),
                    })?;
                    e[e.len() - 1]
                }
                BoundKind::Trace => max_bisectional(&jet, DIRECTION_PAIRS, seed.wrapping_add(idx as u64))?,
            };
            Ok((idx, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let (b_index, b_max) = arg_max(b_vals.into_iter());

    let c_raw = match cone {
        Some(c) => c.curvature_bound(gx)?,
        None => 0.0,
    };
    let raw = CurvatureBounds {
        a: (-a_min).max(0.0),
        b: (-b_max).max(0.0),
        c: c_raw,
    };
    let margin = if gx.is_analytic() { 0.0 } else { FD_MARGIN };
    Ok(Certification {
        bounds: CurvatureBounds {
            a: raw.a * (1.0 + margin),
            b: raw.b * (1.0 - margin),
            c: raw.c * (1.0 + margin),
        },
        raw,
        margin,
        a_index,
        b_index,
    })
}

/// Rejects supplied bounds that the grid does not support.
pub fn verify_bounds(
    problem: Problem<'_>,
    kind: BoundKind,
    bounds: &CurvatureBounds,
    cone: Option<&ConeStructure>,
    seed: u64,
) -> Result<Certification> {
    bounds.validate()?;
    let cert = certify_bounds(problem, kind, cone, seed)?;
    let slack = |x: f64| 1e-12 * x.abs().max(1.0) + cert.margin * x.abs();
    let grid = problem.grid();
    let fail = |bound: &str, detail: String, index: usize| Error::Uncertified {
        bound: bound.into(),
        detail,
        index,
        radius: grid.divisor_distance(index),
    };
    let (a_what, b_what) = match kind {
        BoundKind::Volume => ("scalar curvature of the source", "Ricci curvature of the target"),
        BoundKind::Trace => ("Ricci curvature of the source", "bisectional curvature of the target"),
    };
    if bounds.a + slack(cert.raw.a) < cert.raw.a {
        return Err(fail(
            "A",
            format!("{a_what} reaches {:.6e} < -{}", -cert.raw.a, bounds.a),
            cert.a_index,
        ));
    }
    if bounds.b > cert.raw.b + slack(cert.raw.b) {
        return Err(fail(
            "B",
            format!("{b_what} reaches {:.6e} > -{}", -cert.raw.b, bounds.b),
            cert.b_index,
        ));
    }
    if cone.is_some() && bounds.c + slack(cert.raw.c) < cert.raw.c {
        return Err(fail("C", format!("weight curvature needs C ≥ {:.6e}", cert.raw.c), 0));
    }
    Ok(cert)
}

/// Pointwise Chern–Lu residuals. Entries are `NaN` outside the scan or
/// where the quantity is masked.
#[derive(Debug, Clone)]
pub struct Residual {
    /// `v` or `u`.
    pub quantity: Vec<f64>,
    /// `Δ log q - (rhs)`.
    pub log_form: Vec<f64>,
    /// `Δ q - q (rhs)`.
    pub plain_form: Vec<f64>,
    pub masked: usize,
    pub worst: f64,
    pub worst_index: usize,
}

fn finish_residual(quantity: Vec<f64>, log_form: Vec<f64>, plain_form: Vec<f64>, masked: usize) -> Residual {
    let (worst_index, worst) = arg_min(
        log_form
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(i, &v)| (i, v)),
    );
    Residual {
        quantity,
        log_form,
        plain_form,
        masked,
        worst: if worst.is_finite() { worst } else { 0.0 },
        worst_index,
    }
}

/// Per point: `(q, Δ log q, |∂ log q|²)` or `None` when masked.
type Local = Option<(f64, f64, f64)>;

fn local_analytic(problem: Problem<'_>, src: &Pullback, kind: BoundKind, idx: usize) -> Result<Local> {
    let gj = problem.gx.jet_at(idx)?;
    let ginv = problem.gx.inverse(idx)?;
    let hj = src
        .jet(&problem.grid().point(idx))
        .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
    match kind {
        BoundKind::Volume => {
            let v = linalg::det_real(&hj.g) / linalg::det_real(&gj.g);
            if !(v >= MASK_THRESHOLD) {
                return Ok(None);
            }
            let hinv = linalg::inverse(&hj.g).ok_or(Error::Singular {
                index: idx,
                radius: problem.grid().divisor_distance(idx),
            })?;
            let l = log_det_ratio_jet(&hj, &hinv, &gj, &ginv);
            Ok(Some((v, l.laplacian(&ginv), l.gradient_norm_sq(&ginv))))
        }
        BoundKind::Trace => {
            let l = log_trace_jet(&gj, &ginv, &hj);
            let u = l.value.exp();
            if !(u >= MASK_THRESHOLD) {
                return Ok(None);
            }
            Ok(Some((u, l.laplacian(&ginv), l.gradient_norm_sq(&ginv))))
        }
    }
}

fn rhs(kind: BoundKind, n: usize, bounds: &CurvatureBounds, q: f64) -> f64 {
    match kind {
        BoundKind::Volume => n as f64 * bounds.b * q.powf(1.0 / n as f64) - bounds.a,
        BoundKind::Trace => bounds.b * q - bounds.a,
    }
}

fn chern_lu_residual(problem: Problem<'_>, kind: BoundKind, bounds: &CurvatureBounds) -> Result<Residual> {
    let src = problem.pullback()?;
    let grid = problem.grid();
    let n = problem.dim();
    let scan = problem.scan_points();
    let mut in_scan = vec![false; grid.len()];
    for &i in &scan {
        in_scan[i] = true;
    }

    let locals: Vec<Local> = if problem.gx.is_analytic() {
        (0..grid.len())
            .into_par_iter()
            .map(|idx| local_analytic(problem, &src, kind, idx))
            .collect::<Result<_>>()?
    } else {
        let q = match kind {
            BoundKind::Volume => maps::volume_ratio(problem.map, problem.gx, problem.gy)?,
            BoundKind::Trace => maps::trace(problem.map, problem.gx, problem.gy)?,
        };
        let log_q = q.map(|c| Complex64::new(c.re.max(MASK_THRESHOLD).ln(), 0.0));
        let lap_log = metric_laplacian(problem.gx, &log_q)?;
        let lap = metric_laplacian(problem.gx, &q)?;
        (0..grid.len())
            .map(|idx| {
                let v = q.re(idx);
                if !(v >= MASK_THRESHOLD) {
                    return Ok(None);
                }
                Ok(Some((v, lap_log.re(idx), lap.re(idx) / v - lap_log.re(idx))))
            })
            .collect::<Result<_>>()?
    };

    let mut quantity = vec![f64::NAN; grid.len()];
    let mut log_form = vec![f64::NAN; grid.len()];
    let mut plain_form = vec![f64::NAN; grid.len()];
    let mut masked = 0;
    for (idx, local) in locals.into_iter().enumerate() {
        if !in_scan[idx] {
            continue;
        }
        match local {
            None => masked += 1,
            Some((q, lap_log, grad)) => {
                let r = rhs(kind, n, bounds, q);
                quantity[idx] = q;
                log_form[idx] = lap_log - r;
                plain_form[idx] = q * (lap_log + grad) - q * r;
            }
        }
    }
    Ok(finish_residual(quantity, log_form, plain_form, masked))
}

/// `Δ log v - (nB v^{1/n} - A)` and `Δ v - v (nB v^{1/n} - A)`.
pub fn chern_lu_volume_residual(
    problem: Problem<'_>,
    bounds: &CurvatureBounds,
    seed: u64,
) -> Result<Residual> {
    verify_bounds(problem, BoundKind::Volume, bounds, None, seed)?;
    chern_lu_residual(problem, BoundKind::Volume, bounds)
}

/// `Δ log u - (B u - A)` and `Δ u - u (B u - A)`.
pub fn chern_lu_trace_residual(
    problem: Problem<'_>,
    bounds: &CurvatureBounds,
    seed: u64,
) -> Result<Residual> {
    verify_bounds(problem, BoundKind::Trace, bounds, None, seed)?;
    chern_lu_residual(problem, BoundKind::Trace, bounds)
}

/// One radius of a supremum scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub radius: f64,
    pub value: f64,
    pub ratio: f64,
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub inequality_id: String,
    pub n: usize,
    pub angles: Angles,
    pub bounds: CurvatureBounds,
    pub tolerance: f64,
    /// Supremum ratio for theorem checks, minimum residual otherwise.
    pub statistic: f64,
    pub worst_residual: f64,
    pub worst_index: usize,
    pub worst_radius: f64,
    pub masked_points: usize,
    pub near_boundary: bool,
    pub pass: bool,
    pub note: String,
    /// Per divisor row, outermost last.
    pub profile: Vec<ProfileRow>,
}

impl InequalityReport {
    pub fn ell(&self) -> Option<f64> {
        self.angles.ell()
    }
}

fn near_boundary(grid: &ChartGrid, idx: usize) -> bool {
    let row = grid.divisor_row(idx);
    row <= BOUNDARY_ROWS || row + BOUNDARY_ROWS + 1 >= grid.factor(0).n_rho
}

/// Report for a residual whose contract is `≥ -tol`.
pub fn residual_report(
    id: &str,
    problem: Problem<'_>,
    residual: &Residual,
    angles: Angles,
    bounds: CurvatureBounds,
    tolerance: f64,
) -> InequalityReport {
    let grid = problem.grid();
    InequalityReport {
        inequality_id: id.into(),
        n: problem.dim(),
        angles,
        bounds,
        tolerance,
        statistic: residual.worst,
        worst_residual: residual.worst,
        worst_index: residual.worst_index,
        worst_radius: grid.divisor_distance(residual.worst_index),
        masked_points: residual.masked,
        near_boundary: near_boundary(grid, residual.worst_index),
        pass: residual.worst >= -tolerance,
        note: String::new(),
        profile: row_profile(grid, &residual.quantity, &residual.log_form),
    }
}

/// Row-wise maxima of `value` and `ratio` over scanned points.
fn row_profile(grid: &ChartGrid, value: &[f64], ratio: &[f64]) -> Vec<ProfileRow> {
    let f0 = grid.factor(0);
    let mut rows = vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); f0.n_rho];
    for idx in 0..grid.len() {
        if ratio[idx].is_nan() {
            continue;
        }
        let r = &mut rows[grid.divisor_row(idx)];
        r.0 = r.0.max(value[idx]);
        r.1 = r.1.max(ratio[idx]);
    }
    rows.into_iter()
        .enumerate()
        .filter(|(_, (v, _))| v.is_finite())
        .map(|(i, (value, ratio))| ProfileRow {
            radius: f0.rho(i).exp(),
            value,
            ratio,
        })
        .collect()
}

/// `ℓ` (when `α > kβ`) and `(A + ℓC)/B`.
fn regime(angles: Angles, bounds: &CurvatureBounds) -> (Option<f64>, f64) {
    let ell = angles.ell();
    (ell, (bounds.a + ell.unwrap_or(0.0) * bounds.c) / bounds.b)
}

fn theorem_report(
    id: &str,
    problem: Problem<'_>,
    angles: Angles,
    bounds: CurvatureBounds,
    tolerance: f64,
    value: Vec<f64>,
    ratio: Vec<f64>,
    masked: usize,
) -> InequalityReport {
    let grid = problem.grid();
    let (worst_index, sup) = arg_max(
        ratio
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_nan())
            .map(|(i, &r)| (i, r)),
    );
    let equality = ratio
        .iter()
        .filter(|r| !r.is_nan())
        .all(|r| (r - 1.0).abs() <= EQUALITY_TOLERANCE);
    let worst_residual = 1.0 - sup;
    InequalityReport {
        inequality_id: id.into(),
        n: problem.dim(),
        angles,
        bounds,
        tolerance,
        statistic: sup,
        worst_residual,
        worst_index,
        worst_radius: grid.divisor_distance(worst_index),
        masked_points: masked,
        near_boundary: near_boundary(grid, worst_index),
        pass: worst_residual >= -tolerance,
        note: if equality { "equality_case".into() } else { String::new() },
        profile: row_profile(grid, &value, &ratio),
    }
}

/// Supremum of `v / (A/(nB))ⁿ`, or of `|s|_h^{2ℓ} v / ((A+ℓC)/(nB))ⁿ`
/// when `α > kβ`.
pub fn theorem_volume_check(
    problem: Problem<'_>,
    angles: Angles,
    cone: &ConeStructure,
    bounds: &CurvatureBounds,
    tolerance: f64,
    seed: u64,
) -> Result<InequalityReport> {
    bounds.require_positive_b()?;
    verify_bounds(problem, BoundKind::Volume, bounds, Some(cone), seed)?;
    let n = problem.dim();
    let (ell, per_dim) = regime(angles, bounds);
    let constant = (per_dim / n as f64).powi(n as i32);
    let v = maps::volume_ratio(problem.map, problem.gx, problem.gy)?;
    let grid = problem.grid();
    let mut value = vec![f64::NAN; grid.len()];
    let mut ratio = vec![f64::NAN; grid.len()];
    let mut masked = 0;
    for idx in problem.scan_points() {
        let q = v.re(idx);
        if !(q >= MASK_THRESHOLD) {
            masked += 1;
            continue;
        }
        let weight = ell.map_or(1.0, |l| cone.s_power(grid.polar(idx, 0), l));
        value[idx] = q;
        ratio[idx] = weight * q / constant;
    }
    let id = if ell.is_some() { "volume_b" } else { "volume_a" };
    Ok(theorem_report(id, problem, angles, *bounds, tolerance, value, ratio, masked))
}

/// Largest eigenvalue of `|s|_h^{2ℓ} f*g_Y` relative to `c g_X`, where
/// `c` is `constant`; at most 1 means `c g_X - |s|^{2ℓ} f*g_Y ⪰ 0`.
pub fn form_comparison(
    problem: Problem<'_>,
    constant: f64,
    weight: Option<(f64, &ConeStructure)>,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let src = problem.pullback()?;
    let grid = problem.grid();
    let scan = problem.scan_points();
    let per_point = scan
        .par_iter()
        .map(|&idx| {
            let (f, h) = src
                .parts(&grid.point(idx))
                .map_err(|reason| Error::OutsideDomain { index: idx, reason })?;
            let pb: CMatrix = f.jac.transpose() * &h.g * f.jac.conjugate();
            let eig = linalg::relative_eigenvalues(&pb, problem.gx.coeff(idx)).ok_or(Error::NotPositiveDefinite {
                index: idx,
                radius: grid.divisor_distance(idx),
            })?;
            let top = eig[eig.len() - 1];
            let u: f64 = eig.iter().sum();
            let w = weight.map_or(1.0, |(l, cone)| cone.s_power(grid.polar(idx, 0), l));
            Ok((idx, u, w * top / constant))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut value = vec![f64::NAN; grid.len()];
    let mut ratio = vec![f64::NAN; grid.len()];
    let mut masked = 0;
    for (idx, u, r) in per_point {
        if !(u >= MASK_THRESHOLD) {
            masked += 1;
            continue;
        }
        value[idx] = u;
        ratio[idx] = r;
    }
    Ok((value, ratio, masked))
}

/// `(A/B) g_X - f*g_Y ⪰ 0`, or the `|s|_h^{2ℓ}`-weighted version with
/// `(A + ℓC)/B` when `α > kβ`; the statistic is the largest relative
/// eigenvalue normalized by that constant.
pub fn theorem_trace_check(
    problem: Problem<'_>,
    angles: Angles,
    cone: &ConeStructure,
    bounds: &CurvatureBounds,
    tolerance: f64,
    seed: u64,
) -> Result<InequalityReport> {
    bounds.require_positive_b()?;
    verify_bounds(problem, BoundKind::Trace, bounds, Some(cone), seed)?;
    let (ell, constant) = regime(angles, bounds);
    let (value, ratio, masked) = form_comparison(problem, constant, ell.map(|l| (l, cone)))?;
    let id = if ell.is_some() { "trace_b" } else { "trace_a" };
    Ok(theorem_report(id, problem, angles, *bounds, tolerance, value, ratio, masked))
}

/// Least-squares slope of `log value` against `log radius` over profile
/// rows within `decades` of the innermost radius.
pub fn log_log_slope(profile: &[ProfileRow], decades: f64) -> Option<f64> {
    let r0 = profile.first()?.radius;
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| p.radius <= r0 * 10f64.powf(decades) * (1.0 + 1e-12) && p.value > 0.0)
        .map(|p| (p.radius.ln(), p.value.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Root of `tⁿ(nBt - A) = εC` with a sign-change certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCertificate {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

impl RootCertificate {
    /// `p(lo) ≤ 0 ≤ p(hi)` with `lo ≤ t ≤ hi`.
    pub fn is_valid(&self) -> bool {
        self.lo <= self.t && self.t <= self.hi && self.p_lo <= 0.0 && self.p_hi >= 0.0
    }
}

/// Boundary `T_ε` of the interval where `tⁿ(nBt - A) - εC ≤ 0`.
pub fn auxiliary_root_analysis(a: f64, b: f64, c: f64, n: usize, epsilon: f64) -> Result<RootCertificate> {
    if !(b > 0.0) {
        return Err(Error::param("B", format!("must be positive, got {b}")));
    }
    for (name, x) in [("A", a), ("C", c), ("epsilon", epsilon)] {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::param(name, format!("must be finite and nonnegative, got {x}")));
        }
    }
    if n == 0 {
        return Err(Error::param("n", "dimension must be positive"));
    }
    let nf = n as f64;
    let p = |t: f64| t.powi(n as i32) * (nf * b * t - a) - epsilon * c;
    let t0 = a / (nf * b);
    if epsilon * c == 0.0 {
        return Ok(RootCertificate {
            t: t0,
            lo: t0,
            hi: t0,
            p_lo: p(t0),
            p_hi: p(t0),
        });
    }
    let mut lo = t0;
    let mut hi = t0.max(1.0);
    while p(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RootCertificate {
        t: 0.5 * (lo + hi),
        lo,
        hi,
        p_lo: p(lo),
        p_hi: p(hi),
    })
}

/// Convenience: `v` as a scalar field for profiles and slopes.
pub fn volume_field(problem: Problem<'_>) -> Result<ScalarField> {
    maps::volume_ratio(problem.map, problem.gx, problem.gy)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chart::LogPolarGrid;

    fn disk(r0: f64, r1: f64, n_rho: usize) -> Arc<ChartGrid> {
        Arc::new(ChartGrid::single(LogPolarGrid::annulus(r0, r1, n_rho, 16).unwrap()).unwrap())
    }

    #[test]
    fn identity_on_poincare_has_zero_residual() {
        let grid = disk(1e-3, 0.9, 32);
        let gx = HermitianMetricField::from_model(&ModelMetric::poincare(), grid).unwrap();
        let gy = ModelMetric::poincare();
        let f = HolomorphicMapModel::power(1);
        let problem = Problem {
            map: &f,
            gx: &gx,
            gy: &gy,
        };
        let cert = certify_bounds(problem, BoundKind::Volume, None, 0).unwrap();
        assert!((cert.bounds.a - 2.0).abs() < 1e-12 && (cert.bounds.b - 2.0).abs() < 1e-12);
        let vol = chern_lu_volume_residual(problem, &cert.bounds, 0).unwrap();
        let tr = chern_lu_trace_residual(problem, &cert.bounds, 0).unwrap();
        for (a, b) in vol.log_form.iter().zip(&tr.log_form) {
            assert!(a.abs() < 1e-12 && (a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_target_fails_certification() {
        let grid = disk(1e-3, 0.9, 16);
        let gx = HermitianMetricField::from_model(&ModelMetric::hyperbolic_cone(0.5), grid).unwrap();
        let gy = ModelMetric::standard_cone(0.5);
        let f = HolomorphicMapModel::power(1);
        let problem = Problem {
            map: &f,
            gx: &gx,
            gy: &gy,
        };
        let bounds = CurvatureBounds::new(2.0, 1.0, 0.0).unwrap();
        match chern_lu_volume_residual(problem, &bounds, 0) {
            Err(Error::Uncertified { bound, .. }) => assert_eq!(bound, "B"),
            other => panic!("expected certification failure, got {other:?}"),
        }
    }

    #[test]
    fn root_examples() {
        assert_eq!(auxiliary_root_analysis(2.0, 2.0, 1.0, 1, 0.0).unwrap().t, 1.0);
        let r = auxiliary_root_analysis(0.0, 1.0, 1.0, 1, 0.25).unwrap();
        assert!((r.t - 0.5).abs() < 1e-12 && r.is_valid());
        assert_eq!(auxiliary_root_analysis(0.0, 1.0, 1.0, 2, 0.0).unwrap().t, 0.0);
        assert!(auxiliary_root_analysis(1.0, 0.0, 1.0, 1, 0.1).is_err());
    }
}
