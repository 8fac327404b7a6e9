use std::sync::Arc;

use approx::assert_relative_eq;
use conelab::chart::{
    convergence_order, doubling_sequence, laplacian_euclidean, wirtinger_d, ChartGrid, Direction, LogPolarGrid,
    ObservedOrder, ScalarField,
};
use conelab::cone::{
    self, barrier, barrier_laplacian_bound, distance_power_family, holder_modulus, jeffres_argmax, ConeStructure,
    HermitianWeight, HolderParams,
};
use conelab::linalg;
use conelab::maps::{self, HolomorphicMapModel};
use conelab::metrics::{HermitianMetricField, ModelMetric};
use conelab::schwarz::{self, Angles, BoundKind, Problem};
use conelab::Complex64;

fn chart(r_min: f64, r_max: f64, n_rho: usize, n_theta: usize) -> Arc<ChartGrid> {
    Arc::new(ChartGrid::single(LogPolarGrid::annulus(r_min, r_max, n_rho, n_theta).unwrap()).unwrap())
}

fn product_chart(r_min: f64, r_max: f64, n_rho: usize, n_theta: usize) -> Arc<ChartGrid> {
    let f = LogPolarGrid::annulus(r_min, r_max, n_rho, n_theta).unwrap();
    Arc::new(ChartGrid::new(vec![f, f]).unwrap())
}

fn base(n_rho: usize, n_theta: usize) -> ChartGrid {
    ChartGrid::single(LogPolarGrid::annulus(0.05, 0.8, n_rho, n_theta).unwrap()).unwrap()
}

fn order(o: ObservedOrder) -> f64 {
    match o {
        ObservedOrder::Order(p) => p,
        ObservedOrder::Saturated => f64::INFINITY,
    }
}

#[test]
fn wirtinger_derivative_of_cube_is_second_order() {
    let levels = doubling_sequence(&base(32, 32), 3).unwrap();
    let rep = convergence_order(
        &levels,
        |g| wirtinger_d(&ScalarField::from_fn(g.clone(), |p| p[0].z().powi(3)), Direction::Z, 0),
        |p| 3.0 * p[0].z().powi(2),
    )
    .unwrap();
    let p = order(rep.order);
    assert!((1.8..2.3).contains(&p), "order {p}");
}

#[test]
fn laplacian_of_quartic_is_second_order() {
    let levels = doubling_sequence(&base(32, 32), 3).unwrap();
    let rep = convergence_order(
        &levels,
        |g| Ok(laplacian_euclidean(&ScalarField::from_real_fn(g.clone(), |p| p[0].radius().powi(4)))),
        |p| Complex64::new(4.0 * p[0].radius().powi(2), 0.0),
    )
    .unwrap();
    let p = order(rep.order);
    assert!((1.8..2.3).contains(&p), "order {p}");
}

#[test]
fn linear_in_rho_is_saturated() {
    let levels = doubling_sequence(&base(16, 16), 3).unwrap();
    // ∂_z ρ = 1/(2z), which central differences in ρ reproduce exactly.
    let rep = convergence_order(
        &levels,
        |g| wirtinger_d(&ScalarField::from_real_fn(g.clone(), |p| p[0].rho), Direction::Z, 0),
        |p| 0.5 / p[0].z(),
    )
    .unwrap();
    assert_eq!(rep.order, ObservedOrder::Saturated, "{:?}", rep.errors);
}

#[test]
fn pullback_of_poincare_by_power_is_hyperbolic_cone_pattern() {
    let grid = chart(1e-3, 0.95, 64, 16);
    for k in 1..=3u32 {
        let h = maps::pullback_metric(&HolomorphicMapModel::power(k), &ModelMetric::poincare(), grid.clone()).unwrap();
        let kf = k as f64;
        for idx in 0..grid.len() {
            let r = grid.divisor_distance(idx);
            let exact = kf * kf * r.powf(2.0 * (kf - 1.0)) / (1.0 - r.powf(2.0 * kf)).powi(2);
            assert_relative_eq!(h.coeff(idx)[(0, 0)].re, exact, max_relative = 1e-12);
        }
    }
}

#[test]
fn trace_of_scaled_identity_is_twice_dimension() {
    let grid = product_chart(0.05, 0.8, 8, 8);
    let gx_model = ModelMetric::product(vec![ModelMetric::poincare(), ModelMetric::poincare()]);
    let gy = ModelMetric::product(vec![
        ModelMetric::Poincare { scale: 2.0 },
        ModelMetric::Poincare { scale: 2.0 },
    ]);
    let gx = HermitianMetricField::from_model(&gx_model, grid.clone()).unwrap();
    let u = maps::trace(&HolomorphicMapModel::identity(2), &gx, &gy).unwrap();
    for idx in 0..grid.len() {
        assert_relative_eq!(u.re(idx), 4.0, max_relative = 1e-13);
    }
}

#[test]
fn trace_splits_over_product_factors() {
    let grid = product_chart(0.05, 0.8, 8, 8);
    let pp = ModelMetric::product(vec![ModelMetric::poincare(), ModelMetric::poincare()]);
    let gx = HermitianMetricField::from_model(&pp, grid.clone()).unwrap();
    let map = HolomorphicMapModel::MonomialProduct {
        components: vec![HolomorphicMapModel::power(2), HolomorphicMapModel::power(1)],
    };
    let u = maps::trace(&map, &gx, &pp).unwrap();
    for idx in 0..grid.len() {
        let r = grid.polar(idx, 0).radius();
        let factor1 = 4.0 * r * r * (1.0 - r * r).powi(2) / (1.0 - r.powi(4)).powi(2);
        assert_relative_eq!(u.re(idx), factor1 + 1.0, max_relative = 1e-12);
    }
}

#[test]
fn jacobian_of_power_and_identity() {
    let grid = chart(0.01, 0.9, 16, 8);
    for k in 1..=4u32 {
        let det = maps::jacobian_det(&HolomorphicMapModel::power(k), grid.clone()).unwrap();
        for idx in 0..grid.len() {
            let z = grid.z(idx, 0);
            let exact = z.powu(k - 1) * k as f64;
            assert!((det.get(idx) - exact).norm() <= 1e-13 * exact.norm().max(1.0));
        }
    }
    let det = maps::jacobian_det(&HolomorphicMapModel::identity(1), grid.clone()).unwrap();
    assert!(det.values().iter().all(|d| *d == Complex64::new(1.0, 0.0)));
}

#[test]
fn map_components_are_holomorphic() {
    let grid = chart(0.05, 0.8, 256, 256);
    let maps = [
        HolomorphicMapModel::power(3),
        HolomorphicMapModel::Blaschke {
            a: Complex64::new(0.2, -0.1),
        },
    ];
    for f in maps {
        let values = ScalarField::from_fn(grid.clone(), |p| f.jet(p).target[0].z());
        let dbar = wirtinger_d(&values, Direction::ZBar, 0).unwrap();
        for idx in (0..grid.len()).filter(|&i| grid.is_interior(i)) {
            let dz = f.jet(&grid.point(idx)).jac[(0, 0)].norm();
            assert!(dbar.get(idx).norm() <= 1e-3 * dz.max(1.0), "{f:?}: {}", dbar.get(idx));
        }
    }
}

#[test]
fn holder_modulus_of_model_power_is_order_one() {
    let (alpha, beta) = (0.5, 0.5);
    let grid = chart(1e-4, 1.0, 128, 32);
    let u = ScalarField::from_real_fn(grid, |p| (alpha * beta * p[0].rho).exp());
    let est = holder_modulus(&u, HolderParams::new(alpha, beta).unwrap(), 100_000, 11).unwrap();
    assert!((0.9..=1.5).contains(&est.modulus), "{est:?}");
}

#[test]
fn holder_modulus_diverges_below_the_threshold() {
    let (alpha, beta, gamma) = (0.5, 0.5, 0.1);
    let params = HolderParams::new(alpha, beta).unwrap();
    let estimate = |r_min: f64| {
        let grid = chart(r_min, 1.0, 256, 32);
        let u = ScalarField::from_real_fn(grid, |p| (gamma * p[0].rho).exp());
        holder_modulus(&u, params, 20_000, 3).unwrap().modulus
    };
    let (shallow, deep) = (estimate(1e-2), estimate(1e-12));
    assert!(deep > 10.0 * shallow, "{shallow} -> {deep}");
}

#[test]
fn barrier_maximum_at_stationary_radius() {
    let grid = chart(1e-6, 1.0, 2001, 8);
    let cone = ConeStructure::flat(0.5, &grid).unwrap();
    let u = distance_power_family(grid.clone(), 0.5, 0.5);
    let b = barrier(&u, &cone, 1.0, 0.1, 0.5).unwrap();
    assert!(b.well_posed);
    let arg = jeffres_argmax(&b.field);
    let step = grid.factor(0).rho_step();
    assert!((arg.log_distance - 20.0 * 0.8f64.ln()).abs() <= step, "{arg:?}");
    assert_relative_eq!(0.8f64.powi(20), 1.153e-2, max_relative = 1e-3);
}

#[test]
fn barrier_counter_example_sits_on_innermost_ring() {
    let grid = chart(1e-6, 1.0, 512, 8);
    let cone = ConeStructure::flat(0.5, &grid).unwrap();
    let u = distance_power_family(grid.clone(), 0.5, 0.5);
    let b = barrier(&u, &cone, 0.5, 0.2, 0.5).unwrap();
    assert!(!b.well_posed);
    assert!(b.field.values().iter().all(|v| v.re < 0.0));
    assert_eq!(jeffres_argmax(&b.field).row, 0);
}

#[test]
fn larger_epsilon_moves_the_maximum_outward() {
    let grid = chart(1e-6, 1.0, 1024, 8);
    let cone = ConeStructure::flat(0.5, &grid).unwrap();
    let u = distance_power_family(grid.clone(), 0.5, 0.5);
    let at = |eps| jeffres_argmax(&barrier(&u, &cone, eps, 0.1, 0.5).unwrap().field).log_distance;
    assert!(at(10.0) > at(1.0));
    assert_eq!(at(10.0), grid.factor(0).rho_max);
}

#[test]
fn flat_weight_barrier_laplacian_is_positive() {
    let grid = chart(1e-3, 0.9, 256, 32);
    let gx = HermitianMetricField::from_model(&ModelMetric::euclidean(1), grid.clone()).unwrap();
    let cone = ConeStructure::flat(0.5, &grid).unwrap();
    let gamma = 0.3;
    let bb = barrier_laplacian_bound(&cone, gamma, &gx).unwrap();
    for idx in (0..grid.len()).filter(|&i| grid.is_interior(i)) {
        let r = grid.divisor_distance(idx);
        let exact = gamma * gamma * r.powf(2.0 * (gamma - 1.0));
        assert_relative_eq!(bb.laplacian.re(idx), exact, max_relative = 1e-3);
    }
    assert_eq!(bb.c, 0.0);
    assert!(bb.min_value > 0.0);
}

#[test]
fn curved_weight_respects_lower_bound_and_vanishes_as_gamma_shrinks() {
    let grid = chart(1e-3, 0.9, 256, 32);
    let gx = HermitianMetricField::from_model(&ModelMetric::euclidean(1), grid.clone()).unwrap();
    let cone = ConeStructure::new(0.5, HermitianWeight::Quadratic { c: 2.0 }, &grid).unwrap();
    for gamma in [0.05, 0.1, 0.2] {
        let bb = barrier_laplacian_bound(&cone, gamma, &gx).unwrap();
        assert_relative_eq!(bb.c, 2.0, max_relative = 1e-12);
        for idx in (0..grid.len()).filter(|&i| grid.is_interior(i)) {
            let s = cone.s_power(grid.polar(idx, 0), gamma);
            assert!(bb.laplacian.re(idx) >= -1.01 * gamma * bb.c * s, "gamma {gamma} idx {idx}");
        }
    }
    let tiny = barrier_laplacian_bound(&cone, 1e-9, &gx).unwrap();
    assert!(tiny.min_value.abs() < 1e-6);
}

#[test]
fn quasi_isometry_of_hyperbolic_cone_on_half_disk() {
    let beta = 0.5;
    let grid = chart(1e-4, 0.5, 128, 8);
    let g = HermitianMetricField::from_model(&ModelMetric::hyperbolic_cone(beta), grid).unwrap();
    let (lo, hi) = cone::quasi_isometry_constants(&g, beta).unwrap();
    assert_relative_eq!(lo, (1.0 - 1e-4f64.powf(2.0 * beta)).powi(-2), max_relative = 1e-9);
    assert_relative_eq!(hi, (1.0 - 2f64.powf(-2.0 * beta)).powi(-2), max_relative = 1e-12);
}

#[test]
fn poincare_is_not_quasi_isometric_to_a_cone() {
    let lo = |r_min: f64| {
        let g = HermitianMetricField::from_model(&ModelMetric::poincare(), chart(r_min, 0.5, 64, 8)).unwrap();
        cone::quasi_isometry_constants(&g, 0.5).unwrap().0
    };
    assert!(lo(1e-8) < 1e-3 * lo(1e-2));
}

struct Setup {
    gx: HermitianMetricField,
    gy: ModelMetric,
    map: HolomorphicMapModel,
    cone: ConeStructure,
    angles: Angles,
}

impl Setup {
    fn new(source: ModelMetric, target: ModelMetric, map: HolomorphicMapModel, grid: Arc<ChartGrid>) -> Self {
        let alpha = source.cone_angle().unwrap_or(1.0);
        let beta = target.cone_angle().unwrap_or(1.0);
        let k = map.divisor_order();
        Setup {
            cone: ConeStructure::flat(alpha, &grid).unwrap(),
            gx: HermitianMetricField::from_model(&source, grid).unwrap(),
            gy: target,
            map,
            angles: Angles { alpha, beta, k },
        }
    }

    fn problem(&self) -> Problem<'_> {
        Problem {
            map: &self.map,
            gx: &self.gx,
            gy: &self.gy,
        }
    }

    fn theorem(&self, kind: BoundKind) -> schwarz::InequalityReport {
        let cert = schwarz::certify_bounds(self.problem(), kind, Some(&self.cone), 1).unwrap();
        match kind {
            BoundKind::Volume => {
                schwarz::theorem_volume_check(self.problem(), self.angles, &self.cone, &cert.bounds, 1e-6, 1)
            }
            BoundKind::Trace => {
                schwarz::theorem_trace_check(self.problem(), self.angles, &self.cone, &cert.bounds, 1e-6, 1)
            }
        }
        .unwrap()
    }
}

#[test]
fn hyperbolic_third_cones_satisfy_chern_lu_at_closed_form_radii() {
    let s = Setup::new(
        ModelMetric::hyperbolic_cone(1.0 / 3.0),
        ModelMetric::hyperbolic_cone(1.0 / 3.0),
        HolomorphicMapModel::power(2),
        chart(1e-4, 0.99, 512, 64),
    );
    let cert = schwarz::certify_bounds(s.problem(), BoundKind::Volume, Some(&s.cone), 1).unwrap();
    let res = schwarz::chern_lu_volume_residual(s.problem(), &cert.bounds, 1).unwrap();
    assert!(res.worst >= -1e-6, "{}", res.worst);

    // f = z² between equal-curvature cones: v = 4 s / (1 + s)² with s = |z|^{2/3},
    // and Δ log v = 2v - 2 holds with equality.
    let grid = s.gx.grid();
    for idx in 0..grid.len() {
        let t = grid.divisor_distance(idx).powf(2.0 / 3.0);
        assert_relative_eq!(res.quantity[idx], 4.0 * t / (1.0 + t).powi(2), max_relative = 1e-12);
        if grid.is_interior(idx) && res.log_form[idx].is_finite() {
            assert!(res.log_form[idx].abs() <= 1e-3, "idx {idx}: {}", res.log_form[idx]);
        }
    }
}

#[test]
fn case_a_half_angles_stay_below_one() {
    let s = Setup::new(
        ModelMetric::hyperbolic_cone(0.5),
        ModelMetric::hyperbolic_cone(0.5),
        HolomorphicMapModel::power(2),
        chart(1e-4, 0.999, 256, 16),
    );
    let rep = s.theorem(BoundKind::Volume);
    assert!(rep.pass && rep.statistic <= 1.0 + 1e-6 && rep.statistic > 0.99, "{rep:?}");
    let tr = s.theorem(BoundKind::Trace);
    assert_relative_eq!(tr.statistic, rep.statistic, max_relative = 1e-8);
}

#[test]
fn equality_case_is_flagged() {
    let s = Setup::new(
        ModelMetric::hyperbolic_cone(2.0 / 3.0),
        ModelMetric::hyperbolic_cone(1.0 / 3.0),
        HolomorphicMapModel::power(2),
        chart(1e-4, 0.99, 128, 16),
    );
    let rep = s.theorem(BoundKind::Volume);
    assert!((rep.statistic - 1.0).abs() <= 1e-8);
    assert!(rep.note.contains("equality_case"));
}

#[test]
fn case_b_weighted_supremum_is_one() {
    let s = Setup::new(
        ModelMetric::hyperbolic_cone(0.9),
        ModelMetric::hyperbolic_cone(0.3),
        HolomorphicMapModel::power(1),
        chart(1e-6, 0.999, 256, 16),
    );
    let rep = s.theorem(BoundKind::Volume);
    assert_eq!(rep.inequality_id, "volume_b");
    assert!(rep.pass && rep.statistic <= 1.0 + 1e-6, "{rep:?}");
    // Closed form of |z|^{2ℓ} v at the outermost sampled radius.
    let t: f64 = 0.999;
    let exact = (0.3f64 / 0.9).powi(2) * ((1.0 - t.powf(1.8)) / (1.0 - t.powf(0.6))).powi(2);
    let outer = rep.profile.last().unwrap();
    assert_relative_eq!(outer.ratio, exact, max_relative = 1e-9);
}

#[test]
fn product_trace_form_comparison_is_semidefinite() {
    let source = ModelMetric::product(vec![ModelMetric::hyperbolic_cone(0.5), ModelMetric::poincare()]);
    let map = HolomorphicMapModel::MonomialProduct {
        components: vec![HolomorphicMapModel::power(2), HolomorphicMapModel::power(1)],
    };
    let s = Setup::new(source.clone(), source, map, product_chart(1e-3, 0.9, 16, 8));
    let cert = schwarz::certify_bounds(s.problem(), BoundKind::Trace, Some(&s.cone), 1).unwrap();
    // The product target has vanishing mixed bisectional curvature, so the
    // trace bound uses the Ricci lower bound of the source against the
    // weakest factor curvature, here 2.
    assert!(cert.bounds.b.abs() < 1e-12);
    let (_, ratio, masked) = schwarz::form_comparison(s.problem(), 2.0 / 2.0, None).unwrap();
    assert_eq!(masked, 0);
    let worst = ratio.iter().filter(|r| r.is_finite()).fold(f64::NEG_INFINITY, |m, r| m.max(*r));
    // Largest eigenvalue of f*g_Y relative to (A/B) g_X stays at most one.
    assert!(worst <= 1.0 + 1e-6, "{worst}");
    for idx in 0..s.gx.grid().len() {
        let jet = s.map.jet(&s.gx.grid().point(idx));
        let h = s.gy.coefficient(&jet.target).unwrap();
        let pb = jet.jac.transpose() * h * jet.jac.conjugate();
        let m = s.gx.coeff(idx) - pb;
        assert!(linalg::eigenvalues(&m)[0] >= -1e-6 * s.gx.coeff(idx).norm());
    }
}

#[test]
fn rescaled_target_keeps_the_verdict() {
    let grid = chart(1e-3, 0.99, 128, 16);
    let verdict = |scale: f64| {
        let s = Setup::new(
            ModelMetric::poincare(),
            ModelMetric::Poincare { scale },
            HolomorphicMapModel::power(2),
            grid.clone(),
        );
        let rep = s.theorem(BoundKind::Volume);
        (rep.pass, rep.bounds.b)
    };
    let (p1, b1) = verdict(1.0);
    let (p3, b3) = verdict(3.0);
    assert_eq!(p1, p3);
    assert_relative_eq!(b3, b1 / 3.0, max_relative = 1e-9);
}

#[test]
fn auxiliary_root_closed_forms() {
    let r = schwarz::auxiliary_root_analysis(2.0, 2.0, 1.0, 1, 0.0).unwrap();
    assert_eq!(r.t, 1.0);
    let r = schwarz::auxiliary_root_analysis(0.0, 1.0, 1.0, 1, 0.25).unwrap();
    assert_relative_eq!(r.t, 0.5, max_relative = 1e-12);
    assert!(r.is_valid());
    assert_eq!(schwarz::auxiliary_root_analysis(0.0, 1.0, 1.0, 1, 0.0).unwrap().t, 0.0);
}
