use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{with_parameter, Check, ProvenanceChoice, ScenarioConfig};
use super::report::{self, ProfileRecord, ReportRow, ERROR_RESIDUAL};
use crate::chart::ChartGrid;
use crate::cone::{self, ConeStructure};
use crate::maps::HolomorphicMapModel;
use crate::metrics::{CurvatureBounds, HermitianMetricField, ModelMetric};
use crate::schwarz::{self, Angles, BoundKind, InequalityReport, Problem};
use crate::{Error, Result, ENGINE_VERSION};

/// Allowed deviation of the case-(b) log-log slope from `-2ℓ`.
pub const SLOPE_TOLERANCE: f64 = 0.05;

/// Radius decades, counted from the innermost row, used for the slope.
pub const SLOPE_DECADES: f64 = 2.0;

/// Slack on the barrier Laplacian lower bound.
pub const BARRIER_SLACK: f64 = 1.01;

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

/// Rows and profiles of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario_id: String,
    pub rows: Vec<ReportRow>,
    pub profile: Vec<ProfileRecord>,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    grid: Arc<ChartGrid>,
    gx: Option<HermitianMetricField>,
    cone: ConeStructure,
    tolerance: f64,
    seed: u64,
    provenance: &'static str,
    angles: Angles,
}

/// Row skeleton carrying scenario metadata.
fn base_row(ctx: &Context<'_>, id: &str) -> ReportRow {
    ReportRow {
        engine_version: ENGINE_VERSION.into(),
        scenario_id: ctx.cfg.id.clone(),
        inequality_id: id.into(),
        provenance: ctx.provenance.into(),
        grid: ctx.grid.describe(),
        n: ctx.grid.dim(),
        k: ctx.angles.k,
        alpha: ctx.angles.alpha,
        beta: ctx.angles.beta,
        ell: ctx.angles.ell(),
        a: 0.0,
        b: 0.0,
        c: 0.0,
        tolerance: ctx.tolerance,
        parameter: None,
        statistic: 0.0,
        worst_residual: 0.0,
        worst_index: 0,
        worst_radius: 0.0,
        masked_points: 0,
        near_boundary: false,
        pass: false,
        note: String::new(),
    }
}

fn error_row(ctx: &Context<'_>, id: &str, err: &Error) -> ReportRow {
    ReportRow {
        worst_residual: ERROR_RESIDUAL,
        note: format!("error: {err}"),
        ..base_row(ctx, id)
    }
}

fn inequality_row(ctx: &Context<'_>, rep: &InequalityReport) -> ReportRow {
    ReportRow {
        a: rep.bounds.a,
        b: rep.bounds.b,
        c: rep.bounds.c,
        tolerance: rep.tolerance,
        statistic: rep.statistic,
        worst_residual: rep.worst_residual,
        worst_index: rep.worst_index,
        worst_radius: rep.worst_radius,
        masked_points: rep.masked_points,
        near_boundary: rep.near_boundary,
        pass: rep.pass,
        note: rep.note.clone(),
        ..base_row(ctx, &rep.inequality_id)
    }
}

fn profile_of(ctx: &Context<'_>, rep: &InequalityReport) -> Vec<ProfileRecord> {
    rep.profile
        .iter()
        .map(|p| ProfileRecord {
            scenario_id: ctx.cfg.id.clone(),
            inequality_id: rep.inequality_id.clone(),
            parameter: None,
            radius: p.radius,
            value: p.value,
            ratio: p.ratio,
        })
        .collect()
}

impl Context<'_> {
    fn problem(&self) -> Result<(Problem<'_>, &HolomorphicMapModel)> {
        let gx = self
            .gx
            .as_ref()
            .ok_or_else(|| Error::config("source", "source metric was not sampled"))?;
        let map = self.cfg.map.as_ref().ok_or_else(|| Error::config("map", "missing"))?;
        let gy: &ModelMetric = &self.cfg.target.as_ref().ok_or_else(|| Error::config("target", "missing"))?.metric;
        Ok((Problem { map, gx, gy }, map))
    }

    fn certify(&self, kind: BoundKind) -> Result<schwarz::Certification> {
        let (problem, _) = self.problem()?;
        schwarz::certify_bounds(problem, kind, Some(&self.cone), self.seed)
    }
}

type CheckOutput = (Vec<ReportRow>, Vec<ProfileRecord>);

fn run_check(ctx: &Context<'_>, check: Check) -> CheckOutput {
    let id = match check {
        Check::CertifyVolume => "certify_volume",
        Check::CertifyTrace => "certify_trace",
        Check::ChernLuVolume => "chern_lu_volume",
        Check::ChernLuTrace => "chern_lu_trace",
        Check::TheoremVolume => "theorem_volume",
        Check::TheoremTrace => "theorem_trace",
        Check::SingularSlope => "volume_b_slope",
        Check::BarrierBound => "barrier_bound",
        Check::AuxiliaryRoot => "auxiliary_root",
        Check::Jeffres => "jeffres",
    };
    let result = match check {
        Check::CertifyVolume => certify_row(ctx, BoundKind::Volume, id),
        Check::CertifyTrace => certify_row(ctx, BoundKind::Trace, id),
        Check::ChernLuVolume => chern_lu(ctx, BoundKind::Volume, id),
        Check::ChernLuTrace => chern_lu(ctx, BoundKind::Trace, id),
        Check::TheoremVolume => theorem(ctx, BoundKind::Volume),
        Check::TheoremTrace => theorem(ctx, BoundKind::Trace),
        Check::SingularSlope => singular_slope(ctx, id),
        Check::BarrierBound => barrier_bound(ctx, id),
        Check::AuxiliaryRoot => auxiliary_root(ctx, id),
        Check::Jeffres => jeffres(ctx),
    };
    result.unwrap_or_else(|e| (vec![error_row(ctx, id, &e)], Vec::new()))
}

fn certify_row(ctx: &Context<'_>, kind: BoundKind, id: &str) -> Result<CheckOutput> {
    let cert = ctx.certify(kind)?;
    let ok = cert.bounds.b > 0.0;
    let row = ReportRow {
        a: cert.bounds.a,
        b: cert.bounds.b,
        c: cert.bounds.c,
        statistic: cert.bounds.b,
        worst_residual: if ok { 0.0 } else { ERROR_RESIDUAL },
        worst_index: cert.b_index,
        worst_radius: ctx.grid.divisor_distance(cert.b_index),
        pass: ok,
        note: format!(
            "margin={};a_index={}{}",
            cert.margin,
            cert.a_index,
            if ok { "" } else { ";B=0: theorem hypotheses fail" }
        ),
        ..base_row(ctx, id)
    };
    Ok((vec![row], Vec::new()))
}

fn chern_lu(ctx: &Context<'_>, kind: BoundKind, id: &str) -> Result<CheckOutput> {
    let cert = ctx.certify(kind)?;
    let (problem, _) = ctx.problem()?;
    let bounds = CurvatureBounds { c: 0.0, ..cert.bounds };
    let residual = match kind {
        BoundKind::Volume => schwarz::chern_lu_volume_residual(problem, &bounds, ctx.seed)?,
        BoundKind::Trace => schwarz::chern_lu_trace_residual(problem, &bounds, ctx.seed)?,
    };
    let rep = schwarz::residual_report(id, problem, &residual, ctx.angles, bounds, ctx.tolerance);
    Ok((vec![inequality_row(ctx, &rep)], Vec::new()))
}

fn theorem(ctx: &Context<'_>, kind: BoundKind) -> Result<CheckOutput> {
    let cert = ctx.certify(kind)?;
    let (problem, _) = ctx.problem()?;
    let rep = match kind {
        BoundKind::Volume => {
            schwarz::theorem_volume_check(problem, ctx.angles, &ctx.cone, &cert.bounds, ctx.tolerance, ctx.seed)?
        }
        BoundKind::Trace => {
            schwarz::theorem_trace_check(problem, ctx.angles, &ctx.cone, &cert.bounds, ctx.tolerance, ctx.seed)?
        }
    };
    let profile = profile_of(ctx, &rep);
    Ok((vec![inequality_row(ctx, &rep)], profile))
}

fn singular_slope(ctx: &Context<'_>, id: &str) -> Result<CheckOutput> {
    let ell = ctx
        .angles
        .ell()
        .ok_or_else(|| Error::config("checks", "volume_b_slope needs alpha > k beta"))?;
    let cert = ctx.certify(BoundKind::Volume)?;
    let (problem, _) = ctx.problem()?;
    let rep = schwarz::theorem_volume_check(problem, ctx.angles, &ctx.cone, &cert.bounds, ctx.tolerance, ctx.seed)?;
    let slope = schwarz::log_log_slope(&rep.profile, SLOPE_DECADES)
        .ok_or_else(|| Error::config("grid", "too few radii for a slope"))?;
    let residual = SLOPE_TOLERANCE - (slope + 2.0 * ell).abs();
    let row = ReportRow {
        a: cert.bounds.a,
        b: cert.bounds.b,
        c: cert.bounds.c,
        statistic: slope,
        worst_residual: residual,
        worst_radius: rep.profile.first().map_or(0.0, |p| p.radius),
        pass: residual >= 0.0,
        note: format!("expected={}", report::fmt_float(-2.0 * ell)),
        ..base_row(ctx, id)
    };
    Ok((vec![row], Vec::new()))
}

fn barrier_bound(ctx: &Context<'_>, id: &str) -> Result<CheckOutput> {
    let gamma = ctx.cfg.barrier.as_ref().map(|b| b.gamma).unwrap_or_default();
    let gx = ctx
        .gx
        .as_ref()
        .ok_or_else(|| Error::config("source", "source metric was not sampled"))?;
    let bb = cone::barrier_laplacian_bound(&ctx.cone, gamma, gx)?;
    let lower = BARRIER_SLACK * bb.lower_bound;
    let residual = bb.min_value - lower;
    let row = ReportRow {
        c: bb.c,
        parameter: Some(gamma),
        statistic: bb.min_value,
        worst_residual: residual,
        worst_index: bb.min_index,
        worst_radius: ctx.grid.divisor_distance(bb.min_index),
        pass: residual >= -ctx.tolerance,
        note: format!("lower_bound={}", report::fmt_float(lower)),
        ..base_row(ctx, id)
    };
    Ok((vec![row], Vec::new()))
}

fn auxiliary_root(ctx: &Context<'_>, id: &str) -> Result<CheckOutput> {
    let cert = ctx.certify(BoundKind::Volume)?;
    let b = cert.bounds;
    let n = ctx.grid.dim();
    let mut eps = ctx.cfg.barrier.as_ref().map(|b| b.epsilon.clone()).unwrap_or_default();
    eps.sort_by(f64::total_cmp);
    let t0 = schwarz::auxiliary_root_analysis(b.a, b.b, b.c, n, 0.0)?;
    let exact = b.a / (n as f64 * b.b);
    let mut ok = t0.t == exact && t0.is_valid();
    let mut prev = t0.t;
    for &e in &eps {
        let r = schwarz::auxiliary_root_analysis(b.a, b.b, b.c, n, e)?;
        let increasing = if e * b.c > 0.0 { r.t > prev } else { r.t >= prev };
        ok &= r.is_valid() && increasing;
        prev = r.t;
    }
    let row = ReportRow {
        a: b.a,
        b: b.b,
        c: b.c,
        parameter: eps.last().copied(),
        statistic: prev,
        worst_residual: if ok { 0.0 } else { ERROR_RESIDUAL },
        pass: ok,
        note: format!("T0={};points={}", report::fmt_float(t0.t), eps.len()),
        ..base_row(ctx, id)
    };
    Ok((vec![row], Vec::new()))
}

fn jeffres(ctx: &Context<'_>) -> Result<CheckOutput> {
    let barrier_cfg = ctx
        .cfg
        .barrier
        .as_ref()
        .ok_or_else(|| Error::config("barrier", "missing"))?;
    let alpha_h = barrier_cfg
        .holder_alpha
        .ok_or_else(|| Error::config("barrier.holder_alpha", "missing"))?;
    let beta = ctx.angles.alpha;
    let gamma = barrier_cfg.gamma;
    let factor = *ctx.grid.factor(0);
    let u = cone::distance_power_family(ctx.grid.clone(), alpha_h, beta);
    let rows = barrier_cfg
        .epsilon
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let id = format!("jeffres_eps_{i:03}");
            let b = cone::barrier(&u, &ctx.cone, eps, gamma, alpha_h)?;
            let arg = cone::jeffres_argmax(&b.field);
            let (residual, note) = if b.well_posed {
                let oracle = cone::stationary_log_radius(eps, gamma, alpha_h, beta, &factor);
                let cells = (arg.log_distance - oracle).abs() / factor.rho_step();
                let residual = if arg.row > 0 { 2.0 - cells } else { ERROR_RESIDUAL };
                (
                    residual,
                    format!(
                        "well_posed;oracle_log_radius={};ties={}",
                        report::fmt_float(oracle),
                        arg.ties
                    ),
                )
            } else {
                (0.0 - arg.row as f64, format!("not_well_posed;expect_innermost_ring;ties={}", arg.ties))
            };
            Ok(ReportRow {
                parameter: Some(eps),
                statistic: arg.log_distance,
                worst_residual: residual,
                worst_index: arg.index,
                worst_radius: arg.distance,
                near_boundary: arg.row == 0 || arg.row + 1 == factor.n_rho,
                pass: residual >= -ctx.tolerance,
                note,
                ..base_row(ctx, &id)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, Vec::new()))
}

/// Runs every requested check. Check-level failures become failing rows;
/// only configuration problems are returned as errors.
pub fn run_scenario(cfg: &ScenarioConfig, opts: RunOptions) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let grid = Arc::new(ChartGrid::new(cfg.log_polar_grids()?)?);
    let provenance = match cfg.source.provenance {
        ProvenanceChoice::Analytic => "analytic",
        ProvenanceChoice::FiniteDifference => "finite_difference",
    };
    let tolerance = opts.tolerance.unwrap_or(match cfg.source.provenance {
        ProvenanceChoice::Analytic => cfg.tolerance.analytic,
        ProvenanceChoice::FiniteDifference => cfg.tolerance.finite_difference,
    });
    let needs_metric = cfg.checks.iter().any(|c| *c != Check::Jeffres);
    let gx = if needs_metric {
        Some(match cfg.source.provenance {
            ProvenanceChoice::Analytic => HermitianMetricField::from_model(&cfg.source.metric, grid.clone())?,
            ProvenanceChoice::FiniteDifference => HermitianMetricField::sampled_model(&cfg.source.metric, grid.clone())?,
        })
    } else {
        None
    };
    let cone = ConeStructure::new(cfg.alpha(), cfg.source.weight, &grid)?;
    let ctx = Context {
        cfg,
        grid,
        gx,
        cone,
        tolerance,
        seed: opts.seed.unwrap_or(cfg.seed),
        provenance,
        angles: Angles {
            alpha: cfg.alpha(),
            beta: cfg.beta(),
            k: cfg.k(),
        },
    };
    let mut checks = cfg.checks.clone();
    checks.sort();
    checks.dedup();
    let mut rows = Vec::new();
    let mut profile = Vec::new();
    for check in checks {
        let (r, p) = run_check(&ctx, check);
        rows.extend(r);
        profile.extend(p);
    }
    report::sort_rows(&mut rows);
    Ok(ScenarioOutcome {
        scenario_id: cfg.id.clone(),
        rows,
        profile,
    })
}

/// Keeps only the checks a subcommand is about.
pub fn restrict_checks(cfg: &ScenarioConfig, keep: impl Fn(Check) -> bool) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    out.checks.retain(|c| keep(*c));
    if out.checks.is_empty() {
        return Err(Error::config("checks", "scenario requests none of the checks this command runs"));
    }
    Ok(out)
}

/// Directory for a scenario's outputs.
pub fn scenario_dir(root: &Path, id: &str) -> PathBuf {
    root.join(id)
}

/// Writes `report.csv`, `profile.csv` and `summary.txt` under `root/<id>/`.
pub fn write_outcome(root: &Path, outcome: &ScenarioOutcome) -> Result<PathBuf> {
    let dir = scenario_dir(root, &outcome.scenario_id);
    report::write_atomic(&dir.join("report.csv"), &report::report_csv(&outcome.rows))?;
    report::write_atomic(&dir.join("profile.csv"), &report::profile_csv(&outcome.profile))?;
    report::write_atomic(&dir.join("summary.txt"), &report::summary_text(&outcome.rows))?;
    Ok(dir)
}

/// Results of a one-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub scenario_id: String,
    pub parameter: String,
    pub runs: Vec<(f64, ScenarioOutcome)>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|(_, o)| o.passed())
    }

    /// Long format: one block of rows per swept value.
    pub fn csv(&self) -> String {
        let mut out = format!("swept_parameter,swept_value,{}\n", report::HEADER);
        for (v, o) in &self.runs {
            let mut rows = o.rows.clone();
            report::sort_rows(&mut rows);
            for r in rows {
                out.push_str(&format!("{},{},{}\n", self.parameter, report::fmt_float(*v), r.to_csv()));
            }
        }
        out
    }

    pub fn profile_csv(&self) -> String {
        let mut out = format!("swept_parameter,swept_value,{}\n", report::PROFILE_HEADER);
        for (v, o) in &self.runs {
            for r in &o.profile {
                out.push_str(&format!("{},{},{}\n", self.parameter, report::fmt_float(*v), r.to_csv()));
            }
        }
        out
    }
}

/// Runs `template` once per value of `parameter`.
pub fn sweep(template: &ScenarioConfig, parameter: &str, values: &[f64], opts: RunOptions) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::config("values", "sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .map(|&v| with_parameter(template, parameter, v))
        .collect::<Result<Vec<_>>>()?;
    let runs = configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(cfg, &v)| run_scenario(cfg, opts).map(|o| (v, o)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        scenario_id: template.id.clone(),
        parameter: parameter.to_string(),
        runs,
    })
}

/// Writes `sweep.csv` and `sweep_profile.csv` under `root/<id>/`.
pub fn write_sweep(root: &Path, outcome: &SweepOutcome) -> Result<PathBuf> {
    let dir = scenario_dir(root, &outcome.scenario_id);
    report::write_atomic(&dir.join("sweep.csv"), &outcome.csv())?;
    report::write_atomic(&dir.join("sweep_profile.csv"), &outcome.profile_csv())?;
    Ok(dir)
}
