//! Identity registry, report types, configuration, and the acceptance suite
//! driven by the command-line front end.
//!
//! Each identity group evaluates one or more named identities on a model
//! and yields one [`IdentityReport`] per identity. Randomness is drawn from
//! a ChaCha stream keyed by `(seed, model, group)`, so a report does not
//! depend on which other groups run or in what order.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{symmetric_eigenvalues, CurvatureFrame, ScalarField, TensorField};
use crate::models::{find_model_with, model_catalog_with, CatalogParams, ModelKind, ModelSpec};
use crate::operators::{
    cpe_residual, einstein_lambda_star_closed_form, gamma_linearized, gamma_star,
    lambda_linearized, lambda_star, lambda_star_one_identities, laplacian_eigen_relation,
    lemma_extended_identity, obata_residual, sigma2, sigma2_from_schouten,
    static_extended_identity, trace_lambda_star_direct, vacuum_static_residual, traceless_ricci,
    traceless_ricci_norm_sq, OperatorError,
};
use crate::quadrature::{
    adjointness_table, build_grid, fd_cross_check, integrate_scalar, rayleigh_identity,
    FdQuantity, Grid,
};

/// Outcome class of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One identity checked on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub criterion: Option<u8>,
    pub model: String,
    pub identity: String,
    pub points_or_grid: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

/// Default tolerance of every identity id.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("catalog-self-check", 0.0),
    ("curvature-known-scalar", 1e-9),
    ("flat-riemann", 1e-12),
    ("fd-scalar", 1e-5),
    ("fd-sigma2", 1e-5),
    ("sigma2-two-routes", 1e-11),
    ("sigma2-known", 1e-9),
    ("gamma-fd", 1e-5),
    ("lambda-fd", 1e-5),
    ("gamma-of-metric", 1e-10),
    ("lambda-of-metric", 1e-10),
    ("adjoint-gamma", 1e-8),
    ("adjoint-lambda", 1e-7),
    ("eq9-trace", 1e-9),
    ("eq11-trace-of-one", 1e-8),
    ("eq12-div-of-one", 1e-7),
    ("lemma1-extended", 1e-9),
    ("thm2-static-extended", 1e-9),
    ("cpe-extended-exact-zero", 1e-10),
    ("static-extended-exact-zero", 1e-10),
    ("eq13-einstein-closed-form", 1e-9),
    ("einstein-closed-form-refusal", 0.0),
    ("corollary1-kernel", 1e-8),
    ("corollary1-meanzero", 1e-9),
    ("kernel-gram", 1.0),
    ("eq7-rayleigh", 1e-7),
    ("eigen-equations", 1e-10),
    ("static-branch-ricci-flat", 1e-12),
    ("static-branch-einstein", 1e-8),
    ("negative-control-trace", 1.0),
    ("negative-control-cpe", 1.0),
];

pub fn default_tolerance(id: &str) -> Option<f64> {
    DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == id).map(|(_, v)| *v)
}

/// Groups of identities evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    SelfCheck,
    KnownScalar,
    FlatRiemann,
    FdScalar,
    FdSigma2,
    Sigma2Routes,
    Sigma2Known,
    LinearizationFd,
    LinearizationOfMetric,
    Adjoint,
    TraceIdentity,
    LambdaStarOne,
    Extended,
    ExtendedExactZero,
    EinsteinClosedForm,
    EinsteinRefusal,
    SphereKernel,
    StaticBranchRicciFlat,
    StaticBranchEinstein,
    NegativeControls,
}

impl Group {
    pub const ALL: [Group; 20] = [
        Group::SelfCheck,
        Group::KnownScalar,
        Group::FlatRiemann,
        Group::FdScalar,
        Group::FdSigma2,
        Group::Sigma2Routes,
        Group::Sigma2Known,
        Group::LinearizationFd,
        Group::LinearizationOfMetric,
        Group::Adjoint,
        Group::TraceIdentity,
        Group::LambdaStarOne,
        Group::Extended,
        Group::ExtendedExactZero,
        Group::EinsteinClosedForm,
        Group::EinsteinRefusal,
        Group::SphereKernel,
        Group::StaticBranchRicciFlat,
        Group::StaticBranchEinstein,
        Group::NegativeControls,
    ];

    /// Identity ids reported by this group, in report order.
    pub fn identities(self) -> &'static [&'static str] {
        match self {
            Group::SelfCheck => &["catalog-self-check"],
            Group::KnownScalar => &["curvature-known-scalar"],
            Group::FlatRiemann => &["flat-riemann"],
            Group::FdScalar => &["fd-scalar"],
            Group::FdSigma2 => &["fd-sigma2"],
            Group::Sigma2Routes => &["sigma2-two-routes"],
            Group::Sigma2Known => &["sigma2-known"],
            Group::LinearizationFd => &["gamma-fd", "lambda-fd"],
            Group::LinearizationOfMetric => &["gamma-of-metric", "lambda-of-metric"],
            Group::Adjoint => &["adjoint-gamma", "adjoint-lambda"],
            Group::TraceIdentity => &["eq9-trace"],
            Group::LambdaStarOne => &["eq11-trace-of-one", "eq12-div-of-one"],
            Group::Extended => &["lemma1-extended", "thm2-static-extended"],
            Group::ExtendedExactZero => &["cpe-extended-exact-zero", "static-extended-exact-zero"],
            Group::EinsteinClosedForm => &["eq13-einstein-closed-form"],
            Group::EinsteinRefusal => &["einstein-closed-form-refusal"],
            Group::SphereKernel => &[
                "corollary1-kernel",
                "corollary1-meanzero",
                "kernel-gram",
                "eq7-rayleigh",
                "eigen-equations",
            ],
            Group::StaticBranchRicciFlat => &["static-branch-ricci-flat"],
            Group::StaticBranchEinstein => &["static-branch-einstein"],
            Group::NegativeControls => &["negative-control-trace", "negative-control-cpe"],
        }
    }

    fn slug(self) -> &'static str {
        self.identities()[0]
    }
}

/// Sample sizes of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Samples {
    pub points: usize,
    pub functions: usize,
}

impl Samples {
    pub const fn new(points: usize, functions: usize) -> Samples {
        Samples { points, functions }
    }
}

impl Default for Samples {
    fn default() -> Samples {
        Samples::new(20, 5)
    }
}

/// A group scheduled on a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub criterion: Option<u8>,
    pub model: String,
    pub group: Group,
    pub samples: Samples,
}

/// Run settings shared by every task.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSettings {
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub grids: BTreeMap<String, Vec<usize>>,
    pub params: CatalogParams,
    pub timings: bool,
}

impl RunSettings {
    pub fn with_seed(seed: u64) -> RunSettings {
        RunSettings {
            seed,
            ..RunSettings::default()
        }
    }

    fn tolerance(&self, id: &str) -> f64 {
        self.tolerances
            .get(id)
            .copied()
            .or_else(|| default_tolerance(id))
            .unwrap_or(0.0)
    }
}

/// Result of one identity before tolerance gating.
struct Outcome {
    residual: f64,
    description: String,
    detail: String,
    skipped: bool,
}

impl Outcome {
    fn value(residual: f64, description: impl Into<String>) -> Outcome {
        Outcome {
            residual,
            description: description.into(),
            detail: String::new(),
            skipped: false,
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Outcome {
        self.detail = detail.into();
        self
    }

    fn skipped(reason: impl Into<String>) -> Outcome {
        Outcome {
            residual: 0.0,
            description: "not applicable".into(),
            detail: reason.into(),
            skipped: true,
        }
    }
}

type GroupResult = Result<Vec<Outcome>, String>;

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn task_rng(seed: u64, model: &str, group: Group) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&[model, group.slug()]))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn is_sphere(m: &ModelSpec) -> bool {
    matches!(m.kind, ModelKind::Sphere { .. })
}

fn is_ricci_flat(m: &ModelSpec) -> bool {
    matches!(m.kind, ModelKind::Euclidean | ModelKind::FlatTorus)
}

fn frames(m: &ModelSpec, rng: &mut ChaCha8Rng, count: usize, order: usize) -> Result<Vec<CurvatureFrame>, String> {
    m.sample_points(rng, count)
        .iter()
        .map(|p| m.frame(p, order).map_err(err))
        .collect()
}

fn grid_for(m: &ModelSpec, settings: &RunSettings) -> Result<Grid, String> {
    build_grid(m, settings.grids.get(&m.name).map(Vec::as_slice)).map_err(err)
}

fn run_group(m: &ModelSpec, group: Group, s: Samples, settings: &RunSettings) -> GroupResult {
    let mut rng = task_rng(settings.seed, &m.name, group);
    let pts = |k: usize| format!("{k} random points");
    match group {
        Group::SelfCheck => {
            let points = m.sample_points(&mut rng, s.points);
            Ok(vec![match m.validate(&points) {
                Ok(()) => Outcome::value(0.0, pts(s.points)),
                Err(e) => Outcome::value(1.0, pts(s.points)).with_detail(e.to_string()),
            }])
        }
        Group::KnownScalar => {
            let Some(r) = m.known.scalar else {
                return Ok(vec![Outcome::skipped("no closed-form scalar curvature")]);
            };
            let fr = frames(m, &mut rng, s.points, 2)?;
            let res = max_of(fr.iter().map(|f| (f.scalar_curvature() - r).abs()));
            Ok(vec![Outcome::value(res, pts(s.points)).with_detail(format!("R = {r}"))])
        }
        Group::FlatRiemann => {
            if !is_ricci_flat(m) {
                return Ok(vec![Outcome::skipped("model is not flat")]);
            }
            let fr = frames(m, &mut rng, s.points, 2)?;
            Ok(vec![Outcome::value(max_of(fr.iter().map(|f| f.riemann.max_abs())), pts(s.points))])
        }
        Group::FdScalar | Group::FdSigma2 => {
            let q = if group == Group::FdScalar { FdQuantity::Scalar } else { FdQuantity::Sigma2 };
            let mut worst = 0.0f64;
            for p in m.sample_points(&mut rng, s.points) {
                let c = fd_cross_check(m, &q, &p, 1e-4).map_err(err)?;
                worst = worst.max(c.relative_defect());
            }
            Ok(vec![Outcome::value(worst, format!("{}, step 1e-4 and 2e-4", pts(s.points)))])
        }
        Group::Sigma2Routes => {
            let fr = frames(m, &mut rng, s.points, 2)?;
            let res = max_of(fr.iter().map(|f| (sigma2(f) - sigma2_from_schouten(f)).abs()));
            Ok(vec![Outcome::value(res, pts(s.points))])
        }
        Group::Sigma2Known => {
            let Some(v) = m.known.sigma2 else {
                return Ok(vec![Outcome::skipped("no closed-form sigma2")]);
            };
            let fr = frames(m, &mut rng, s.points, 2)?;
            let res = max_of(fr.iter().map(|f| (sigma2(f) - v).abs()));
            Ok(vec![Outcome::value(res, pts(s.points)).with_detail(format!("sigma2 = {v}"))])
        }
        Group::LinearizationFd => {
            let t = 1e-5;
            let flat = is_ricci_flat(m) || m.dim == 2;
            let (mut wg, mut wl) = (0.0f64, 0.0f64);
            for _ in 0..s.functions {
                let h = m.random_sym2(&mut rng);
                let p = m.sample_point(&mut rng);
                let frame = m.frame(&p, 2).map_err(err)?;
                let plus = CurvatureFrame::new(&m.chart.perturbed(&h, t), &p, 2).map_err(err)?;
                let minus = CurvatureFrame::new(&m.chart.perturbed(&h, -t), &p, 2).map_err(err)?;
                let fd_r = (plus.scalar_curvature() - minus.scalar_curvature()) / (2.0 * t);
                let fd_s = (sigma2(&plus) - sigma2(&minus)) / (2.0 * t);
                let g = gamma_linearized(&frame, &h).map_err(err)?;
                let l = lambda_linearized(&frame, &h).map_err(err)?;
                wg = wg.max((g - fd_r).abs() / g.abs().max(f64::MIN_POSITIVE));
                wl = wl.max(if flat {
                    (l - fd_s).abs()
                } else {
                    (l - fd_s).abs() / l.abs().max(f64::MIN_POSITIVE)
                });
            }
            let d = format!("{} random directions h, t = 1e-5", s.functions);
            let note = if flat { "absolute, sigma2 vanishes identically here" } else { "relative" };
            Ok(vec![
                Outcome::value(wg, d.clone()).with_detail("relative"),
                Outcome::value(wl, d).with_detail(note),
            ])
        }
        Group::LinearizationOfMetric => {
            let g = TensorField::metric_of(&m.chart);
            let (mut wg, mut wl) = (0.0f64, 0.0f64);
            for f in frames(m, &mut rng, s.points, 2)? {
                let gam = gamma_linearized(&f, &g).map_err(err)?;
                let lam = lambda_linearized(&f, &g).map_err(err)?;
                wg = wg.max((gam + f.scalar_curvature()).abs());
                wl = wl.max((lam + 2.0 * sigma2(&f)).abs());
            }
            Ok(vec![Outcome::value(wg, pts(s.points)), Outcome::value(wl, pts(s.points))])
        }
        Group::Adjoint => {
            if !m.is_closed() {
                let r = "integral identity on a non-closed chart";
                return Ok(vec![Outcome::skipped(r), Outcome::skipped(r)]);
            }
            let grid = grid_for(m, settings)?;
            let pairs: Vec<(ScalarField, TensorField)> = (0..s.functions)
                .map(|_| (m.random_scalar(&mut rng), m.random_sym2(&mut rng)))
                .collect();
            let table = adjointness_table(&grid, &pairs).map_err(err)?;
            let d = format!("{}, {} random (f, h) pairs", grid.describe(), s.functions);
            Ok(vec![
                Outcome::value(max_of(table.iter().map(|t| t.0.defect)), d.clone()),
                Outcome::value(max_of(table.iter().map(|t| t.1.defect)), d),
            ])
        }
        Group::TraceIdentity => {
            let mut worst = 0.0f64;
            let fs: Vec<ScalarField> = (0..s.functions).map(|_| m.random_scalar(&mut rng)).collect();
            for frame in frames(m, &mut rng, s.points, 4)? {
                for f in &fs {
                    worst = worst.max(trace_lambda_star_direct(&frame, f).map_err(err)?.defect());
                }
            }
            Ok(vec![Outcome::value(
                worst,
                format!("{} x {} random f", pts(s.points), s.functions),
            )])
        }
        Group::LambdaStarOne => {
            let (mut wt, mut wd) = (0.0f64, 0.0f64);
            for frame in frames(m, &mut rng, s.points, 5)? {
                let d = lambda_star_one_identities(&frame).map_err(err)?;
                wt = wt.max(d.trace.abs());
                wd = wd.max(d.divergence.map_or(f64::NAN, |v| v.max_abs()));
            }
            let d = format!("{}, order-5 frames", pts(s.points));
            Ok(vec![Outcome::value(wt, d.clone()), Outcome::value(wd, d)])
        }
        Group::Extended => {
            let (mut wl, mut ws) = (0.0f64, 0.0f64);
            for _ in 0..s.points {
                let f = m.random_scalar(&mut rng);
                let frame = m.frame(&m.sample_point(&mut rng), 4).map_err(err)?;
                wl = wl.max(lemma_extended_identity(&frame, &f).map_err(err)?.defect());
                ws = ws.max(static_extended_identity(&frame, &f).map_err(err)?.defect());
            }
            let d = format!("{} random (point, f) samples", s.points);
            Ok(vec![Outcome::value(wl, d.clone()), Outcome::value(ws, d)])
        }
        Group::ExtendedExactZero => {
            let fs: Vec<ScalarField> = if is_sphere(m) {
                m.kernel_candidates.clone()
            } else if matches!(m.kind, ModelKind::FlatTorus) {
                vec![ScalarField::constant(m.dim, 1.0)]
            } else {
                let r = "no exact solution of the defect equations on this model";
                return Ok(vec![Outcome::skipped(r), Outcome::skipped(r)]);
            };
            let (mut wl, mut ws) = (0.0f64, 0.0f64);
            for frame in frames(m, &mut rng, s.points, 4)? {
                for f in &fs {
                    let a = lemma_extended_identity(&frame, f).map_err(err)?;
                    let b = static_extended_identity(&frame, f).map_err(err)?;
                    wl = wl.max(a.lhs.abs().max(a.rhs.abs()));
                    ws = ws.max(b.lhs.abs().max(b.rhs.abs()));
                }
            }
            let d = format!("{} x {} exact solutions", pts(s.points), fs.len());
            Ok(vec![Outcome::value(wl, d.clone()), Outcome::value(ws, d)])
        }
        Group::EinsteinClosedForm => {
            if !m.known.einstein {
                return Ok(vec![Outcome::skipped("non-Einstein precondition")]);
            }
            let fs: Vec<ScalarField> = (0..s.functions).map(|_| m.random_scalar(&mut rng)).collect();
            let mut worst = 0.0f64;
            for frame in frames(m, &mut rng, s.points, 4)? {
                for f in &fs {
                    let forms = einstein_lambda_star_closed_form(&frame, f).map_err(err)?;
                    worst = worst.max(forms.max_defect());
                }
            }
            Ok(vec![Outcome::value(
                worst,
                format!("{} x {} random f", pts(s.points), s.functions),
            )])
        }
        Group::EinsteinRefusal => {
            if m.known.einstein {
                return Ok(vec![Outcome::skipped("model is Einstein")]);
            }
            let frame = frames(m, &mut rng, 1, 4)?.remove(0);
            let f = ScalarField::constant(m.dim, 1.0);
            Ok(vec![match einstein_lambda_star_closed_form(&frame, &f) {
                Err(OperatorError::NotEinstein { traceless_norm }) => Outcome::value(0.0, pts(1))
                    .with_detail(format!("refused: max |traceless Ricci| = {traceless_norm:e}")),
                Err(e) => Outcome::value(1.0, pts(1)).with_detail(e.to_string()),
                Ok(_) => Outcome::value(1.0, pts(1)).with_detail("closed form was not refused"),
            }])
        }
        Group::SphereKernel => {
            if !is_sphere(m) {
                let r = "round spheres only";
                return Ok(Group::SphereKernel.identities().iter().map(|_| Outcome::skipped(r)).collect());
            }
            sphere_kernel_group(m, s, settings, &mut rng)
        }
        Group::StaticBranchRicciFlat => {
            if !is_ricci_flat(m) {
                return Ok(vec![Outcome::skipped("model is not Ricci-flat")]);
            }
            let one = ScalarField::constant(m.dim, 1.0);
            let mut worst = 0.0f64;
            for frame in frames(m, &mut rng, s.points, 4)? {
                let vs = vacuum_static(&frame, &one)?;
                let ls = lambda_star(&frame, &one).map_err(err)?.max_abs();
                worst = worst.max(vs).max(ls).max(sigma2(&frame).abs());
            }
            Ok(vec![Outcome::value(worst, format!("{}, f = 1", pts(s.points)))
                .with_detail("vacuum static, sigma2-singular, sigma2 = 0")])
        }
        Group::StaticBranchEinstein => {
            if !is_sphere(m) {
                return Ok(vec![Outcome::skipped("round spheres only")]);
            }
            let mut worst = 0.0f64;
            let mut min_r = f64::INFINITY;
            for frame in frames(m, &mut rng, s.points, 4)? {
                min_r = min_r.min(frame.scalar_curvature());
                for f in &m.kernel_candidates {
                    let vs = vacuum_static(&frame, f)?;
                    let ls = lambda_star(&frame, f).map_err(err)?.max_abs();
                    worst = worst.max(vs).max(ls);
                }
            }
            if min_r <= 0.0 {
                worst = f64::INFINITY;
            }
            Ok(vec![Outcome::value(worst, format!("{} x coordinate eigenfunctions", pts(s.points)))
                .with_detail(format!("min R = {min_r}"))])
        }
        Group::NegativeControls => {
            let non_einstein_product =
                matches!(m.kind, ModelKind::ProductSpheres { .. }) && !m.known.einstein;
            if !non_einstein_product {
                let r = "non-Einstein product only";
                return Ok(vec![Outcome::skipped(r), Outcome::skipped(r)]);
            }
            let one = ScalarField::constant(m.dim, 1.0);
            let zero = ScalarField::constant(m.dim, 0.0);
            let (mut min_trace, mut min_cpe) = (f64::INFINITY, f64::INFINITY);
            for frame in frames(m, &mut rng, s.points, 4)? {
                let b = trace_lambda_star_direct(&frame, &one).map_err(err)?;
                min_trace = min_trace.min(b.lhs.abs());
                min_cpe = min_cpe.min(cpe_residual(&frame, &zero).map_err(err)?.max_abs());
            }
            Ok(vec![
                Outcome::value(1e-3 / min_trace, pts(s.points))
                    .with_detail(format!("ratio 1e-3 / |tr L*(1)|, min |tr L*(1)| = {min_trace}")),
                Outcome::value(1e-3 / min_cpe, pts(s.points))
                    .with_detail(format!("ratio 1e-3 / |cpe residual(0)|, min = {min_cpe}")),
            ])
        }
    }
}

fn vacuum_static(frame: &CurvatureFrame, f: &ScalarField) -> Result<f64, String> {
    Ok(vacuum_static_residual(frame, f).map_err(err)?.max_abs())
}

fn sphere_kernel_group(
    m: &ModelSpec,
    s: Samples,
    settings: &RunSettings,
    rng: &mut ChaCha8Rng,
) -> GroupResult {
    let cands = &m.kernel_candidates;
    let mut kernel = 0.0f64;
    let mut eigen = 0.0f64;
    for frame in frames(m, rng, s.points, 4)? {
        for f in cands {
            kernel = kernel
                .max(gamma_star(&frame, f).map_err(err)?.max_abs())
                .max(lambda_star(&frame, f).map_err(err)?.max_abs());
            eigen = eigen
                .max(laplacian_eigen_relation(&frame, f).map_err(err)?.abs())
                .max(obata_residual(&frame, f).map_err(err)?.max_abs());
        }
    }
    let grid = grid_for(m, settings)?;
    let vol = grid.volume();
    let mut mean = 0.0f64;
    for f in cands {
        mean = mean.max(integrate_scalar(&grid, f).map_err(err)?.abs() / vol);
    }
    let k = cands.len();
    let products = grid
        .integrate_many(|p| {
            let v: Vec<f64> = cands.iter().map(|f| f.value(p)).collect::<Result<_, _>>()?;
            let mut row = Vec::with_capacity(k * k);
            for a in &v {
                for b in &v {
                    row.push(a * b);
                }
            }
            Ok(row)
        })
        .map_err(err)?;
    let lambda_min = symmetric_eigenvalues(k, products)[0];
    let floor = 0.1 * vol / k as f64;
    let mut rayleigh = 0.0f64;
    for f in cands {
        let b = rayleigh_identity(m, f, &grid).map_err(err)?;
        rayleigh = rayleigh.max(b.defect() / b.lhs.abs().max(f64::MIN_POSITIVE));
    }
    let on_pts = format!("{} random points x {k} eigenfunctions", s.points);
    Ok(vec![
        Outcome::value(kernel, on_pts.clone()),
        Outcome::value(mean, grid.describe()).with_detail("max |integral f| / vol"),
        Outcome::value(floor / lambda_min, grid.describe()).with_detail(format!(
            "ratio 0.1 vol/(n+1) / min Gram eigenvalue, min eigenvalue = {lambda_min}"
        )),
        Outcome::value(rayleigh, grid.describe()).with_detail("relative"),
        Outcome::value(eigen, on_pts),
    ])
}

/// Runs one task and turns its outcomes into reports.
pub fn run_task(task: &Task, settings: &RunSettings) -> Vec<IdentityReport> {
    let start = Instant::now();
    let ids = task.group.identities();
    let outcomes = match find_model_with(&task.model, &settings.params) {
        Ok(m) => run_group(&m, task.group, task.samples, settings),
        Err(e) => Err(e.to_string()),
    };
    let elapsed = start.elapsed().as_millis() as u64;
    let wall_time_ms = if settings.timings { elapsed } else { 0 };
    let outcomes = outcomes.unwrap_or_else(|e| {
        ids.iter()
            .map(|_| Outcome {
                residual: f64::INFINITY,
                description: "evaluation failed".into(),
                detail: e.clone(),
                skipped: false,
            })
            .collect()
    });
    ids.iter()
        .zip(outcomes)
        .map(|(id, o)| {
            let tolerance = settings.tolerance(id);
            let pass = o.skipped || o.residual <= tolerance;
            IdentityReport {
                criterion: task.criterion,
                model: task.model.clone(),
                identity: id.to_string(),
                points_or_grid: o.description,
                max_residual: o.residual,
                tolerance,
                pass,
                status: if o.skipped {
                    Status::Skipped
                } else if pass {
                    Status::Pass
                } else {
                    Status::Fail
                },
                wall_time_ms,
                detail: o.detail,
            }
        })
        .collect()
}

/// Runs tasks in parallel; reports keep task order.
pub fn run_tasks(tasks: &[Task], settings: &RunSettings) -> Vec<IdentityReport> {
    tasks
        .par_iter()
        .map(|t| run_task(t, settings))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Every identity group on one model with default sample sizes.
pub fn identity_tasks(model: &str) -> Vec<Task> {
    Group::ALL
        .iter()
        .map(|&group| Task {
            criterion: None,
            model: model.to_string(),
            group,
            samples: match group {
                Group::Adjoint | Group::LinearizationFd => Samples::new(0, 10),
                Group::FdScalar | Group::FdSigma2 | Group::EinsteinRefusal => Samples::new(3, 0),
                Group::EinsteinClosedForm | Group::TraceIdentity => Samples::new(10, 3),
                _ => Samples::default(),
            },
        })
        .collect()
}

/// Runs every applicable identity on `model`; failures are reported, not raised.
pub fn cmd_identities(model: &str, settings: &RunSettings) -> Vec<IdentityReport> {
    run_tasks(&identity_tasks(model), settings)
}

/// The acceptance criteria as tasks.
pub fn acceptance_tasks(params: &CatalogParams) -> Vec<Task> {
    let mut out = Vec::new();
    let mut add = |criterion: u8, models: &[&str], group: Group, samples: Samples| {
        for m in models {
            out.push(Task {
                criterion: Some(criterion),
                model: m.to_string(),
                group,
                samples,
            });
        }
    };
    let all: Vec<String> = model_catalog_with(params).into_iter().map(|m| m.name).collect();
    let all: Vec<&str> = all.iter().map(String::as_str).collect();
    let spheres = ["s2_r1", "s3_r1", "s4_r1", "s3_r2"];
    let pt = "perturbed_torus_3";

    add(1, &spheres, Group::KnownScalar, Samples::new(20, 0));
    add(1, &["flat_torus_2", "flat_torus_3"], Group::FlatRiemann, Samples::new(20, 0));
    add(1, &["s2_r1", "s3_r1"], Group::FdScalar, Samples::new(3, 0));
    add(1, &all, Group::SelfCheck, Samples::new(20, 0));

    add(2, &[pt], Group::Sigma2Routes, Samples::new(100, 0));
    add(2, &["s3_r1", "s4_r1", "flat_torus_3"], Group::Sigma2Known, Samples::new(20, 0));
    add(2, &[pt], Group::FdSigma2, Samples::new(3, 0));

    add(3, &[pt], Group::LinearizationFd, Samples::new(0, 10));
    add(3, &all, Group::LinearizationOfMetric, Samples::new(5, 0));

    add(4, &["flat_torus_3", pt, "s2_r1", "s2xs2_r1_r1"], Group::Adjoint, Samples::new(0, 10));

    add(5, &[pt, "s2xs2_r1_r1", "s2xs2_r1_r2"], Group::TraceIdentity, Samples::new(50, 5));

    add(6, &[pt], Group::LambdaStarOne, Samples::new(20, 0));

    add(7, &[pt, "s2xs2_r1_r2"], Group::Extended, Samples::new(50, 0));
    add(7, &["s2_r1", "s3_r1", "flat_torus_3"], Group::ExtendedExactZero, Samples::new(5, 0));

    add(8, &["s3_r1", "s4_r1", "s2xs2_r1_r1"], Group::EinsteinClosedForm, Samples::new(5, 5));
    add(8, &["s2xs2_r1_r2"], Group::EinsteinRefusal, Samples::new(1, 0));

    add(9, &["s2_r1", "s2_r2", "s3_r1", "s3_r2"], Group::SphereKernel, Samples::new(5, 0));

    add(10, &["flat_torus_2", "flat_torus_3"], Group::StaticBranchRicciFlat, Samples::new(5, 0));
    add(
        10,
        &["s2_r1", "s2_r2", "s3_r1", "s3_r2", "s4_r1", "s4_r2"],
        Group::StaticBranchEinstein,
        Samples::new(5, 0),
    );
    add(10, &["s2xs2_r1_r2"], Group::NegativeControls, Samples::new(5, 0));
    out
}

// ---------------------------------------------------------------------------
// Configuration

/// Suite configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Include per-task wall time in reports (makes bundles non-reproducible).
    pub timings: bool,
    /// Restrict to these models.
    pub models: Option<Vec<String>>,
    /// Restrict to these identity ids.
    pub identities: Option<Vec<String>>,
    /// Restrict to these criteria.
    pub criteria: Option<Vec<u8>>,
    pub tolerances: BTreeMap<String, f64>,
    pub grids: BTreeMap<String, Vec<usize>>,
    pub params: CatalogParams,
}

impl Default for SuiteConfig {
    fn default() -> SuiteConfig {
        SuiteConfig {
            seed: 42,
            timings: false,
            models: None,
            identities: None,
            criteria: None,
            tolerances: BTreeMap::new(),
            grids: BTreeMap::new(),
            params: CatalogParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("config line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config line {line}: unknown identity `{id}`")]
    UnknownIdentity { line: usize, id: String },
    #[error("config line {line}: tolerance for `{id}` must be a non-negative number")]
    BadTolerance { line: usize, id: String },
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map_or(0, |o| line_col(text, o).0)
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<SuiteConfig, ConfigError> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let known = |id: &str| default_tolerance(id).is_some();
        for (id, &tol) in &cfg.tolerances {
            if !known(id) {
                return Err(ConfigError::UnknownIdentity {
                    line: line_of(text, id),
                    id: id.clone(),
                });
            }
            if tol.is_nan() || tol < 0.0 {
                return Err(ConfigError::BadTolerance {
                    line: line_of(text, id),
                    id: id.clone(),
                });
            }
        }
        for id in cfg.identities.iter().flatten() {
            if !known(id) {
                return Err(ConfigError::UnknownIdentity {
                    line: line_of(text, id),
                    id: id.clone(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<SuiteConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        SuiteConfig::parse(&text)
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            seed: self.seed,
            tolerances: self.tolerances.clone(),
            grids: self.grids.clone(),
            params: self.params.clone(),
            timings: self.timings,
        }
    }

    /// Acceptance tasks after the model, criterion, and identity filters.
    pub fn tasks(&self) -> Vec<Task> {
        acceptance_tasks(&self.params)
            .into_iter()
            .filter(|t| self.models.as_ref().is_none_or(|ms| ms.contains(&t.model)))
            .filter(|t| {
                self.criteria
                    .as_ref()
                    .is_none_or(|cs| t.criterion.is_some_and(|c| cs.contains(&c)))
            })
            .filter(|t| {
                self.identities.as_ref().is_none_or(|ids| {
                    t.group.identities().iter().any(|i| ids.iter().any(|x| x == i))
                })
            })
            .collect()
    }
}

/// Summary counts of a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub all_pass: bool,
}

/// Everything a suite run emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub seed: u64,
    pub summary: Summary,
    pub reports: Vec<IdentityReport>,
}

impl Bundle {
    pub fn new(seed: u64, reports: Vec<IdentityReport>) -> Bundle {
        let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
        Bundle {
            seed,
            summary: Summary {
                total: reports.len(),
                passed: count(Status::Pass),
                failed: count(Status::Fail),
                skipped: count(Status::Skipped),
                all_pass: reports.iter().all(|r| r.pass),
            },
            reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }
}

/// Runs the configured acceptance suite.
pub fn cmd_suite(config: &SuiteConfig) -> Bundle {
    let reports = run_tasks(&config.tasks(), &config.settings());
    let reports = match &config.identities {
        Some(ids) => reports.into_iter().filter(|r| ids.contains(&r.identity)).collect(),
        None => reports,
    };
    Bundle::new(config.seed, reports)
}

/// Pointwise curvature summary at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSummary {
    pub model: String,
    pub point: Vec<f64>,
    pub order: usize,
    pub scalar_curvature: f64,
    pub ricci_eigenvalues: Vec<f64>,
    pub sigma2: f64,
    pub traceless_ricci_norm: f64,
    pub traceless_ricci_norm_sq: f64,
}

pub fn cmd_curvature(
    model: &ModelSpec,
    point: &[f64],
    order: usize,
) -> Result<CurvatureSummary, crate::geometry::GeometryError> {
    let frame = model.frame(point, order)?;
    let sq = traceless_ricci_norm_sq(&frame);
    let _ = traceless_ricci(&frame);
    Ok(CurvatureSummary {
        model: model.name.clone(),
        point: point.to_vec(),
        order,
        scalar_curvature: frame.scalar_curvature(),
        ricci_eigenvalues: frame.ricci_eigenvalues(),
        sigma2: sigma2(&frame),
        traceless_ricci_norm: sq.max(0.0).sqrt(),
        traceless_ricci_norm_sq: sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_identity_has_a_default_tolerance() {
        for g in Group::ALL {
            for id in g.identities() {
                assert!(default_tolerance(id).is_some(), "{id}");
            }
        }
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = SuiteConfig::parse(
            "seed = 7\nmodels = [\"flat_torus_2\"]\n[tolerances]\n\"eq12-div-of-one\" = 1e-12\n[grids]\ns2_r1 = [16, 32]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerances["eq12-div-of-one"], 1e-12);
        assert_eq!(cfg.grids["s2_r1"], vec![16, 32]);
        assert!(cfg.tasks().iter().all(|t| t.model == "flat_torus_2"));

        match SuiteConfig::parse("seed = 1\nseed = = 2\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match SuiteConfig::parse("seed = 1\n\n[tolerances]\nbogus = 1.0\n") {
            Err(ConfigError::UnknownIdentity { line, id }) => {
                assert_eq!((line, id.as_str()), (4, "bogus"))
            }
            other => panic!("{other:?}"),
        }
        match SuiteConfig::parse("colour = 3\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_torus_identities_are_tight() {
        let reports = cmd_identities("flat_torus_2", &RunSettings::with_seed(1));
        for r in &reports {
            assert!(r.pass, "{r:?}");
            if r.status == Status::Pass && r.tolerance > 0.0 && r.tolerance < 1e-6 {
                assert!(r.max_residual <= 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn einstein_form_skipped_on_non_einstein_product() {
        let task = Task {
            criterion: None,
            model: "s2xs2_r1_r2".into(),
            group: Group::EinsteinClosedForm,
            samples: Samples::new(2, 1),
        };
        let r = &run_task(&task, &RunSettings::with_seed(3))[0];
        assert_eq!(r.status, Status::Skipped);
        assert!(r.pass);
    }

    #[test]
    fn reports_are_deterministic() {
        let task = Task {
            criterion: Some(5),
            model: "perturbed_torus_3".into(),
            group: Group::TraceIdentity,
            samples: Samples::new(3, 2),
        };
        let s = RunSettings::with_seed(42);
        assert_eq!(run_task(&task, &s), run_task(&task, &s));
        let a = Bundle::new(42, run_task(&task, &s)).to_json();
        let b = Bundle::new(42, run_task(&task, &s)).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_model_is_reported() {
        let task = Task {
            criterion: None,
            model: "nowhere".into(),
            group: Group::KnownScalar,
            samples: Samples::default(),
        };
        let r = &run_task(&task, &RunSettings::default())[0];
        assert!(!r.pass);
        assert!(r.detail.contains("unknown model"));
    }

    #[test]
    fn curvature_summary_examples() {
        let m = crate::models::find_model("s3_r1").unwrap();
        let s = cmd_curvature(&m, &[1.0, 0.5, 0.3], 2).unwrap();
        assert!((s.scalar_curvature - 6.0).abs() < 1e-12);
        assert!((s.sigma2 - 0.75).abs() < 1e-12);
        assert!(s.traceless_ricci_norm < 1e-6);
    }
}
