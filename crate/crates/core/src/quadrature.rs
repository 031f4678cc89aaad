//! Integration grids on closed models, L² pairings, adjointness checks, and
//! a finite-difference oracle for the jet curvature pipeline.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    inner, CurvatureFrame, GeometryError, ScalarField, TensorField, TensorJet,
};
use crate::jets::Jet;
use crate::models::{AxisRule, ModelSpec};
use crate::operators::{
    gamma_linearized_jet, gamma_star_jet, lambda_linearized_jet, lambda_star_from_parts,
    lambda_star_jet, linearizations_jet, sigma2, Balance, OperatorError,
};

/// Smallest accepted node count per axis.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("model `{0}` is not closed; integration is refused")]
    NotClosed(String),
    #[error("resolution {got} on axis {axis} is below {MIN_RESOLUTION}")]
    Resolution { axis: usize, got: usize },
    #[error("resolution has {got} axes, model has {expected}")]
    ResolutionRank { got: usize, expected: usize },
    #[error("grid is for `{grid}`, not `{model}`")]
    ModelMismatch { grid: String, model: String },
    #[error("L² pairing of a scalar with a symmetric 2-tensor")]
    KindMismatch,
    #[error("finite-difference stencil at {point:?} with step {step} leaves the chart")]
    StencilOutsideDomain { point: Vec<f64>, step: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = QuadratureError> = std::result::Result<T, E>;

/// Tensor-product quadrature on a closed model.
///
/// `weights` integrate against the coordinate measure; `density` holds
/// `√det g` at each node.
#[derive(Debug, Clone)]
pub struct Grid {
    pub model: ModelSpec,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub density: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w √det g`
    pub fn volume(&self) -> f64 {
        compensated_sum(self.weights.iter().zip(&self.density).map(|(w, d)| w * d))
    }

    pub fn describe(&self) -> String {
        let dims: Vec<String> = self.resolution.iter().map(|r| r.to_string()).collect();
        format!("{} grid {}", self.model.name, dims.join("x"))
    }

    fn check_model(&self, model: &ModelSpec) -> Result<()> {
        if self.model.name != model.name {
            return Err(QuadratureError::ModelMismatch {
                grid: self.model.name.clone(),
                model: model.name.clone(),
            });
        }
        Ok(())
    }

    /// Integrates several quantities at once: `eval` returns one value per
    /// quantity at a node. Nodes are evaluated in parallel and summed in node
    /// order, so results do not depend on the worker count.
    pub fn integrate_many<F>(&self, eval: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let rows: Vec<Vec<f64>> = self
            .nodes
            .par_iter()
            .map(|p| eval(p))
            .collect::<Result<_>>()?;
        let k = rows.first().map_or(0, Vec::len);
        Ok((0..k)
            .map(|q| {
                compensated_sum(
                    rows.iter()
                        .zip(&self.weights)
                        .zip(&self.density)
                        .map(|((r, w), d)| r[q] * w * d),
                )
            })
            .collect())
    }

    pub fn integrate<F>(&self, eval: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        Ok(self.integrate_many(|p| Ok(vec![eval(p)?]))?[0])
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn axis_nodes(rule: AxisRule, n: usize) -> (Vec<f64>, Vec<f64>) {
    match rule {
        AxisRule::Periodic => {
            let h = TAU / n as f64;
            ((0..n).map(|i| i as f64 * h).collect(), vec![h; n])
        }
        AxisRule::PolarGaussCos => {
            let (x, w) = gauss_legendre(n);
            // θ ascending; dθ = dx / sin θ
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for i in (0..n).rev() {
                nodes.push(x[i].acos());
                weights.push(w[i] / (1.0 - x[i] * x[i]).sqrt());
            }
            (nodes, weights)
        }
        AxisRule::PolarUniform => {
            let h = PI / (n as f64 + 1.0);
            ((1..=n).map(|i| i as f64 * h).collect(), vec![h; n])
        }
    }
}

/// Tensor-product grid with `resolution` nodes per axis (the model default
/// when `None`).
pub fn build_grid(model: &ModelSpec, resolution: Option<&[usize]>) -> Result<Grid> {
    if !model.is_closed() {
        return Err(QuadratureError::NotClosed(model.name.clone()));
    }
    let resolution = resolution.unwrap_or(&model.default_resolution).to_vec();
    if resolution.len() != model.dim {
        return Err(QuadratureError::ResolutionRank {
            got: resolution.len(),
            expected: model.dim,
        });
    }
    for (axis, &got) in resolution.iter().enumerate() {
        if got < MIN_RESOLUTION {
            return Err(QuadratureError::Resolution { axis, got });
        }
    }
    let per_axis: Vec<(Vec<f64>, Vec<f64>)> = model
        .axis_rules
        .iter()
        .zip(&resolution)
        .map(|(&r, &n)| axis_nodes(r, n))
        .collect();

    let total: usize = resolution.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; model.dim];
    for _ in 0..total {
        nodes.push(idx.iter().enumerate().map(|(a, &i)| per_axis[a].0[i]).collect::<Vec<_>>());
        weights.push(idx.iter().enumerate().map(|(a, &i)| per_axis[a].1[i]).product());
        for a in (0..model.dim).rev() {
            idx[a] += 1;
            if idx[a] < resolution[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    let density = nodes
        .par_iter()
        .map(|p| {
            let g = model.chart.metric_values(p)?;
            cholesky_sqrt_det(model.dim, &g).ok_or_else(|| {
                QuadratureError::from(GeometryError::NotPositiveDefinite {
                    chart: model.name.clone(),
                    point: p.clone(),
                })
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Grid {
        model: model.clone(),
        nodes,
        weights,
        density,
        resolution,
    })
}

fn cholesky_sqrt_det(n: usize, g: &[f64]) -> Option<f64> {
    let mut l = g.to_vec();
    let mut det = 1.0;
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        det *= d;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(det)
}

pub fn integrate_scalar(grid: &Grid, field: &ScalarField) -> Result<f64> {
    grid.integrate(|p| Ok(field.value(p)?))
}

/// Field argument of [`l2_pair`].
#[derive(Debug, Clone)]
pub enum L2Field {
    Scalar(ScalarField),
    Sym2(TensorField),
}

/// `∫ a·b dv` for scalars or `∫ ⟨a, b⟩_g dv` for symmetric 2-tensors.
pub fn l2_pair(grid: &Grid, a: &L2Field, b: &L2Field) -> Result<f64> {
    match (a, b) {
        (L2Field::Scalar(a), L2Field::Scalar(b)) => {
            grid.integrate(|p| Ok(a.value(p)? * b.value(p)?))
        }
        (L2Field::Sym2(a), L2Field::Sym2(b)) => grid.integrate(|p| {
            let frame = grid.model.frame(p, 2)?;
            let (ja, jb) = (a.jet(p, 0)?, b.jet(p, 0)?);
            Ok(inner(&frame, &ja, &jb, 0)?.value())
        }),
        _ => Err(QuadratureError::KindMismatch),
    }
}

/// Operator pair whose adjointness is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointPair {
    Gamma,
    Lambda,
}

/// `∫ f·Op(h) dv` against `∫ ⟨Op*f, h⟩ dv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjointReport {
    pub forward: f64,
    pub adjoint: f64,
    /// `|forward − adjoint| / max(1, |forward|, |adjoint|)`
    pub defect: f64,
}

impl AdjointReport {
    fn new(forward: f64, adjoint: f64) -> AdjointReport {
        let scale = forward.abs().max(adjoint.abs()).max(1.0);
        AdjointReport {
            forward,
            adjoint,
            defect: (forward - adjoint).abs() / scale,
        }
    }
}

pub fn adjointness_defect(
    grid: &Grid,
    f: &ScalarField,
    h: &TensorField,
    pair: AdjointPair,
) -> Result<AdjointReport> {
    Ok(adjointness_defects(grid, &[(f.clone(), h.clone())], pair)?[0])
}

/// Batched form of [`adjointness_defect`]: one frame per node serves every pair.
pub fn adjointness_defects(
    grid: &Grid,
    pairs: &[(ScalarField, TensorField)],
    pair: AdjointPair,
) -> Result<Vec<AdjointReport>> {
    Ok(adjoint_sweep(grid, pairs, &[pair])?.remove(0))
}

/// Both operator pairs for every `(f, h)`, sharing node frames and field jets.
/// Returns `(gamma, lambda)` reports per input pair.
pub fn adjointness_table(
    grid: &Grid,
    pairs: &[(ScalarField, TensorField)],
) -> Result<Vec<(AdjointReport, AdjointReport)>> {
    let mut t = adjoint_sweep(grid, pairs, &[AdjointPair::Gamma, AdjointPair::Lambda])?;
    let lambda = t.pop().unwrap();
    let gamma = t.pop().unwrap();
    Ok(gamma.into_iter().zip(lambda).collect())
}

fn adjoint_sweep(
    grid: &Grid,
    pairs: &[(ScalarField, TensorField)],
    ops: &[AdjointPair],
) -> Result<Vec<Vec<AdjointReport>>> {
    let order = if ops.contains(&AdjointPair::Lambda) { 4 } else { 2 };
    let sums = grid.integrate_many(|p| {
        let frame = grid.model.frame(p, order)?;
        let mut row = Vec::with_capacity(2 * pairs.len() * ops.len());
        for (f, h) in pairs {
            let fj = f.jet(p, 2)?;
            let hj = h.jet(p, 2)?;
            let h0 = hj.to_sym2();
            let forward = if ops.len() == 2 {
                let (g, l) = linearizations_jet(&frame, &hj)?;
                vec![g, l]
            } else {
                ops.iter()
                    .map(|op| match op {
                        AdjointPair::Gamma => gamma_linearized_jet(&frame, &hj),
                        AdjointPair::Lambda => lambda_linearized_jet(&frame, &hj),
                    })
                    .collect::<Result<Vec<f64>, OperatorError>>()?
            };
            for (op, fwd) in ops.iter().zip(forward) {
                let star = match op {
                    AdjointPair::Gamma => gamma_star_jet(&frame, &fj)?,
                    AdjointPair::Lambda => lambda_star_jet(&frame, &fj, 0)?.to_sym2(),
                };
                row.push(fj.value() * fwd);
                row.push(frame.inner_values(&star, &h0));
            }
        }
        Ok(row)
    })?;
    let k = ops.len();
    Ok((0..k)
        .map(|o| {
            sums.chunks(2 * k)
                .map(|c| AdjointReport::new(c[2 * o], c[2 * o + 1]))
                .collect()
        })
        .collect())
}

/// `(R/(n−1)) ∫ f² dv` against `∫ |∇f|²_g dv`.
pub fn rayleigh_identity(model: &ModelSpec, f: &ScalarField, grid: &Grid) -> Result<Balance> {
    grid.check_model(model)?;
    let nm1 = model.dim as f64 - 1.0;
    let sums = grid.integrate_many(|p| {
        let frame = model.frame(p, 2)?;
        let fj = f.jet(p, 1)?;
        let n = model.dim;
        let grad: Vec<f64> = (0..n).map(|i| fj.diff_to(i, 0).value()).collect();
        let mut norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                norm += frame.g_inv.at2(i, j).value() * grad[i] * grad[j];
            }
        }
        let v = fj.value();
        Ok(vec![frame.scalar_curvature() / nm1 * v * v, norm])
    })?;
    Ok(Balance {
        lhs: sums[0],
        rhs: sums[1],
    })
}

/// Quantity compared by [`fd_cross_check`].
#[derive(Debug, Clone)]
pub enum FdQuantity {
    Scalar,
    Sigma2,
    /// Component `(i, j)` of `Λ*f`.
    LambdaStarEntry { f: ScalarField, i: usize, j: usize },
}

/// Jet value against central finite differences at `step` and `2·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCheck {
    pub jet: f64,
    pub fd: f64,
    pub fd_coarse: f64,
}

impl FdCheck {
    pub fn defect(&self) -> f64 {
        (self.jet - self.fd).abs()
    }

    pub fn relative_defect(&self) -> f64 {
        self.defect() / self.jet.abs().max(1.0)
    }
}

/// Second-order Taylor jets of sampled values: central differences for the
/// gradient and Hessian of every component of `sample`.
fn fd_jets<F>(point: &[f64], step: f64, components: usize, sample: F) -> Result<Vec<Jet>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = point.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut p = point.to_vec();
        for &(a, s) in shifts {
            p[a] += s;
        }
        sample(&p)
    };
    let center = sample(point)?;
    let mut grad = vec![vec![0.0; n]; components];
    let mut hess = vec![vec![0.0; n * n]; components];
    for a in 0..n {
        let (plus, minus) = (at(&[(a, step)])?, at(&[(a, -step)])?);
        for c in 0..components {
            grad[c][a] = (plus[c] - minus[c]) / (2.0 * step);
            hess[c][a * n + a] = (plus[c] - 2.0 * center[c] + minus[c]) / (step * step);
        }
        for b in (a + 1)..n {
            let pp = at(&[(a, step), (b, step)])?;
            let pm = at(&[(a, step), (b, -step)])?;
            let mp = at(&[(a, -step), (b, step)])?;
            let mm = at(&[(a, -step), (b, -step)])?;
            for c in 0..components {
                let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * step * step);
                hess[c][a * n + b] = v;
                hess[c][b * n + a] = v;
            }
        }
    }
    (0..components)
        .map(|c| {
            let mut j = Jet::constant(n, 2, center[c]);
            let seeds = Jet::seeds(point, 2).map_err(GeometryError::from)?;
            for a in 0..n {
                let da = &seeds[a].add_scalar(-point[a]);
                j.axpy_assign(grad[c][a], da);
                for b in 0..n {
                    let db = seeds[b].add_scalar(-point[b]);
                    j.axpy_assign(0.5 * hess[c][a * n + b], &(da * &db));
                }
            }
            Ok(j)
        })
        .collect()
}

fn fd_value(model: &ModelSpec, quantity: &FdQuantity, point: &[f64], step: f64) -> Result<f64> {
    let n = model.dim;
    let g_jets = fd_jets(point, step, n * n, |p| Ok(model.chart.metric_values(p)?))?;
    let frame = CurvatureFrame::from_metric(
        point,
        TensorJet::from_fn(n, 2, 2, |ix| g_jets[ix[0] * n + ix[1]].clone()),
    )?;
    match quantity {
        FdQuantity::Scalar => Ok(frame.scalar_curvature()),
        FdQuantity::Sigma2 => Ok(sigma2(&frame)),
        FdQuantity::LambdaStarEntry { f, i, j } => {
            // second-order frames at the stencil points, differenced outside the jet pipeline
            let curv = fd_jets(point, step, n * n + 1, |p| {
                let fr = model.frame(p, 2)?;
                let mut v = fr.ricci.values();
                v.push(fr.scalar.value());
                Ok(v)
            })?;
            let ricci = TensorJet::from_fn(n, 2, 2, |ix| curv[ix[0] * n + ix[1]].clone());
            let fj = fd_jets(point, step, 1, |p| Ok(vec![f.value(p)?]))?.remove(0);
            let ls = lambda_star_from_parts(&frame, &ricci, &curv[n * n], &fj, 0)?;
            Ok(ls.at2(*i, *j).value())
        }
    }
}

/// Compares the jet value of `quantity` at `point` with finite differences
/// of metric samples at `step` and `2·step`.
pub fn fd_cross_check(
    model: &ModelSpec,
    quantity: &FdQuantity,
    point: &[f64],
    step: f64,
) -> Result<FdCheck> {
    let reach = match quantity {
        FdQuantity::LambdaStarEntry { .. } => 4.0 * step,
        _ => 2.0 * step,
    };
    for (a, axis) in model.chart.axes().iter().enumerate() {
        let x = point[a];
        if !(axis.contains(x - reach) && axis.contains(x + reach)) {
            return Err(QuadratureError::StencilOutsideDomain {
                point: point.to_vec(),
                step,
            });
        }
    }
    let jet = match quantity {
        FdQuantity::Scalar => model.frame(point, 2)?.scalar_curvature(),
        FdQuantity::Sigma2 => sigma2(&model.frame(point, 2)?),
        FdQuantity::LambdaStarEntry { f, i, j } => {
            let frame = model.frame(point, 4)?;
            lambda_star_jet(&frame, &f.jet(point, 2)?, 0)?.at2(*i, *j).value()
        }
    };
    Ok(FdCheck {
        jet,
        fd: fd_value(model, quantity, point, step)?,
        fd_coarse: fd_value(model, quantity, point, 2.0 * step)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::find_model;

    fn s2() -> ModelSpec {
        find_model("s2_r1").unwrap()
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}: {q}");
        }
        let (x, _) = gauss_legendre(5);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x[2].abs() < 1e-16);
    }

    #[test]
    fn volumes() {
        let t2 = build_grid(&find_model("flat_torus_2").unwrap(), Some(&[32, 32])).unwrap();
        assert!((t2.volume() - TAU * TAU).abs() <= 1e-12 * TAU * TAU);
        let g = build_grid(&s2(), Some(&[32, 64])).unwrap();
        assert!((g.volume() - 4.0 * PI).abs() < 1e-10);
        let s3 = build_grid(&find_model("s3_r1").unwrap(), Some(&[24, 24, 48])).unwrap();
        assert!((s3.volume() - 2.0 * PI * PI).abs() < 1e-8 * 2.0 * PI * PI);
        for m in crate::models::model_catalog().into_iter().filter(|m| m.is_closed()) {
            let grid = build_grid(&m, None).unwrap();
            assert!(grid.weights.iter().all(|&w| w > 0.0));
            if let Some(v) = m.known.volume {
                let rel = (grid.volume() - v).abs() / v;
                assert!(rel <= 1e-9, "{}: {rel:e}", m.name);
            }
        }
    }

    #[test]
    fn refuses_open_models_and_coarse_grids() {
        let e = build_grid(&find_model("poincare_2").unwrap(), None).unwrap_err();
        assert!(matches!(e, QuadratureError::NotClosed(_)));
        let e = build_grid(&s2(), Some(&[4, 16])).unwrap_err();
        assert_eq!(e, QuadratureError::Resolution { axis: 0, got: 4 });
        let e = build_grid(&s2(), Some(&[16])).unwrap_err();
        assert!(matches!(e, QuadratureError::ResolutionRank { .. }));
    }

    #[test]
    fn sphere_integrals() {
        let g = build_grid(&s2(), Some(&[32, 64])).unwrap();
        let cos = ScalarField::new("cos", 2, |s: &[Jet]| s[0].cos());
        assert!(integrate_scalar(&g, &cos).unwrap().abs() < 1e-12);
        let cos2 = ScalarField::new("cos2", 2, |s: &[Jet]| {
            let c = s[0].cos();
            &c * &c
        });
        assert!((integrate_scalar(&g, &cos2).unwrap() - 4.0 * PI / 3.0).abs() < 1e-10);
        let metric = L2Field::Sym2(TensorField::metric_of(&g.model.chart));
        let gg = l2_pair(&g, &metric, &metric).unwrap();
        assert!((gg - 8.0 * PI).abs() < 1e-10);
        let sc = L2Field::Scalar(cos.clone());
        assert!((l2_pair(&g, &sc, &sc).unwrap() - 4.0 * PI / 3.0).abs() < 1e-10);
        assert_eq!(l2_pair(&g, &sc, &metric), Err(QuadratureError::KindMismatch));
    }

    #[test]
    fn rayleigh_on_spheres() {
        let m = s2();
        let g = build_grid(&m, Some(&[32, 64])).unwrap();
        let cos = ScalarField::new("cos", 2, |s: &[Jet]| s[0].cos());
        let b = rayleigh_identity(&m, &cos, &g).unwrap();
        assert!((b.lhs - 8.0 * PI / 3.0).abs() < 1e-8);
        assert!((b.rhs - 8.0 * PI / 3.0).abs() < 1e-8);
        let zero = rayleigh_identity(&m, &ScalarField::constant(2, 0.0), &g).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));

        let s3 = find_model("s3_r1").unwrap();
        let g3 = build_grid(&s3, None).unwrap();
        let b = rayleigh_identity(&s3, &s3.kernel_candidates[2], &g3).unwrap();
        assert!(b.relative_defect() < 1e-7, "{b:?}");
        assert!(rayleigh_identity(&s3, &cos, &g).is_err());
    }

    #[test]
    fn fd_oracle_sphere_and_torus() {
        let c = fd_cross_check(&s2(), &FdQuantity::Scalar, &[1.0, 0.5], 1e-4).unwrap();
        assert!((c.jet - 2.0).abs() < 1e-12);
        assert!(c.defect() <= 1e-5, "{c:?}");
        let t = find_model("flat_torus_3").unwrap();
        let c = fd_cross_check(&t, &FdQuantity::Sigma2, &[1.0, 2.0, 3.0], 1e-4).unwrap();
        assert_eq!(c.jet, 0.0);
        assert!(c.fd.abs() < 1e-12);
        let e = fd_cross_check(&s2(), &FdQuantity::Scalar, &[0.01, 0.5], 1e-4).unwrap_err();
        assert!(matches!(e, QuadratureError::StencilOutsideDomain { .. }));
    }

    #[test]
    fn fd_oracle_perturbed_torus() {
        let m = find_model("perturbed_torus_3").unwrap();
        let p = [0.7, 2.1, 4.0];
        let c = fd_cross_check(&m, &FdQuantity::Sigma2, &p, 1e-4).unwrap();
        assert!(c.relative_defect() <= 1e-5, "{c:?}");
        assert!(c.defect() <= (c.jet - c.fd_coarse).abs() * 1.5 + 1e-9);
        let f = ScalarField::new("f", 3, |s: &[Jet]| &s[0].sin() + &(&s[1] * &s[2]).cos());
        let q = FdQuantity::LambdaStarEntry { f, i: 0, j: 1 };
        let c = fd_cross_check(&m, &q, &p, 1e-3).unwrap();
        assert!(c.relative_defect() <= 1e-4, "{c:?}");
    }
}
