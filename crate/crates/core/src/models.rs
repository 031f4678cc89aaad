//! Catalog of explicit model geometries used as fixtures.
//!
//! Each model carries a chart, closed-form curvature values, the
//! quadrature rule of every axis (for closed models), a set of smooth
//! "ambient" functions from which random test fields are assembled, and the
//! functions expected to lie in `ker γ*` and `ker Λ*`.
//!
//! The perturbed torus metric is `g_ij = δ_ij + ε a_ij(x)` on `[0, 2π)³`
//! with the fixed trigonometric polynomials
//!
//! ```text
//! a_00 = cos x1 + 0.5 sin(x0 + x2)      a_01 = 0.5 sin x2 + 0.3 cos(x0 + x1)
//! a_11 = sin x2 + 0.5 cos(x0 − x1)      a_02 = 0.4 cos(x1 − x2) + 0.2 sin x0
//! a_22 = cos x0 + 0.5 sin(x1 + x2)      a_12 = 0.3 sin(x0 + x1 + x2) + 0.2 cos x2
//! ```
//!
//! and `ε = 0.05` by default.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Axis, Chart, CurvatureFrame, GeometryError, ScalarField, TensorField};
use crate::jets::Jet;
use crate::operators::{sigma2, traceless_ricci};

/// Distance kept from the coordinate poles of spherical charts.
pub const POLE_MARGIN: f64 = 1e-2;

/// Random sample points on spheres keep this distance from the poles, where
/// coordinate expressions of higher derivatives lose accuracy as `1/sin^k`.
pub const SAMPLE_POLE_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("model `{model}` fails self-check `{check}`: {detail}")]
    SelfCheck {
        model: String,
        check: &'static str,
        detail: String,
    },
}

/// What kind of geometry a model is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Euclidean,
    FlatTorus,
    Sphere { radius: f64 },
    ProductSpheres { r1: f64, r2: f64 },
    PoincareBall,
    PerturbedTorus { epsilon: f64 },
}

/// Per-axis integration rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisRule {
    /// Uniform periodic (trapezoidal) nodes on `[0, 2π)`.
    Periodic,
    /// Polar angle whose volume factor is an odd power of `sin θ`:
    /// Gauss–Legendre in `cos θ`.
    PolarGaussCos,
    /// Polar angle whose volume factor is an even power of `sin θ`:
    /// interior uniform nodes `iπ/(N+1)` (Gauss–Chebyshev of the second kind in `cos θ`).
    PolarUniform,
}

/// Closed-form values for self-validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Known {
    pub scalar: Option<f64>,
    pub ricci_eigenvalues: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    pub einstein: bool,
    pub closed: bool,
    pub volume: Option<f64>,
}

type AmbientFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub kind: ModelKind,
    pub chart: Chart,
    pub params: BTreeMap<String, f64>,
    pub known: Known,
    pub axis_rules: Vec<AxisRule>,
    pub default_resolution: Vec<usize>,
    pub kernel_candidates: Vec<ScalarField>,
    pub negative_controls: Vec<ScalarField>,
    ambient: Option<Arc<AmbientFn>>,
    sample_axes: Vec<Axis>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("known", &self.known)
            .finish()
    }
}

impl ModelSpec {
    pub fn is_closed(&self) -> bool {
        self.known.closed
    }

    pub fn frame(&self, point: &[f64], order: usize) -> Result<CurvatureFrame, GeometryError> {
        CurvatureFrame::new(&self.chart, point, order)
    }

    /// Uniform random point inside the sampling box.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.sample_axes
            .iter()
            .map(|a| rng.gen_range(a.lo..a.hi))
            .collect()
    }

    pub fn sample_points(&self, rng: &mut impl Rng, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample_point(rng)).collect()
    }

    /// Number of ambient functions available for building test fields.
    pub fn ambient_count(&self) -> usize {
        match &self.ambient {
            Some(a) => a(&Jet::seeds(&vec![0.5; self.dim], 0).unwrap()).len(),
            None => 0,
        }
    }

    /// Random smooth function: a quadratic polynomial in the ambient functions.
    ///
    /// On charts without ambient functions (open patches) a trigonometric
    /// polynomial in the coordinates is used.
    pub fn random_scalar(&self, rng: &mut impl Rng) -> ScalarField {
        let m = self.ambient_count();
        let ambient = self.ambient_or_coordinates();
        let c0: f64 = rng.gen_range(-1.0..1.0);
        let lin: Vec<f64> = (0..m.max(2 * self.dim)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = lin.len();
        let quad: Vec<f64> = (0..k * (k + 1) / 2)
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect();
        ScalarField::new(format!("random_scalar[{}]", self.name), self.dim, move |s: &[Jet]| {
            let y = ambient(s);
            let mut out = Jet::constant(s[0].dim(), s[0].order(), c0);
            let mut q = quad.iter();
            for i in 0..y.len() {
                out.axpy_assign(lin[i], &y[i]);
                for j in i..y.len() {
                    out.axpy_assign(*q.next().unwrap(), &(&y[i] * &y[j]));
                }
            }
            out
        })
    }

    /// Random smooth symmetric 2-tensor `Σ A_IJ(y) dy^I dy^J` with `A` affine
    /// in the ambient functions `y`, plus a multiple of `δ` in coordinates on
    /// charts where that is smooth (tori, open patches).
    pub fn random_sym2(&self, rng: &mut impl Rng) -> TensorField {
        let n = self.dim;
        let ambient = self.ambient_or_coordinates();
        let m = self.ambient_count().max(2 * n);
        let pairs = m * (m + 1) / 2;
        let coeffs: Vec<Vec<f64>> = (0..pairs)
            .map(|_| (0..=m).map(|_| rng.gen_range(-0.5..0.5)).collect())
            .collect();
        let flat_part = match self.kind {
            ModelKind::Sphere { .. } | ModelKind::ProductSpheres { .. } => 0.0,
            _ => rng.gen_range(-1.0..1.0),
        };
        TensorField::sym2(
            format!("random_sym2[{}]", self.name),
            n,
            1,
            move |s: &[Jet]| {
                let y = ambient(s);
                let order = s[0].order() - 1;
                let dy: Vec<Vec<Jet>> = y
                    .iter()
                    .map(|yi| (0..n).map(|a| yi.diff_to(a, order)).collect())
                    .collect();
                let y: Vec<Jet> = y.iter().map(|yi| yi.truncate(order)).collect();
                let mut h = vec![Jet::zero(n, order); n * n];
                for a in 0..n {
                    h[a * n + a] = Jet::constant(n, order, flat_part);
                }
                // h = Σ_IJ M_IJ dy^I ⊗ dy^J with M symmetric and affine in y
                let m = y.len();
                let mut mat = vec![Jet::zero(n, order); m * m];
                let mut p = 0;
                for i in 0..m {
                    for j in i..m {
                        let c = &coeffs[p];
                        p += 1;
                        let w = if i == j { 1.0 } else { 0.5 };
                        let mut amp = Jet::constant(n, order, w * c[0]);
                        for (k, yk) in y.iter().enumerate() {
                            amp.axpy_assign(w * c[k + 1], yk);
                        }
                        mat[j * m + i] = amp.clone();
                        mat[i * m + j] = amp;
                    }
                }
                for a in 0..n {
                    let v: Vec<Jet> = (0..m)
                        .map(|j| {
                            let mut acc = Jet::zero(n, order);
                            for i in 0..m {
                                acc.fma_assign(&mat[i * m + j], &dy[i][a]);
                            }
                            acc
                        })
                        .collect();
                    for b in a..n {
                        let mut acc = h[a * n + b].clone();
                        for j in 0..m {
                            acc.fma_assign(&v[j], &dy[j][b]);
                        }
                        h[b * n + a] = acc.clone();
                        h[a * n + b] = acc;
                    }
                }
                h
            },
        )
    }

    fn ambient_or_coordinates(&self) -> Arc<AmbientFn> {
        match &self.ambient {
            Some(a) => a.clone(),
            None => Arc::new(|s: &[Jet]| {
                s.iter()
                    .flat_map(|x| [x.cos(), x.sin()])
                    .collect::<Vec<Jet>>()
            }),
        }
    }

    /// Checks the closed-form table against computed curvature at `points`.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<(), ModelError> {
        let fail = |check: &'static str, detail: String| ModelError::SelfCheck {
            model: self.name.clone(),
            check,
            detail,
        };
        for p in points {
            let frame = self.frame(p, 2)?;
            if let Some(r) = self.known.scalar {
                let d = (frame.scalar_curvature() - r).abs();
                if d > 1e-9 {
                    return Err(fail("scalar", format!("|R − {r}| = {d:e} at {p:?}")));
                }
            }
            if let Some(ev) = &self.known.ricci_eigenvalues {
                let got = frame.ricci_eigenvalues();
                let d = got
                    .iter()
                    .zip(ev)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if d > 1e-9 {
                    return Err(fail("ricci_eigenvalues", format!("{got:?} vs {ev:?}")));
                }
            }
            if let Some(s) = self.known.sigma2 {
                let d = (sigma2(&frame) - s).abs();
                if d > 1e-9 {
                    return Err(fail("sigma2", format!("|σ₂ − {s}| = {d:e}")));
                }
            }
            let traceless = traceless_ricci(&frame).max_abs();
            if self.known.einstein != (traceless <= 1e-10) {
                return Err(fail(
                    "einstein",
                    format!("flag {} but |R̊ic|∞ = {traceless:e}", self.known.einstein),
                ));
            }
        }
        Ok(())
    }
}

/// Overridable catalog parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogParams {
    pub sphere_radii: Vec<f64>,
    pub product_radii: Vec<[f64; 2]>,
    pub epsilon: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        CatalogParams {
            sphere_radii: vec![1.0, 2.0],
            product_radii: vec![[1.0, 1.0], [1.0, 2.0]],
            epsilon: 0.05,
        }
    }
}

fn radius_tag(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

pub fn model_catalog() -> Vec<ModelSpec> {
    model_catalog_with(&CatalogParams::default())
}

pub fn model_catalog_with(params: &CatalogParams) -> Vec<ModelSpec> {
    let mut out = vec![euclidean(2), euclidean(3), flat_torus(2), flat_torus(3)];
    for n in 2..=4 {
        for &r in &params.sphere_radii {
            out.push(sphere(n, r));
        }
    }
    for &[r1, r2] in &params.product_radii {
        out.push(product_spheres(r1, r2));
    }
    out.push(poincare_ball(2));
    out.push(poincare_ball(3));
    out.push(perturbed_torus(params.epsilon));
    out
}

pub fn find_model(name: &str) -> Result<ModelSpec, ModelError> {
    find_model_with(name, &CatalogParams::default())
}

pub fn find_model_with(name: &str, params: &CatalogParams) -> Result<ModelSpec, ModelError> {
    model_catalog_with(params)
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| ModelError::Unknown(name.to_string()))
}

/// Functions expected in `ker γ*` and `ker Λ*` for the named model.
pub fn kernel_candidates(name: &str) -> Result<Vec<ScalarField>, ModelError> {
    Ok(find_model(name)?.kernel_candidates)
}

fn constant_block(n: usize, s: &[Jet], diag: impl Fn(usize) -> f64) -> Vec<Jet> {
    let (d, o) = (s[0].dim(), s[0].order());
    (0..n * n)
        .map(|k| {
            let v = if k / n == k % n { diag(k / n) } else { 0.0 };
            Jet::constant(d, o, v)
        })
        .collect()
}

fn euclidean(n: usize) -> ModelSpec {
    let chart = Chart::new(format!("euclidean_{n}"), vec![Axis::open(-10.0, 10.0); n], move |s: &[Jet]| {
        constant_block(n, s, |_| 1.0)
    });
    ModelSpec {
        name: format!("euclidean_{n}"),
        dim: n,
        kind: ModelKind::Euclidean,
        sample_axes: vec![Axis::open(-2.0, 2.0); n],
        chart,
        params: BTreeMap::new(),
        known: Known {
            scalar: Some(0.0),
            ricci_eigenvalues: Some(vec![0.0; n]),
            sigma2: Some(0.0),
            einstein: true,
            closed: false,
            volume: None,
        },
        axis_rules: vec![],
        default_resolution: vec![],
        kernel_candidates: vec![],
        negative_controls: vec![],
        ambient: None,
    }
}

fn torus_ambient() -> Arc<AmbientFn> {
    Arc::new(|s: &[Jet]| s.iter().flat_map(|x| [x.cos(), x.sin()]).collect())
}

fn flat_torus(n: usize) -> ModelSpec {
    let chart = Chart::new(format!("flat_torus_{n}"), vec![Axis::periodic(TAU); n], move |s: &[Jet]| {
        constant_block(n, s, |_| 1.0)
    });
    ModelSpec {
        name: format!("flat_torus_{n}"),
        dim: n,
        kind: ModelKind::FlatTorus,
        sample_axes: vec![Axis::open(0.0, TAU); n],
        chart,
        params: BTreeMap::new(),
        known: Known {
            scalar: Some(0.0),
            ricci_eigenvalues: Some(vec![0.0; n]),
            sigma2: Some(0.0),
            einstein: true,
            closed: true,
            volume: Some(TAU.powi(n as i32)),
        },
        axis_rules: vec![AxisRule::Periodic; n],
        default_resolution: vec![if n == 2 { 32 } else { 16 }; n],
        kernel_candidates: vec![ScalarField::constant(n, 1.0)],
        negative_controls: vec![],
        ambient: Some(torus_ambient()),
    }
}

/// Unit ambient coordinates of `S^n` in spherical coordinates
/// `(ψ_1, …, ψ_{n−1}, φ)`: `cos ψ_1, sin ψ_1 cos ψ_2, …, sin ψ_1 ⋯ sin φ`.
fn sphere_embedding(angles: &[Jet]) -> Vec<Jet> {
    let n = angles.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = Jet::constant(angles[0].dim(), angles[0].order(), 1.0);
    for a in angles {
        out.push(&prod * &a.cos());
        prod = &prod * &a.sin();
    }
    out.push(prod);
    out
}

/// Diagonal of the round metric of radius `r`: `r² Π_{j<k} sin² ψ_j`.
fn sphere_metric_diag(angles: &[Jet], r: f64) -> Vec<Jet> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prod = Jet::constant(angles[0].dim(), angles[0].order(), r * r);
    for a in angles {
        out.push(prod.clone());
        let s = a.sin();
        prod = &prod * &(&s * &s);
    }
    out
}

fn sphere_axes(n: usize, margin: f64) -> Vec<Axis> {
    let mut axes = vec![Axis::open(margin, PI - margin); n - 1];
    axes.push(Axis::periodic(TAU));
    axes
}

fn sphere_rules(n: usize) -> Vec<AxisRule> {
    // polar angle k carries sin^(n-1-k) in the volume form
    let mut rules: Vec<AxisRule> = (0..n - 1)
        .map(|k| {
            if (n - 1 - k) % 2 == 1 {
                AxisRule::PolarGaussCos
            } else {
                AxisRule::PolarUniform
            }
        })
        .collect();
    rules.push(AxisRule::Periodic);
    rules
}

fn sphere_volume(n: usize, r: f64) -> f64 {
    let unit = match n {
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        4 => 8.0 * PI * PI / 3.0,
        _ => unimplemented!("sphere volume for n = {n}"),
    };
    unit * r.powi(n as i32)
}

pub(crate) fn sphere(n: usize, r: f64) -> ModelSpec {
    let name = format!("s{n}_r{}", radius_tag(r));
    let chart = Chart::new(name.clone(), sphere_axes(n, POLE_MARGIN), move |s: &[Jet]| {
        let diag = sphere_metric_diag(s, r);
        let (d, o) = (s[0].dim(), s[0].order());
        (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    diag[k / n].clone()
                } else {
                    Jet::zero(d, o)
                }
            })
            .collect()
    });
    let nf = n as f64;
    let scalar = nf * (nf - 1.0) / (r * r);
    let kernel_candidates = (0..=n)
        .map(|i| {
            ScalarField::new(format!("x{i}/r"), n, move |s: &[Jet]| {
                sphere_embedding(s).swap_remove(i)
            })
        })
        .collect();
    let negative_controls = vec![ScalarField::new("(x0/r)^2 + x1/r", n, |s: &[Jet]| {
        let y = sphere_embedding(s);
        &(&y[0] * &y[0]) + &y[1]
    })];
    let mut params = BTreeMap::new();
    params.insert("r".to_string(), r);
    ModelSpec {
        name,
        dim: n,
        kind: ModelKind::Sphere { radius: r },
        sample_axes: sphere_axes(n, SAMPLE_POLE_MARGIN)
            .into_iter()
            .map(|a| if a.periodic { Axis::open(0.0, TAU) } else { a })
            .collect(),
        chart,
        params,
        known: Known {
            scalar: Some(scalar),
            ricci_eigenvalues: Some(vec![(nf - 1.0) / (r * r); n]),
            sigma2: Some((nf - 2.0).powi(2) * scalar * scalar / (8.0 * nf * (nf - 1.0))),
            einstein: true,
            closed: true,
            volume: Some(sphere_volume(n, r)),
        },
        axis_rules: sphere_rules(n),
        default_resolution: match n {
            2 => vec![32, 64],
            3 => vec![24, 24, 48],
            _ => vec![12, 12, 12, 24],
        },
        kernel_candidates,
        negative_controls,
        ambient: Some(Arc::new(sphere_embedding)),
    }
}

fn product_spheres(r1: f64, r2: f64) -> ModelSpec {
    let name = format!("s2xs2_r{}_r{}", radius_tag(r1), radius_tag(r2));
    let mut axes = sphere_axes(2, POLE_MARGIN);
    axes.extend(sphere_axes(2, POLE_MARGIN));
    let chart = Chart::new(name.clone(), axes, move |s: &[Jet]| {
        let mut diag = sphere_metric_diag(&s[..2], r1);
        diag.extend(sphere_metric_diag(&s[2..], r2));
        let (d, o) = (s[0].dim(), s[0].order());
        (0..16)
            .map(|k| {
                if k / 4 == k % 4 {
                    diag[k / 4].clone()
                } else {
                    Jet::zero(d, o)
                }
            })
            .collect()
    });
    let (k1, k2) = (1.0 / (r1 * r1), 1.0 / (r2 * r2));
    let mut ev = vec![k1, k1, k2, k2];
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scalar = 2.0 * k1 + 2.0 * k2;
    let ric_sq: f64 = ev.iter().map(|l| l * l).sum();
    let einstein = r1 == r2;
    let mut params = BTreeMap::new();
    params.insert("r1".to_string(), r1);
    params.insert("r2".to_string(), r2);
    let sample: Vec<Axis> = sphere_axes(2, SAMPLE_POLE_MARGIN)
        .into_iter()
        .chain(sphere_axes(2, SAMPLE_POLE_MARGIN))
        .map(|a| if a.periodic { Axis::open(0.0, TAU) } else { a })
        .collect();
    let kernel_candidates = vec![];
    let negative_controls = vec![ScalarField::constant(4, 1.0)];
    ModelSpec {
        name,
        dim: 4,
        kind: ModelKind::ProductSpheres { r1, r2 },
        sample_axes: sample,
        chart,
        params,
        known: Known {
            scalar: Some(scalar),
            ricci_eigenvalues: Some(ev),
            sigma2: Some(-0.5 * ric_sq + 4.0 * scalar * scalar / 24.0),
            einstein,
            closed: true,
            volume: Some(16.0 * PI * PI * r1 * r1 * r2 * r2),
        },
        axis_rules: [sphere_rules(2), sphere_rules(2)].concat(),
        default_resolution: vec![8; 4],
        kernel_candidates,
        negative_controls,
        ambient: Some(Arc::new(|s: &[Jet]| {
            let mut y = sphere_embedding(&s[..2]);
            y.extend(sphere_embedding(&s[2..]));
            y
        })),
    }
}

fn poincare_ball(n: usize) -> ModelSpec {
    let name = format!("poincare_{n}");
    // |x| < 0.953 on the whole box for n ≤ 3, away from the boundary sphere
    let chart = Chart::new(name.clone(), vec![Axis::open(-0.55, 0.55); n], move |s: &[Jet]| {
        let (d, o) = (s[0].dim(), s[0].order());
        let mut rho = Jet::constant(d, o, 1.0);
        for x in s {
            rho -= &(x * x);
        }
        let w = rho.powf(-2.0).expect("inside the unit ball").scale(4.0);
        (0..n * n)
            .map(|k| if k / n == k % n { w.clone() } else { Jet::zero(d, o) })
            .collect()
    });
    let nf = n as f64;
    let scalar = -nf * (nf - 1.0);
    ModelSpec {
        name,
        dim: n,
        kind: ModelKind::PoincareBall,
        sample_axes: vec![Axis::open(-0.5, 0.5); n],
        chart,
        params: BTreeMap::new(),
        known: Known {
            scalar: Some(scalar),
            ricci_eigenvalues: Some(vec![-(nf - 1.0); n]),
            sigma2: Some((nf - 2.0).powi(2) * scalar * scalar / (8.0 * nf * (nf - 1.0))),
            einstein: true,
            closed: false,
            volume: None,
        },
        axis_rules: vec![],
        default_resolution: vec![],
        kernel_candidates: vec![],
        negative_controls: vec![],
        ambient: None,
    }
}

/// `a_ij(x)` of the perturbed torus, row-major.
pub(crate) fn torus_perturbation(s: &[Jet]) -> Vec<Jet> {
    let (x0, x1, x2) = (&s[0], &s[1], &s[2]);
    let a00 = &x1.cos() + &(x0 + x2).sin().scale(0.5);
    let a11 = &x2.sin() + &(x0 - x1).cos().scale(0.5);
    let a22 = &x0.cos() + &(x1 + x2).sin().scale(0.5);
    let a01 = &x2.sin().scale(0.5) + &(x0 + x1).cos().scale(0.3);
    let a02 = &(x1 - x2).cos().scale(0.4) + &x0.sin().scale(0.2);
    let a12 = &(&(x0 + x1) + x2).sin().scale(0.3) + &x2.cos().scale(0.2);
    vec![
        a00,
        a01.clone(),
        a02.clone(),
        a01,
        a11,
        a12.clone(),
        a02,
        a12,
        a22,
    ]
}

fn perturbed_torus(epsilon: f64) -> ModelSpec {
    let name = "perturbed_torus_3".to_string();
    let chart = Chart::new(name.clone(), vec![Axis::periodic(TAU); 3], move |s: &[Jet]| {
        let a = torus_perturbation(s);
        a.into_iter()
            .enumerate()
            .map(|(k, c)| {
                let c = c.scale(epsilon);
                if k / 3 == k % 3 {
                    c.add_scalar(1.0)
                } else {
                    c
                }
            })
            .collect()
    });
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), epsilon);
    ModelSpec {
        name,
        dim: 3,
        kind: ModelKind::PerturbedTorus { epsilon },
        sample_axes: vec![Axis::open(0.0, TAU); 3],
        chart,
        params,
        known: Known {
            scalar: None,
            ricci_eigenvalues: None,
            sigma2: None,
            einstein: false,
            closed: true,
            volume: None,
        },
        axis_rules: vec![AxisRule::Periodic; 3],
        default_resolution: vec![16; 3],
        kernel_candidates: vec![],
        negative_controls: vec![],
        ambient: Some(torus_ambient()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplacian_scalar, symmetric_eigenvalues};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_contents() {
        let names: Vec<String> = model_catalog().into_iter().map(|m| m.name).collect();
        for expected in [
            "euclidean_2",
            "euclidean_3",
            "flat_torus_2",
            "flat_torus_3",
            "s2_r1",
            "s3_r1",
            "s4_r1",
            "s3_r2",
            "s2xs2_r1_r1",
            "s2xs2_r1_r2",
            "poincare_2",
            "poincare_3",
            "perturbed_torus_3",
        ] {
            assert!(names.iter().any(|n| n == expected), "missing {expected}");
        }
        assert!(matches!(find_model("klein_bottle"), Err(ModelError::Unknown(_))));
    }

    #[test]
    fn every_model_self_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in model_catalog() {
            let pts = m.sample_points(&mut rng, 20);
            m.validate(&pts).unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn known_values() {
        let s3 = find_model("s3_r1").unwrap();
        assert_eq!(s3.known.scalar, Some(6.0));
        assert_eq!(s3.known.sigma2, Some(0.75));
        let s4 = find_model("s4_r1").unwrap();
        assert_eq!(s4.known.sigma2, Some(6.0));
        let p = find_model("s2xs2_r1_r2").unwrap();
        assert_eq!(p.known.scalar, Some(2.5));
        assert_eq!(p.known.ricci_eigenvalues, Some(vec![0.25, 0.25, 1.0, 1.0]));
        assert!(!p.known.einstein);
        let t = find_model("flat_torus_3").unwrap();
        assert_eq!(t.known.sigma2, Some(0.0));
        assert!(t.known.einstein);
    }

    #[test]
    fn kernel_candidate_lists() {
        let s2 = kernel_candidates("s2_r1").unwrap();
        assert_eq!(s2.len(), 3);
        let p = [1.1f64, 0.4];
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        let vals: Vec<f64> = s2.iter().map(|f| f.value(&p).unwrap()).collect();
        let expect = [ct, st * cp, st * sp];
        for (a, b) in vals.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(kernel_candidates("flat_torus_2").unwrap().len(), 1);
        assert!(kernel_candidates("perturbed_torus_3").unwrap().is_empty());
        assert!(kernel_candidates("nope").is_err());
    }

    #[test]
    fn sphere_candidates_are_first_eigenfunctions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["s2_r1", "s3_r1", "s3_r2", "s4_r1"] {
            let m = find_model(name).unwrap();
            let r = m.params["r"];
            let nf = m.dim as f64;
            for p in m.sample_points(&mut rng, 5) {
                let frame = m.frame(&p, 2).unwrap();
                for f in &m.kernel_candidates {
                    let lap = laplacian_scalar(&frame, f).unwrap();
                    let d = lap + nf / (r * r) * f.value(&p).unwrap();
                    assert!(d.abs() < 1e-10, "{name}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn perturbed_torus_is_positive_definite() {
        let m = find_model("perturbed_torus_3").unwrap();
        let k = 16;
        let h = TAU / k as f64;
        let mut smallest = f64::INFINITY;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    let p = [i as f64 * h, j as f64 * h, l as f64 * h];
                    let g = m.chart.metric_values(&p).unwrap();
                    smallest = smallest.min(symmetric_eigenvalues(3, g)[0]);
                }
            }
        }
        assert!(smallest >= 0.8, "{smallest}");
    }

    #[test]
    fn random_fields_are_deterministic() {
        let m = find_model("s2xs2_r1_r2").unwrap();
        let p = [1.0, 2.0, 0.5, 4.0];
        let a = m.random_sym2(&mut ChaCha8Rng::seed_from_u64(3)).jet(&p, 2).unwrap();
        let b = m.random_sym2(&mut ChaCha8Rng::seed_from_u64(3)).jet(&p, 2).unwrap();
        assert_eq!(a, b);
        let f = m.random_scalar(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(f.value(&p).unwrap(), f.value(&p).unwrap());
    }
}
